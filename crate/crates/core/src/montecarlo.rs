//! Seeded simulation of the rate-1 simple random walk: range (sausage)
//! functionals, walks killed by obstacles, and exit-time tails.
//!
//! Every estimator takes a master seed; sample `i` draws from its own
//! stream [`sample_stream`]`(seed, i)` and results are reduced in index
//! order, so estimates do not depend on the number of threads.
//!
//! None of the functionals here depend on the jump times, only on the jump
//! sequence up to time `t`, so a walk is drawn as a `Poisson(t)` number of
//! uniform nearest-neighbour steps. This has the same law as summing
//! `Exp(1)` holding times.

use std::collections::HashSet;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::env::Environment;
use crate::error::{param, Error, Result};
use crate::numeric::{mean_and_stderr, sample_stream};

#[derive(Debug, Clone, PartialEq)]
pub struct WalkSample {
    pub dim: usize,
    pub t: f64,
    pub jumps: u64,
    /// `|W(t)|`, counting the starting site.
    pub sausage_size: usize,
    /// Largest sup-norm distance from the start reached before `t`.
    pub max_displacement: u64,
    /// Per requested radius `r`: whether the displacement reached `r`.
    pub exit_flags: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
    pub seed: u64,
}

impl McEstimate {
    fn from_samples(samples: &[f64], seed: u64) -> Self {
        let (mean, std_error) = mean_and_stderr(samples);
        Self {
            mean,
            std_error,
            n: samples.len(),
            seed,
        }
    }

    /// `|self - value| <= k * max(std_error, floor)`.
    pub fn agrees_with(&self, value: f64, k: f64, floor: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error.max(floor)
    }
}

/// Visited set of one walk.
#[derive(Debug, Clone)]
pub(crate) enum Sausage {
    /// In one dimension the range is an interval.
    Interval(i64, i64),
    Set(HashSet<Vec<i64>>),
}

impl Sausage {
    pub fn len(&self) -> usize {
        match self {
            Sausage::Interval(lo, hi) => (hi - lo + 1) as usize,
            Sausage::Set(s) => s.len(),
        }
    }

    pub fn intersection_len(&self, other: &Sausage) -> usize {
        match (self, other) {
            (Sausage::Interval(a, b), Sausage::Interval(c, d)) => {
                let lo = *a.max(c);
                let hi = *b.min(d);
                if hi >= lo {
                    (hi - lo + 1) as usize
                } else {
                    0
                }
            }
            (Sausage::Set(x), Sausage::Set(y)) => {
                let (small, big) = if x.len() <= y.len() { (x, y) } else { (y, x) };
                small.iter().filter(|s| big.contains(*s)).count()
            }
            _ => panic!("sausages of different dimensions"),
        }
    }
}

pub(crate) struct WalkPath {
    pub jumps: u64,
    pub max_displacement: u64,
    pub sausage: Sausage,
}

fn jump_count<R: Rng + ?Sized>(t: f64, rng: &mut R) -> u64 {
    if t <= 0.0 {
        return 0;
    }
    Poisson::new(t).expect("positive rate").sample(rng) as u64
}

/// One walk from `start` up to time `t`.
pub(crate) fn run_walk<R: Rng + ?Sized>(start: &[i64], t: f64, rng: &mut R) -> WalkPath {
    let dim = start.len();
    let jumps = jump_count(t, rng);
    let mut pos = start.to_vec();
    let mut max_displacement = 0u64;
    if dim == 1 {
        let (mut lo, mut hi) = (start[0], start[0]);
        for _ in 0..jumps {
            pos[0] += if rng.random::<bool>() { 1 } else { -1 };
            lo = lo.min(pos[0]);
            hi = hi.max(pos[0]);
        }
        max_displacement = (start[0] - lo).max(hi - start[0]) as u64;
        return WalkPath {
            jumps,
            max_displacement,
            sausage: Sausage::Interval(lo, hi),
        };
    }
    let cap = 4 * (jumps as usize + 4 * (t.sqrt() as usize)) + 1;
    let mut set = HashSet::with_capacity(cap);
    set.insert(pos.clone());
    for _ in 0..jumps {
        let k = rng.random_range(0..2 * dim);
        let axis = k / 2;
        pos[axis] += if k % 2 == 0 { 1 } else { -1 };
        max_displacement = max_displacement.max((pos[axis] - start[axis]).unsigned_abs());
        if !set.contains(&pos) {
            set.insert(pos.clone());
        }
    }
    WalkPath {
        jumps,
        max_displacement,
        sausage: Sausage::Set(set),
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(param(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

fn check_samples(n: usize) -> Result<()> {
    if n == 0 {
        return Err(param("sample count must be at least 1"));
    }
    Ok(())
}

fn check_density_open(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(param(format!("density must satisfy 0 < p < 1, got {p}")));
    }
    Ok(())
}

pub fn simulate_walk<R: Rng + ?Sized>(
    dim: usize,
    t: f64,
    radii: &[f64],
    rng: &mut R,
) -> Result<WalkSample> {
    if dim == 0 {
        return Err(param("dimension must be at least 1"));
    }
    check_time(t)?;
    let path = run_walk(&vec![0; dim], t, rng);
    let exit_flags = radii
        .iter()
        .map(|&r| path.jumps > 0 && path.max_displacement as f64 >= r)
        .collect();
    Ok(WalkSample {
        dim,
        t,
        jumps: path.jumps,
        sausage_size: path.sausage.len(),
        max_displacement: path.max_displacement,
        exit_flags,
    })
}

/// Runs `f(i, rng_i)` for `i in 0..n` in parallel and reduces in order.
fn estimate<F>(n: usize, seed: u64, f: F) -> McEstimate
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> f64 + Sync,
{
    let samples: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .map(|i| f(&mut sample_stream(seed, i)))
        .collect();
    McEstimate::from_samples(&samples, seed)
}

/// `E e^{-ν|W(t)|}` with `ν = -ln(1 - p)`, which equals the annealed
/// survival probability `<p(0, t)>`.
pub fn annealed_mc(dim: usize, density: f64, t: f64, n: usize, seed: u64) -> Result<McEstimate> {
    check_density_open(density)?;
    check_time(t)?;
    check_samples(n)?;
    if dim == 0 {
        return Err(param("dimension must be at least 1"));
    }
    let nu = -(1.0 - density).ln();
    let origin = vec![0i64; dim];
    Ok(estimate(n, seed, |rng| {
        let path = run_walk(&origin, t, rng);
        (-nu * path.sausage.len() as f64).exp()
    }))
}

/// Covariance `<p(x,t), p(y,t)>` of quenched survival at two sites, from
/// independent walks `W_x`, `W_y` and the identity
/// `E[e^{-ν(|W_x|+|W_y|)} (e^{ν|W_x ∩ W_y|} - 1)]`.
///
/// With `truncation = Some(a)` a walk leaving `Λ(start, at)` contributes 0,
/// which estimates the covariance of the truncated survival probabilities.
pub fn correlation_mc(
    density: f64,
    x: &[i64],
    y: &[i64],
    t: f64,
    n: usize,
    seed: u64,
    truncation: Option<f64>,
) -> Result<McEstimate> {
    check_density_open(density)?;
    check_time(t)?;
    check_samples(n)?;
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            found: y.len(),
        });
    }
    if let Some(a) = truncation {
        if !(a > 0.0) {
            return Err(param(format!("truncation scale must be positive, got {a}")));
        }
    }
    let nu = -(1.0 - density).ln();
    let limit = truncation.map(|a| a * t);
    Ok(estimate(n, seed, |rng| {
        let wx = run_walk(x, t, rng);
        let wy = run_walk(y, t, rng);
        if let Some(r) = limit {
            if wx.max_displacement as f64 > r || wy.max_displacement as f64 > r {
                return 0.0;
            }
        }
        let common = wx.sausage.intersection_len(&wy.sausage);
        if common == 0 {
            return 0.0;
        }
        let total = (wx.sausage.len() + wy.sausage.len()) as f64;
        (-nu * total).exp() * (nu * common as f64).exp_m1()
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KilledEstimate {
    /// Fraction of walks that survived without leaving the box.
    pub estimate: McEstimate,
    /// Fraction of walks stopped at the box edge before `t` while alive.
    pub censored_fraction: f64,
}

impl KilledEstimate {
    /// The censored walks could have survived or not.
    pub fn bracket(&self) -> (f64, f64) {
        (
            self.estimate.mean,
            self.estimate.mean + self.censored_fraction,
        )
    }
}

/// Direct estimate of `p(x, t, w)`: walks from `x` die on entering an
/// obstacle; walks that leave the box are censored.
pub fn killed_walk_mc(
    env: &Environment,
    x: &[i64],
    t: f64,
    n: usize,
    seed: u64,
) -> Result<KilledEstimate> {
    check_time(t)?;
    check_samples(n)?;
    let start = env
        .index_of(x)
        .ok_or_else(|| Error::Domain(format!("site {x:?} outside the box")))?;
    let exact = |mean: f64| KilledEstimate {
        estimate: McEstimate {
            mean,
            std_error: 0.0,
            n,
            seed,
        },
        censored_fraction: 0.0,
    };
    if env.occupancy()[start] {
        return Ok(exact(0.0));
    }
    if t == 0.0 {
        return Ok(exact(1.0));
    }
    let dim = env.dim();
    let r = env.radius() as i64;
    // 0 dead, 1 alive, 2 censored
    let outcomes: Vec<u8> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let rng = &mut sample_stream(seed, i);
            let jumps = jump_count(t, rng);
            let mut pos = x.to_vec();
            for _ in 0..jumps {
                let k = rng.random_range(0..2 * dim);
                pos[k / 2] += if k % 2 == 0 { 1 } else { -1 };
                if pos[k / 2].abs() > r {
                    return 2;
                }
                if env.is_obstacle(&pos) == Some(true) {
                    return 0;
                }
            }
            1
        })
        .collect();
    let alive: Vec<f64> = outcomes
        .iter()
        .map(|&o| if o == 1 { 1.0 } else { 0.0 })
        .collect();
    let censored = outcomes.iter().filter(|&&o| o == 2).count();
    Ok(KilledEstimate {
        estimate: McEstimate::from_samples(&alive, seed),
        censored_fraction: censored as f64 / n as f64,
    })
}

/// Empirical probability that the sup-norm displacement reaches
/// `floor(a t)` before time `t`.
pub fn exit_time_tail_mc(a: f64, dim: usize, t: f64, n: usize, seed: u64) -> Result<McEstimate> {
    if !(a > 0.0) {
        return Err(param(format!("scale a must be positive, got {a}")));
    }
    if dim == 0 {
        return Err(param("dimension must be at least 1"));
    }
    check_time(t)?;
    check_samples(n)?;
    let target = (a * t).floor() as u64;
    let origin = vec![0i64; dim];
    Ok(estimate(n, seed, |rng| {
        let path = run_walk(&origin, t, rng);
        if path.max_displacement >= target {
            1.0
        } else {
            0.0
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_time_walk() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for d in 1..=3 {
            let w = simulate_walk(d, 0.0, &[0.0, 1.0], &mut rng).unwrap();
            assert_eq!(w.sausage_size, 1);
            assert_eq!(w.jumps, 0);
            assert!(w.exit_flags.iter().all(|&f| !f));
        }
    }

    #[test]
    fn sausage_is_bounded_by_jumps() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in 1..=3 {
            for _ in 0..200 {
                let w = simulate_walk(d, 15.0, &[], &mut rng).unwrap();
                assert!(w.sausage_size >= 1);
                assert!(w.sausage_size as u64 <= 1 + w.jumps);
                assert!(w.max_displacement <= w.jumps);
            }
        }
    }

    #[test]
    fn jump_count_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let t = 20.0;
        let total: u64 = (0..n)
            .map(|_| simulate_walk(2, t, &[], &mut rng).unwrap().jumps)
            .sum();
        let mean = total as f64 / n as f64;
        assert!((mean - t).abs() < 4.0 * (t / n as f64).sqrt());
    }

    #[test]
    fn annealed_at_time_zero() {
        let e = annealed_mc(1, 0.3, 0.0, 100, 5).unwrap();
        assert!((e.mean - 0.7).abs() < 1e-15);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn annealed_decreases_in_time() {
        let means: Vec<f64> = [1.0, 5.0, 10.0, 50.0]
            .iter()
            .map(|&t| annealed_mc(1, 0.5, t, 20_000, 3).unwrap().mean)
            .collect();
        assert!(means.windows(2).all(|w| w[0] > w[1]), "{means:?}");
    }

    #[test]
    fn estimates_are_reproducible() {
        let a = annealed_mc(2, 0.2, 7.0, 5000, 11).unwrap();
        let b = annealed_mc(2, 0.2, 7.0, 5000, 11).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let c = pool.install(|| annealed_mc(2, 0.2, 7.0, 5000, 11).unwrap());
        assert_eq!(a, c);
    }

    #[test]
    fn truncated_correlation_vanishes_when_far_apart() {
        let e = correlation_mc(0.5, &[0], &[25], 10.0, 5000, 1, Some(1.0)).unwrap();
        assert_eq!(e.mean, 0.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn killed_walk_trivial_cases() {
        let env = Environment::from_occupancy(
            1,
            3,
            0.5,
            0,
            vec![false, false, true, false, true, false, false],
        )
        .unwrap();
        assert_eq!(
            killed_walk_mc(&env, &[0], 0.0, 10, 1)
                .unwrap()
                .estimate
                .mean,
            1.0
        );
        assert_eq!(
            killed_walk_mc(&env, &[1], 2.0, 10, 1)
                .unwrap()
                .estimate
                .mean,
            0.0
        );
        let k = killed_walk_mc(&env, &[0], 2.0, 100_000, 1).unwrap();
        assert_eq!(k.censored_fraction, 0.0);
        let exact = (-2.0f64).exp();
        assert!((k.estimate.mean - exact).abs() < 3.0 * k.estimate.std_error);
        assert!(killed_walk_mc(&env, &[4], 1.0, 10, 1).is_err());
    }

    #[test]
    fn exit_tail_far_target() {
        let e = exit_time_tail_mc(10.0, 1, 10.0, 100_000, 4).unwrap();
        assert_eq!(e.mean, 0.0);
        let near = exit_time_tail_mc(0.5, 2, 10.0, 20_000, 4).unwrap().mean;
        let mid = exit_time_tail_mc(1.0, 2, 10.0, 20_000, 4).unwrap().mean;
        let far = exit_time_tail_mc(2.0, 2, 10.0, 20_000, 4).unwrap().mean;
        assert!(near > mid && mid > far);
    }
}
