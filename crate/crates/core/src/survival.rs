//! Quenched, truncated, averaged and annealed survival probabilities.
//!
//! The walk has total jump rate 1 and dies on its first visit to an
//! obstacle. On a finite free set `V` the survival probability is
//! `sum_y [exp(-tA)]_{xy}`, with `A` the Dirichlet operator of
//! [`crate::spectral`]; all values below come from that eigen-expansion.

use crate::env::{gap_structure, Environment, GapStructure, Site};
use crate::error::{param, Error, Result};
use crate::numeric::CompensatedSum;
use crate::spectral::{
    dense_spectrum, interval_eigenvalue, interval_eigenvector, interval_mass, principal_eigenvalue,
    SiteGraph,
};

/// Largest free component diagonalized densely by the survival routines.
pub const SURVIVAL_DENSE_CAP: usize = 1024;

/// Modes with `t(λ_n - λ_0)` beyond this contribute below `e^{-800}`
/// relative to the leading term and are dropped.
const MODE_CUTOFF: f64 = 800.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurvivalMode {
    Exact,
    /// The true value lies in `[value - error, value + error]`.
    Bounded,
    /// Truncated series; `error` bounds the neglected tail.
    Series,
}

impl SurvivalMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SurvivalMode::Exact => "exact",
            SurvivalMode::Bounded => "bounded",
            SurvivalMode::Series => "series",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalValue {
    pub value: f64,
    pub mode: SurvivalMode,
    pub error: f64,
    pub t: f64,
    pub x: Site,
}

impl SurvivalValue {
    fn exact(value: f64, t: f64, x: Site) -> Self {
        Self {
            value: value.clamp(0.0, 1.0),
            mode: SurvivalMode::Exact,
            error: 0.0,
            t,
            x,
        }
    }

    fn bracket(lo: f64, hi: f64, t: f64, x: Site) -> Self {
        let lo = lo.clamp(0.0, 1.0);
        let hi = hi.clamp(lo, 1.0);
        Self {
            value: 0.5 * (lo + hi),
            mode: SurvivalMode::Bounded,
            error: 0.5 * (hi - lo),
            t,
            x,
        }
    }

    pub fn lower(&self) -> f64 {
        self.value - self.error
    }

    pub fn upper(&self) -> f64 {
        self.value + self.error
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(param(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// Number of interval modes worth summing at time `t`.
fn active_modes(l: usize, t: f64) -> usize {
    if t == 0.0 {
        return l;
    }
    let lambda0 = interval_eigenvalue(l, 0);
    let mut n = 1;
    while n < l && t * (interval_eigenvalue(l, n) - lambda0) <= MODE_CUTOFF {
        n += 1;
    }
    n
}

/// `ln sum_n e^{-tλ_n} (ψ_n, 1)²` on an interval of length `l >= 1`.
pub fn log_interval_sum_survival(l: usize, t: f64) -> f64 {
    if l == 0 {
        return f64::NEG_INFINITY;
    }
    if t == 0.0 {
        return (l as f64).ln();
    }
    let lambda0 = interval_eigenvalue(l, 0);
    let mut s = CompensatedSum::new();
    // odd modes have zero mass
    for n in (0..active_modes(l, t)).step_by(2) {
        let m = interval_mass(l, n);
        s.add((-t * (interval_eigenvalue(l, n) - lambda0)).exp() * m * m);
    }
    -t * lambda0 + s.value().ln()
}

/// `sum_{x in I} p(x, t)` for an interval `I` of `l` free sites flanked by
/// obstacles. Returns 0 for `l = 0`.
pub fn interval_sum_survival(l: usize, t: f64) -> f64 {
    if t == 0.0 {
        return l as f64;
    }
    log_interval_sum_survival(l, t).exp()
}

/// The two-term sandwich `e^{-tλ_0} A <= S <= e^{-tλ_0}(A + e^{-t(λ_1-λ_0)}(l - A))`
/// with `A = (ψ_0, 1)²`.
pub fn interval_sum_bounds(l: usize, t: f64) -> (f64, f64) {
    if l == 0 {
        return (0.0, 0.0);
    }
    let m0 = interval_mass(l, 0);
    let a = m0 * m0;
    let lead = (-t * interval_eigenvalue(l, 0)).exp();
    if l == 1 {
        return (lead * a, lead * a);
    }
    let gap = interval_eigenvalue(l, 1) - interval_eigenvalue(l, 0);
    (
        lead * a,
        lead * (a + (-t * gap).exp() * (l as f64 - a).max(0.0)),
    )
}

/// `p(x, t)` at offset `x` (0-based) inside an interval of length `l`.
pub fn interval_point_survival(l: usize, x: usize, t: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let lambda0 = interval_eigenvalue(l, 0);
    let mut s = CompensatedSum::new();
    for n in (0..active_modes(l, t)).step_by(2) {
        let w = (-t * (interval_eigenvalue(l, n) - lambda0)).exp();
        s.add(w * interval_mass(l, n) * interval_eigenvector(l, n, x));
    }
    ((-t * lambda0).exp() * s.value()).clamp(0.0, 1.0)
}

/// `p(x, t)` at every site of an interval of length `l`.
pub fn interval_profile(l: usize, t: f64) -> Vec<f64> {
    (0..l).map(|x| interval_point_survival(l, x, t)).collect()
}

pub fn quenched_survival_1d(gaps: &GapStructure, x: i64, t: f64) -> Result<SurvivalValue> {
    check_time(t)?;
    if x < gaps.box_left || x > gaps.box_right {
        return Err(Error::Domain(format!(
            "site {x} outside the box [{}, {}]",
            gaps.box_left, gaps.box_right
        )));
    }
    let Some(iv) = gaps.interval_containing(x) else {
        return Ok(SurvivalValue::exact(0.0, t, vec![x]));
    };
    let v = interval_point_survival(iv.length, (x - iv.left) as usize, t);
    if iv.is_truncated() {
        Ok(SurvivalValue::bracket(v, 1.0, t, vec![x]))
    } else {
        Ok(SurvivalValue::exact(v, t, vec![x]))
    }
}

/// Survival jointly with staying inside `u`: the walk is killed by
/// obstacles and on leaving `u`.
pub fn truncated_survival(
    env: &Environment,
    x: &[i64],
    t: f64,
    u: &[Site],
) -> Result<SurvivalValue> {
    check_time(t)?;
    if !u.iter().any(|s| s.as_slice() == x) {
        return Err(Error::Domain(format!("starting site {x:?} not in U")));
    }
    let mut free: Vec<Site> = Vec::with_capacity(u.len());
    for s in u {
        match env.is_obstacle(s) {
            None => {
                return Err(Error::Domain(format!(
                    "site {s:?} of U lies outside the box"
                )))
            }
            Some(false) => free.push(s.clone()),
            Some(true) => {}
        }
    }
    if env.is_obstacle(x) == Some(true) {
        return Ok(SurvivalValue::exact(0.0, t, x.to_vec()));
    }
    if t == 0.0 {
        return Ok(SurvivalValue::exact(1.0, t, x.to_vec()));
    }
    let graph = SiteGraph::new(&free, env.dim())?;
    let start = free
        .iter()
        .position(|s| s.as_slice() == x)
        .expect("x is free and in U");
    let comp = graph
        .components()
        .into_iter()
        .find(|c| c.binary_search(&start).is_ok())
        .expect("every site lies in a component");
    let comp_sites: Vec<Site> = comp.iter().map(|&i| free[i].clone()).collect();
    let spec = dense_spectrum(&comp_sites, env.dim(), SURVIVAL_DENSE_CAP)?;
    let row = comp.binary_search(&start).expect("start in its component");
    let lambda0 = spec.eigenvalues[0];
    let masses = spec.masses();
    let mut s = CompensatedSum::new();
    for (n, (&lam, &m)) in spec.eigenvalues.iter().zip(&masses).enumerate() {
        s.add((-t * (lam - lambda0)).exp() * m * spec.eigenvectors[(row, n)]);
    }
    Ok(SurvivalValue::exact(
        (-t * lambda0).exp() * s.value(),
        t,
        x.to_vec(),
    ))
}

/// `(1/|Λ_L|) sum_{y in Λ_L} p(y, t)`, exact when every free component
/// meeting `Λ_L` is enclosed by obstacles inside the environment box, and a
/// bracket otherwise (components reaching the box edge may continue).
pub fn averaged_survival(env: &Environment, t: f64, scale: usize) -> Result<SurvivalValue> {
    check_time(t)?;
    if scale > env.radius() {
        return Err(Error::Domain(format!(
            "scale {scale} exceeds environment radius {}",
            env.radius()
        )));
    }
    let origin = vec![0i64; env.dim()];
    let volume = (2 * scale + 1).pow(env.dim() as u32) as f64;
    let (lo, hi) = if env.dim() == 1 {
        averaged_sum_1d(env, t, scale)?
    } else {
        averaged_sum_nd(env, t, scale)?
    };
    if lo == hi {
        Ok(SurvivalValue::exact(lo / volume, t, origin))
    } else {
        Ok(SurvivalValue::bracket(lo / volume, hi / volume, t, origin))
    }
}

fn averaged_sum_1d(env: &Environment, t: f64, scale: usize) -> Result<(f64, f64)> {
    let gaps = gap_structure(env)?;
    let (a, b) = (-(scale as i64), scale as i64);
    let mut lo = CompensatedSum::new();
    let mut slack = CompensatedSum::new();
    for iv in &gaps.intervals {
        if iv.length == 0 || iv.right < a || iv.left > b {
            continue;
        }
        let from = iv.left.max(a);
        let to = iv.right.min(b);
        let inside = if from == iv.left && to == iv.right {
            interval_sum_survival(iv.length, t)
        } else {
            (from..=to)
                .map(|x| interval_point_survival(iv.length, (x - iv.left) as usize, t))
                .sum()
        };
        lo.add(inside);
        if iv.is_truncated() {
            slack.add((to - from + 1) as f64 - inside);
        }
    }
    let lo = lo.value();
    Ok((lo, lo + slack.value()))
}

fn averaged_sum_nd(env: &Environment, t: f64, scale: usize) -> Result<(f64, f64)> {
    let shape = env.shape();
    let in_scale = |i: usize| {
        shape
            .coords(i)
            .iter()
            .all(|c| c.unsigned_abs() as usize <= scale)
    };
    let mut seen = vec![false; env.len()];
    let mut lo = CompensatedSum::new();
    let mut slack = CompensatedSum::new();
    for i in 0..env.len() {
        if seen[i] || env.occupancy()[i] || !in_scale(i) {
            continue;
        }
        let (comp, touches) = crate::env::component_indices(env, i, &mut seen);
        if comp.len() > SURVIVAL_DENSE_CAP {
            return Err(Error::Size {
                size: comp.len(),
                cap: SURVIVAL_DENSE_CAP,
            });
        }
        let sites: Vec<Site> = comp.iter().map(|&j| env.site_of(j)).collect();
        let spec = dense_spectrum(&sites, env.dim(), SURVIVAL_DENSE_CAP)?;
        let inner: Vec<usize> = (0..comp.len()).filter(|&k| in_scale(comp[k])).collect();
        let masses = spec.masses();
        let lambda0 = spec.eigenvalues[0];
        let mut s = CompensatedSum::new();
        for (n, (&lam, &m)) in spec.eigenvalues.iter().zip(&masses).enumerate() {
            let local: f64 = inner.iter().map(|&k| spec.eigenvectors[(k, n)]).sum();
            s.add((-t * (lam - lambda0)).exp() * m * local);
        }
        let inside = ((-t * lambda0).exp() * s.value()).clamp(0.0, inner.len() as f64);
        lo.add(inside);
        if touches {
            slack.add(inner.len() as f64 - inside);
        }
    }
    let lo = lo.value();
    Ok((lo, lo + slack.value()))
}

fn check_density_open(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(param(format!("density must satisfy 0 < p < 1, got {p}")));
    }
    Ok(())
}

fn check_tail_tol(tail_tol: f64) -> Result<()> {
    if !(tail_tol > 0.0) {
        return Err(param(format!(
            "tail tolerance must be positive, got {tail_tol}"
        )));
    }
    Ok(())
}

/// Bound on `sum_{L > n} p² q^L L`, the neglected mass after gap length `n`.
fn gap_tail_bound(p: f64, n: usize) -> f64 {
    let q = 1.0 - p;
    ((n + 1) as f64 * q.ln()).exp() * (1.0 + n as f64 * p)
}

/// `<p(0, t)>` in one dimension as a series over the gap around the origin.
///
/// The origin is free with `a` free sites to its left and `b` to its right,
/// then an obstacle on each side, with probability `p² (1-p)^{a+b+1}`.
/// Summing over the origin's offset in a gap of length `L = a+b+1` gives
/// `<p(0,t)> = sum_L p² (1-p)^L S(L, t)`, with `S` the interval sum.
pub fn annealed_exact_1d(p: f64, t: f64, tail_tol: f64) -> Result<SurvivalValue> {
    check_density_open(p)?;
    check_time(t)?;
    check_tail_tol(tail_tol)?;
    if t == 0.0 {
        return Ok(SurvivalValue::exact(1.0 - p, 0.0, vec![0]));
    }
    let (lq, lp2) = ((1.0 - p).ln(), 2.0 * p.ln());
    let mut s = CompensatedSum::new();
    let mut n = 0usize;
    loop {
        n += 1;
        s.add((lp2 + n as f64 * lq + log_interval_sum_survival(n, t)).exp());
        if gap_tail_bound(p, n) <= tail_tol {
            break;
        }
    }
    Ok(SurvivalValue {
        value: s.value().clamp(0.0, 1.0),
        mode: SurvivalMode::Series,
        error: tail_tol,
        t,
        x: vec![0],
    })
}

/// `E[p(0, t)²]` in one dimension, same series as [`annealed_exact_1d`] with
/// squared pointwise values.
pub fn annealed_second_moment_1d(p: f64, t: f64, tail_tol: f64) -> Result<f64> {
    check_density_open(p)?;
    check_time(t)?;
    check_tail_tol(tail_tol)?;
    let q = 1.0 - p;
    let mut s = CompensatedSum::new();
    let mut n = 0usize;
    loop {
        n += 1;
        let sq: f64 = interval_profile(n, t).iter().map(|v| v * v).sum();
        s.add(p * p * q.powi(n as i32) * sq);
        if gap_tail_bound(p, n) <= tail_tol {
            break;
        }
    }
    Ok(s.value())
}

/// `J(x) = x asinh(x) - sqrt(1 + x²) + 1`, the Legendre transform of
/// `cosh(θ) - 1`.
pub fn rate_function_j(x: f64) -> f64 {
    x * x.asinh() - (1.0 + x * x).sqrt() + 1.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationBound {
    pub a: f64,
    pub d: usize,
    pub t: f64,
    pub k1: f64,
    pub k2: f64,
    pub bound: f64,
}

/// Bound on the probability that the walk leaves `Λ(x, at)` before `t`:
/// `2d e^{asinh(ad)} e^{-t J(ad)/d}`, from a Chernoff bound on the net
/// displacement along one axis.
pub fn truncation_gap_bound(a: f64, dim: usize, t: f64) -> Result<TruncationBound> {
    if !(a > 0.0) {
        return Err(param(format!("scale a must be positive, got {a}")));
    }
    if dim == 0 {
        return Err(param("dimension must be at least 1"));
    }
    check_time(t)?;
    let d = dim as f64;
    let k1 = 2.0 * d * (a * d).asinh().exp();
    let k2 = rate_function_j(a * d) / d;
    Ok(TruncationBound {
        a,
        d: dim,
        t,
        k1,
        k2,
        bound: k1 * (-k2 * t).exp(),
    })
}

/// Sup-norm ball `Λ(x, r)` with `r = floor(radius)`.
pub fn ball(x: &[i64], radius: f64) -> Vec<Site> {
    let r = radius.floor() as i64;
    let mut out = vec![x.to_vec()];
    for axis in 0..x.len() {
        let mut next = Vec::with_capacity(out.len() * (2 * r as usize + 1));
        for s in &out {
            for off in -r..=r {
                let mut z = s.clone();
                z[axis] = x[axis] + off;
                next.push(z);
            }
        }
        out = next;
    }
    out.sort();
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalBounds {
    /// `(1/|U|) e^{-λ_0(U ∩ free) t}` with `U = Λ(x, at)`; bounds the local
    /// average `(1/|U|) sum_{z in U} p(z, t)` from below.
    pub lower: f64,
    /// `k_1 e^{-k_2 t} + (2at + 1)^{d/2} e^{-λ_0 t}`; bounds `p(x, t)`.
    pub upper: f64,
    /// `λ_0` of the free part of the ball, `+inf` if it has no free site.
    pub lambda0: f64,
    pub truncation: TruncationBound,
}

pub fn survival_bounds(env: &Environment, x: &[i64], t: f64, a: f64) -> Result<SurvivalBounds> {
    check_time(t)?;
    let truncation = truncation_gap_bound(a, env.dim(), t)?;
    let r = a * t;
    let reach = r.floor() as i64;
    if x.len() != env.dim() {
        return Err(Error::Dimension {
            expected: env.dim(),
            found: x.len(),
        });
    }
    let rad = env.radius() as i64;
    if x.iter().any(|&c| c - reach < -rad || c + reach > rad) {
        return Err(Error::Domain(format!(
            "ball of radius {r} around {x:?} exceeds the box of radius {rad}"
        )));
    }
    let u = ball(x, r);
    let free: Vec<Site> = u
        .iter()
        .filter(|s| env.is_obstacle(s) == Some(false))
        .cloned()
        .collect();
    let lambda0 = if free.is_empty() {
        f64::INFINITY
    } else {
        principal_eigenvalue(&free, env.dim())?
    };
    let decay = if t == 0.0 { 1.0 } else { (-lambda0 * t).exp() };
    let upper = truncation.bound + (2.0 * r + 1.0).powf(env.dim() as f64 / 2.0) * decay;
    let lower = decay / u.len() as f64;
    Ok(SurvivalBounds {
        lower,
        upper,
        lambda0,
        truncation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::sample_environment;
    use approx::assert_relative_eq;

    fn env1(bits: &[u8]) -> Environment {
        let occ = bits.iter().map(|&b| b == 1).collect();
        Environment::from_occupancy(1, bits.len() / 2, 0.5, 0, occ).unwrap()
    }

    #[test]
    fn single_site_and_pair() {
        let env = env1(&[1, 1, 0, 1, 1]);
        let g = gap_structure(&env).unwrap();
        for t in [0.0, 0.3, 2.0, 7.5] {
            let v = quenched_survival_1d(&g, 0, t).unwrap();
            assert_relative_eq!(v.value, (-t).exp(), epsilon = 1e-15);
            assert_eq!(v.mode, SurvivalMode::Exact);
        }
        let env = env1(&[1, 1, 0, 0, 1]);
        let g = gap_structure(&env).unwrap();
        for x in [0, 1] {
            let v = quenched_survival_1d(&g, x, 1.0).unwrap();
            assert_relative_eq!(v.value, (-0.5f64).exp(), epsilon = 1e-15);
        }
        assert_eq!(quenched_survival_1d(&g, -1, 1.0).unwrap().value, 0.0);
        assert!(matches!(
            quenched_survival_1d(&g, 3, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn truncated_gap_gives_bracket() {
        let env = env1(&[0, 0, 0, 1, 0]);
        let g = gap_structure(&env).unwrap();
        let v = quenched_survival_1d(&g, -1, 2.0).unwrap();
        assert_eq!(v.mode, SurvivalMode::Bounded);
        assert_relative_eq!(v.upper(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(
            v.lower(),
            interval_point_survival(3, 1, 2.0),
            epsilon = 1e-15
        );
    }

    #[test]
    fn interval_sum_examples() {
        assert_relative_eq!(
            interval_sum_survival(1, 3.0),
            (-3.0f64).exp(),
            epsilon = 1e-15
        );
        assert_relative_eq!(
            interval_sum_survival(2, 1.0),
            2.0 * (-0.5f64).exp(),
            epsilon = 1e-14
        );
        assert_relative_eq!(interval_sum_survival(2, 1.0), 1.21306, epsilon = 1e-5);
        for l in [1, 4, 17, 300] {
            assert_eq!(interval_sum_survival(l, 0.0), l as f64);
            let profile_sum: f64 = interval_profile(l, 1.7).iter().sum();
            assert_relative_eq!(
                profile_sum,
                interval_sum_survival(l, 1.7),
                max_relative = 1e-12
            );
        }
        assert_eq!(interval_sum_survival(0, 1.0), 0.0);
    }

    #[test]
    fn sandwich_holds_on_a_grid() {
        for l in [1, 2, 3, 10, 57, 400, 2000] {
            for t in [0.0, 0.1, 1.0, 10.0, 1e3, 1e5] {
                let s = interval_sum_survival(l, t);
                let (lo, hi) = interval_sum_bounds(l, t);
                assert!(
                    lo <= s * (1.0 + 1e-12) && s <= hi * (1.0 + 1e-12),
                    "l={l} t={t}"
                );
            }
        }
    }

    #[test]
    fn truncated_survival_cases() {
        let env = env1(&[1, 0, 0, 0, 0, 1, 1]);
        let g = gap_structure(&env).unwrap();
        let u: Vec<Site> = (-3..=3).map(|x| vec![x]).collect();
        for x in [-2, 0, 1] {
            let a = truncated_survival(&env, &[x], 2.5, &u).unwrap().value;
            let b = quenched_survival_1d(&g, x, 2.5).unwrap().value;
            assert!((a - b).abs() < 1e-12);
        }
        let single = vec![vec![0]];
        assert_relative_eq!(
            truncated_survival(&env, &[0], 1.3, &single).unwrap().value,
            (-1.3f64).exp(),
            epsilon = 1e-14
        );
        assert_eq!(truncated_survival(&env, &[-3], 1.0, &u).unwrap().value, 0.0);
        assert!(truncated_survival(&env, &[0], 1.0, &[vec![1]]).is_err());
    }

    #[test]
    fn averaged_alternating_occupancy() {
        let bits: Vec<u8> = (0..41).map(|i| if i % 2 == 0 { 1 } else { 0 }).collect();
        let env = env1(&bits);
        let l = 20;
        let v = averaged_survival(&env, 3.0, l).unwrap();
        assert_eq!(v.mode, SurvivalMode::Exact);
        let free = 20.0;
        assert_relative_eq!(v.value, free / 41.0 * (-3.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn averaged_empty_box_is_bracket() {
        let env = sample_environment(1, 10, 0.0, 3).unwrap();
        let v = averaged_survival(&env, 5.0, 10).unwrap();
        assert_eq!(v.mode, SurvivalMode::Bounded);
        assert_relative_eq!(v.upper(), 1.0, epsilon = 1e-14);
        let env = sample_environment(2, 3, 0.0, 3).unwrap();
        let v = averaged_survival(&env, 5.0, 2).unwrap();
        assert_eq!(v.mode, SurvivalMode::Bounded);
        assert!(averaged_survival(&env, 5.0, 4).is_err());
    }

    #[test]
    fn averaged_matches_sitewise_mean() {
        let env = sample_environment(1, 400, 0.3, 12).unwrap();
        let g = gap_structure(&env).unwrap();
        for t in [0.5, 4.0, 30.0] {
            let v = averaged_survival(&env, t, 300).unwrap();
            let sites: Vec<SurvivalValue> = (-300..=300)
                .map(|x| quenched_survival_1d(&g, x, t).unwrap())
                .collect();
            let mean = sites.iter().map(|s| s.value).sum::<f64>() / 601.0;
            assert!((v.value - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn averaged_two_dimensional_matches_truncated() {
        let env = sample_environment(2, 6, 0.45, 4).unwrap();
        let scale = 2;
        let t = 1.5;
        let v = averaged_survival(&env, t, scale).unwrap();
        let whole: Vec<Site> = (0..env.len()).map(|i| env.site_of(i)).collect();
        let mut sum = 0.0;
        for s in ball(&[0, 0], scale as f64) {
            sum += truncated_survival(&env, &s, t, &whole).unwrap().value;
        }
        assert!((v.lower() - sum / 25.0).abs() < 1e-12);
    }

    #[test]
    fn annealed_series_basics() {
        assert_eq!(annealed_exact_1d(0.3, 0.0, 1e-12).unwrap().value, 0.7);
        assert!(annealed_exact_1d(0.3, 1.0, 0.0).is_err());
        assert!(annealed_exact_1d(0.0, 1.0, 1e-9).is_err());
        let a = annealed_exact_1d(0.5, 10.0, 1e-10).unwrap();
        let b = annealed_exact_1d(0.5, 10.0, 1e-11).unwrap();
        assert!((a.value - b.value).abs() <= a.error);
        // small t: <p> = E e^{-ν|W|}, and |W(t)| = 1 with probability e^{-t}
        let t = 1e-4;
        let v = annealed_exact_1d(0.5, t, 1e-15).unwrap().value;
        assert!((v - 0.5 * (1.0 - t) - 0.25 * t).abs() < 1e-7);
    }

    #[test]
    fn j_values() {
        assert_eq!(rate_function_j(0.0), 0.0);
        let j1 = (1.0 + 2f64.sqrt()).ln() - 2f64.sqrt() + 1.0;
        assert_relative_eq!(rate_function_j(1.0), j1, epsilon = 1e-15);
        assert_relative_eq!(rate_function_j(1.0), 0.46716, epsilon = 1e-6);
        // Chernoff exponent sup_θ (xθ - (cosh θ - 1)) by golden-section search
        for x in [0.3, 1.0, 2.5] {
            let f = |th: f64| x * th - (th.cosh() - 1.0);
            let (mut lo, mut hi) = (0.0f64, 10.0f64);
            for _ in 0..200 {
                let m1 = lo + (hi - lo) * 0.382;
                let m2 = lo + (hi - lo) * 0.618;
                if f(m1) < f(m2) {
                    lo = m1;
                } else {
                    hi = m2;
                }
            }
            assert_relative_eq!(f(0.5 * (lo + hi)), rate_function_j(x), epsilon = 1e-10);
        }
        let b = truncation_gap_bound(1.0, 1, 50.0).unwrap();
        assert_relative_eq!(b.k2, rate_function_j(1.0), epsilon = 1e-15);
        assert!(truncation_gap_bound(0.0, 1, 1.0).is_err());
    }

    #[test]
    fn bounds_bracket_exact_values() {
        let env = sample_environment(1, 200, 0.4, 17).unwrap();
        let g = gap_structure(&env).unwrap();
        let t = 6.0;
        let a = 2.0;
        let b = survival_bounds(&env, &[0], t, a).unwrap();
        let p = quenched_survival_1d(&g, 0, t).unwrap().value;
        assert!(p <= b.upper);
        let u = ball(&[0], a * t);
        let avg: f64 = u
            .iter()
            .map(|s| quenched_survival_1d(&g, s[0], t).unwrap().value)
            .sum::<f64>()
            / u.len() as f64;
        assert!(avg >= b.lower);
        assert!(survival_bounds(&env, &[190], t, a).is_err());
        assert!(survival_bounds(&env, &[0], 0.0, a).unwrap().upper >= 1.0);
    }
}
