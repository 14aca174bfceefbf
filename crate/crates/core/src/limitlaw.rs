//! One-dimensional limit laws for the averaged survival sum at scales
//! `L(t) = exp(ν [γ c_2 t^{1/3} / ν]_-)`.
//!
//! Each gap of length `l` carries the interval sum `S(l, t)`; after
//! normalization `Y(l) = S(l, t) / (s_1 t^{1/3} e^{-4tℓ_1/b²})` with
//! `b = bracket(t)`, sums of `n(t)` i.i.d. copies converge to infinitely
//! divisible laws whose Lévy measure is atomic, with atoms at
//! `z_j = (1-p)^{j/a_1}` of mass `m_j = (2cp²/(1-p)²)(1-p)^{-j}`.
//! The gap of length `b - 1 - j` feeds atom `z_j`.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::env::{gap_structure, stratified_gap_histogram, Environment};
use crate::error::{param, Error, Result};
use crate::numeric::{floor_left, sample_stream, CompensatedSum};
use crate::regimes::{constants, gamma2};
use crate::spectral::ELL1;
use crate::survival::{averaged_survival, interval_sum_survival, log_interval_sum_survival};

/// `a_1` is treated as having reached 2 within this distance, so that
/// `γ = γ_2` is rejected despite rounding in `((3/2)γ_2)³`.
const A1_SNAP: f64 = 1e-12;

/// Atom lists longer than this are refused.
pub const MAX_ATOMS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingParams {
    pub gamma: f64,
    pub p: f64,
    /// Gap-count constant: `n(t) = 2 floor(c L(t) p/(1-p)) + 1`.
    pub c: f64,
    pub nu: f64,
    pub c2: f64,
    /// `((3/2) γ)³`
    pub a1: f64,
    /// `γ c_2 / (ℓ_1 ν)`
    pub s1: f64,
}

pub fn scaling_params(gamma: f64, p: f64, c: f64) -> Result<ScalingParams> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(param(format!("gamma must be positive, got {gamma}")));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(param(format!(
            "gap-count constant c must be positive, got {c}"
        )));
    }
    let k = constants(1, p)?;
    Ok(ScalingParams {
        gamma,
        p,
        c,
        nu: k.nu,
        c2: k.c2,
        a1: (1.5 * gamma).powi(3),
        s1: gamma * k.c2 / (ELL1 * k.nu),
    })
}

impl ScalingParams {
    fn q(&self) -> f64 {
        1.0 - self.p
    }

    /// `γ c_2 t^{1/3} / ν`
    pub fn beta_scale(&self, t: f64) -> f64 {
        self.gamma * self.c2 * t.cbrt() / self.nu
    }

    /// `[γ c_2 t^{1/3} / ν]_-`
    pub fn bracket(&self, t: f64) -> i64 {
        floor_left(self.beta_scale(t))
    }

    /// `L(t) = e^{ν bracket(t)}`
    pub fn scale(&self, t: f64) -> f64 {
        (self.nu * self.bracket(t) as f64).exp()
    }

    /// `n(t) = 2 floor(c L(t) p/(1-p)) + 1`.
    pub fn gap_count(&self, t: f64) -> Result<u64> {
        let r = (self.c * self.scale(t) * self.p / self.q()).floor();
        if !(r < 4.0e18) {
            return Err(param(format!("gap count at t = {t} overflows 64 bits")));
        }
        Ok(2 * r as u64 + 1)
    }

    /// `ln(s_1 t^{1/3}) - 4tℓ_1/bracket(t)²`
    pub fn log_normalizer(&self, t: f64) -> Result<f64> {
        let b = self.bracket(t);
        if b < 1 {
            return Err(Error::TimeTooSmall(t));
        }
        Ok((self.s1 * t.cbrt()).ln() - 4.0 * t * ELL1 / (b * b) as f64)
    }

    pub fn normalizer(&self, t: f64) -> Result<f64> {
        self.log_normalizer(t).map(f64::exp)
    }

    /// Largest time with the given bracket (the right end of its window),
    /// nudged inside by a relative `1e-12`.
    pub fn time_for_bracket(&self, b: i64) -> Result<f64> {
        if b < 1 {
            return Err(param(format!("bracket must be at least 1, got {b}")));
        }
        let mut t = ((b + 1) as f64 * self.nu / (self.gamma * self.c2)).powi(3) * (1.0 - 1e-12);
        while self.bracket(t) > b {
            t *= 1.0 - 1e-12;
        }
        debug_assert_eq!(self.bracket(t), b);
        Ok(t)
    }

    /// `Y(l) = S(l, t) / normalizer(t)`.
    pub fn y(&self, l: usize, t: f64) -> Result<f64> {
        if l == 0 {
            return Ok(0.0);
        }
        Ok((log_interval_sum_survival(l, t) - self.log_normalizer(t)?).exp())
    }

    fn check_below_gamma2(&self) -> Result<()> {
        if self.a1 >= 2.0 - A1_SNAP {
            return Err(Error::Divergence(format!(
                "gamma = {} gives a1 = {:.12} >= 2; the Lévy measure needs a1 < 2, i.e. gamma < gamma2 = {:.6}",
                self.gamma,
                self.a1,
                gamma2(1)
            )));
        }
        Ok(())
    }
}

/// Leading term `(2(l+1)/ℓ_1) e^{-4tℓ_1/(l+1)²}` of the interval sum with the
/// relative error allowance derived from the eigenvalue and remainder
/// bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XkTerm {
    pub leading: f64,
    /// `max(|lo/leading - 1|, |hi/leading - 1|)`.
    pub envelope: f64,
    pub lo: f64,
    pub hi: f64,
}

pub fn xk_term(l: usize, t: f64) -> Result<XkTerm> {
    if !(t >= 0.0) {
        return Err(param(format!("time must be >= 0, got {t}")));
    }
    let m = (l + 1) as f64;
    let leading = 2.0 * m / ELL1 * (-4.0 * t * ELL1 / (m * m)).exp();
    let o1 = std::f64::consts::PI.powi(2) / (12.0 * m * m);
    let shift = 4.0 * t * ELL1 * o1 / (m * m);
    let o4 = 200.0 / m
        + 500.0
            * (-t * 2.0 * std::f64::consts::PI.powi(2) / (m * m) * (1.0 - 10.0 / (m * m))).exp();
    let lo = leading * (1.0 - o4).max(0.0) * (-shift).exp();
    let hi = leading * (1.0 + o4) * shift.exp();
    Ok(XkTerm {
        leading,
        envelope: (1.0 - lo / leading).max(hi / leading - 1.0),
        lo,
        hi,
    })
}

/// `-L(x) = (2cp/(1-p)) e^{-ν floor((a_1/ν) ln x)}` for `x > 0`, and 0 for
/// `x <= 0`. Right continuous and nonincreasing; it counts the atom masses
/// strictly above `x`.
pub fn levy_tail(x: f64, gamma: f64, p: f64, c: f64) -> Result<f64> {
    let sp = scaling_params(gamma, p, c)?;
    sp.check_below_gamma2()?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    let k = (sp.a1 / sp.nu * x.ln()).floor();
    Ok(2.0 * c * p / sp.q() * (-sp.nu * k).exp())
}

/// Atomic Lévy data: `φ(u) = exp{iβu - σ²u²/2 + sum_j m_j (e^{iuz_j} - 1 - iuz_j/(1+z_j²))}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyTriple {
    pub beta: f64,
    /// Gaussian part; [`levy_atoms`] uses it for the second moment of the
    /// atoms below `z_{j_max}`.
    pub sigma2: f64,
    /// `(z_j, m_j)` for `j = j_min..=j_max`, positions decreasing.
    pub atoms: Vec<(f64, f64)>,
    pub j_min: i64,
    pub j_max: i64,
    /// Bound on the neglected part of the exponent for `|u| <= u_max`.
    pub truncation_error: f64,
}

impl LevyTriple {
    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    /// Sum of atom masses strictly above `x`.
    pub fn tail_mass(&self, x: f64) -> f64 {
        let mut s = CompensatedSum::new();
        for &(z, m) in &self.atoms {
            if z > x {
                s.add(m);
            }
        }
        s.value()
    }
}

/// `2cp²/(1-p)²`, the mass of the atom at 1.
fn atom_scale(sp: &ScalingParams) -> f64 {
    2.0 * sp.c * sp.p * sp.p / (sp.q() * sp.q())
}

fn atom(sp: &ScalingParams, j: i64) -> (f64, f64) {
    let z = (j as f64 / sp.a1 * sp.q().ln()).exp();
    let m = atom_scale(sp) * (-(j as f64) * sp.q().ln()).exp();
    (z, m)
}

/// `m_j z_j^k`, evaluated in log space so that neither factor overflows.
fn atom_moment(sp: &ScalingParams, j: i64, k: f64) -> f64 {
    atom_scale(sp) * (j as f64 * sp.q().ln() * (k / sp.a1 - 1.0)).exp()
}

/// Atoms of the Lévy measure for `|u| <= u_max`. Large atoms beyond
/// `j_min` are dropped (their total mass bounds the error). Small atoms
/// beyond `j_max` enter through their exact second moment as `sigma2`,
/// since `e^{iuz} - 1 - iuz/(1+z²) = -u²z²/2 + O((u³/6 + u) z³)`.
/// Small `a_1` puts needed atoms beyond `f64::MAX`, which is reported as a
/// domain error.
pub fn levy_atoms(gamma: f64, p: f64, c: f64, u_max: f64, tol: f64) -> Result<LevyTriple> {
    let sp = scaling_params(gamma, p, c)?;
    sp.check_below_gamma2()?;
    if !(u_max >= 0.0) || !(tol > 0.0) {
        return Err(param("need u_max >= 0 and tol > 0"));
    }
    let q = sp.q();
    let cm = atom_scale(&sp);
    let q2 = q.powf(2.0 / sp.a1 - 1.0);
    let q3 = q.powf(3.0 / sp.a1 - 1.0);
    let small_err =
        |j_max: i64| (u_max.powi(3) / 6.0 + u_max) * cm * q3.powi(j_max as i32 + 1) / (1.0 - q3);
    // j < j_min: the bracket is at most 2 + u/2, and sum m_j = cm q^{1-j_min}/p
    let large_err = |j_min: i64| (2.0 + 0.5 * u_max) * cm * q.powi(1 - j_min as i32) / sp.p;
    let need = |err0: f64, ratio: f64| ((0.5 * tol / err0).ln() / ratio.ln()).ceil().max(0.0);
    let j_hi = need(small_err(0), q3);
    let j_lo = need(large_err(0), q);
    if !(j_hi + j_lo < MAX_ATOMS as f64) {
        return Err(Error::Size {
            size: (j_hi + j_lo).min(u64::MAX as f64) as u64 as usize,
            cap: MAX_ATOMS,
        });
    }
    let (mut j_max, mut j_min) = (j_hi as i64, -(j_lo as i64));
    while j_max > 0 && small_err(j_max - 1) <= 0.5 * tol {
        j_max -= 1;
    }
    while small_err(j_max) > 0.5 * tol {
        j_max += 1;
    }
    while j_min < 0 && large_err(j_min + 1) <= 0.5 * tol {
        j_min += 1;
    }
    while large_err(j_min) > 0.5 * tol {
        j_min -= 1;
    }
    let atoms: Vec<(f64, f64)> = (j_min..=j_max).map(|j| atom(&sp, j)).collect();
    if atoms
        .iter()
        .any(|&(z, m)| !(z.is_finite() && m.is_finite()))
    {
        return Err(Error::Domain(format!(
            "atom positions overflow f64 for gamma = {gamma}, p = {p} at tolerance {tol}"
        )));
    }
    Ok(LevyTriple {
        beta: 0.0,
        sigma2: atom_moment(&sp, j_max + 1, 2.0) / (1.0 - q2),
        atoms,
        j_min,
        j_max,
        truncation_error: small_err(j_max) + large_err(j_min),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaKind {
    /// Uncentered sums, `a_1 < 1`: `β_1 = ∫ x/(1+x²) dL`.
    Uncentered,
    /// Centered sums, `1 < a_1 < 2`: `β_2 = -∫ x³/(1+x²) dL`.
    Centered,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaReport {
    /// The value used for the limit law, from the Lévy atoms.
    pub atom_sum: f64,
    /// `sum_k s_k` of the closed series, with `s_k = (1-p)^k / D_k`
    /// (uncentered) or `(1-p)^{k(1+2/a_1)} / D_k` (centered), where
    /// `D_k = (1-p)^{k/a_1} + (1-p)^{-k/a_1}`; `None` if it diverges.
    pub series_sum: Option<f64>,
    /// `series_sum * 2cp²/(1-p)²`.
    pub series_gap_count_prefactor: Option<f64>,
    /// `series_sum * 2p/(1-p)`.
    pub series_density_prefactor: Option<f64>,
}

/// Summand of the closed β series.
pub fn beta_series_term(kind: BetaKind, k: i64, p: f64, a1: f64) -> f64 {
    let q = 1.0 - p;
    let kf = k as f64;
    let den = q.powf(kf / a1) + q.powf(-kf / a1);
    let num = match kind {
        BetaKind::Uncentered => q.powf(kf),
        BetaKind::Centered => q.powf(kf * (1.0 + 2.0 / a1)),
    };
    num / den
}

/// Two-sided sum of `f(k)` from 0 outward, stopping once a side's summand
/// falls below `tol` times the partial sum; `None` if a side's term ratio
/// stays at or above 1.
fn two_sided_sum(f: impl Fn(i64) -> f64, tol: f64) -> Option<f64> {
    let mut s = CompensatedSum::new();
    s.add(f(0));
    for dir in [1i64, -1] {
        let mut prev = f(0).abs();
        let mut k = dir;
        loop {
            let term = f(k);
            s.add(term);
            if term.abs() <= tol * s.value().abs() {
                break;
            }
            if k.abs() > 20 && term.abs() >= prev {
                return None;
            }
            if !term.is_finite() || k.abs() > 100_000 {
                return None;
            }
            prev = term.abs();
            k += dir;
        }
    }
    Some(s.value())
}

pub fn beta(gamma: f64, p: f64, c: f64, kind: BetaKind, tol: f64) -> Result<BetaReport> {
    let sp = scaling_params(gamma, p, c)?;
    sp.check_below_gamma2()?;
    if !(tol > 0.0) {
        return Err(param("tolerance must be positive"));
    }
    match kind {
        BetaKind::Uncentered if sp.a1 >= 1.0 => {
            return Err(Error::Divergence(format!(
                "uncentered β needs a1 < 1 (gamma < gamma1 = 2/3), got a1 = {}",
                sp.a1
            )))
        }
        BetaKind::Centered if sp.a1 <= 1.0 => {
            return Err(Error::Divergence(format!(
                "centered β needs a1 > 1 (gamma > gamma1 = 2/3), got a1 = {}",
                sp.a1
            )))
        }
        _ => {}
    }
    let atom_term = |j: i64| {
        let z = atom(&sp, j).0;
        match kind {
            BetaKind::Uncentered => atom_moment(&sp, j, 1.0) / (1.0 + z * z),
            BetaKind::Centered => -atom_moment(&sp, j, 3.0) / (1.0 + z * z),
        }
    };
    let atom_sum = two_sided_sum(atom_term, tol)
        .ok_or_else(|| Error::Divergence("atom sum for β does not converge".into()))?;
    let series_sum = two_sided_sum(|k| beta_series_term(kind, k, p, sp.a1), tol);
    Ok(BetaReport {
        atom_sum,
        series_sum,
        series_gap_count_prefactor: series_sum.map(|s| s * atom_scale(&sp)),
        series_density_prefactor: series_sum.map(|s| s * 2.0 * p / sp.q()),
    })
}

/// Lévy–Khintchine characteristic function of an atomic triple.
pub fn char_fn(u: f64, triple: &LevyTriple) -> Complex64 {
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for &(z, m) in &triple.atoms {
        let (re_k, im_k) = levy_kernel(u, z);
        re.add(m * re_k);
        im.add(m * im_k);
    }
    let exponent = Complex64::new(
        re.value() - 0.5 * triple.sigma2 * u * u,
        im.value() + triple.beta * u,
    );
    exponent.exp()
}

/// `e^{iuz} - 1 - iuz/(1+z²)` split into real and imaginary parts, without
/// cancellation for small `uz`.
pub fn levy_kernel(u: f64, z: f64) -> (f64, f64) {
    let x = u * z;
    let h = (0.5 * x).sin();
    if x.abs() >= 0.5 {
        return (-2.0 * h * h, x.sin() - x / (1.0 + z * z));
    }
    (-2.0 * h * h, sin_minus_id(x) + x * z * z / (1.0 + z * z))
}

fn sin_minus_id(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = -x * x2 / 6.0;
    let mut sum = term;
    let mut k = 3.0;
    while term.abs() > 1e-18 * sum.abs() {
        term *= -x2 / ((k + 1.0) * (k + 2.0));
        sum += term;
        k += 2.0;
    }
    sum
}

/// `(1/n) sum_k e^{iu x_k}` at each `u`.
pub fn empirical_cf(samples: &[f64], u_grid: &[f64]) -> Result<Vec<Complex64>> {
    if samples.is_empty() {
        return Err(param(
            "empirical characteristic function needs at least one sample",
        ));
    }
    let n = samples.len() as f64;
    Ok(u_grid
        .iter()
        .map(|&u| {
            let mut re = CompensatedSum::new();
            let mut im = CompensatedSum::new();
            for &x in samples {
                let (s, c) = (u * x).sin_cos();
                re.add(c);
                im.add(s);
            }
            Complex64::new(re.value() / n, im.value() / n)
        })
        .collect())
}

/// `ln(1 + z)` accurate for small `|z|`.
fn complex_ln_1p(z: Complex64) -> Complex64 {
    let re = 0.5 * (2.0 * z.re + z.norm_sqr()).ln_1p();
    Complex64::new(re, z.im.atan2(1.0 + z.re))
}

/// Precomputed `Y(l)` table for drawing normalized gap sums at one time.
#[derive(Debug, Clone)]
pub struct GapSumSampler {
    pub params: ScalingParams,
    pub t: f64,
    pub bracket: i64,
    pub n: u64,
    /// `Y(l)` for `l < y.len()`; beyond the table, gaps are too rare to
    /// matter and are evaluated on demand.
    pub y: Vec<f64>,
    /// Gaps shorter than this add at most `1e-15` in total and are not
    /// materialized.
    pub l_min: u64,
    /// `E[Y]` under the geometric gap law.
    pub mean_y: f64,
}

impl GapSumSampler {
    pub fn new(params: ScalingParams, t: f64) -> Result<Self> {
        let bracket = params.bracket(t);
        if bracket < 1 {
            return Err(Error::TimeTooSmall(t));
        }
        let n = params.gap_count(t)?;
        let log_norm = params.log_normalizer(t)?;
        let q = params.q();
        let mut y = Vec::new();
        let mut mean = CompensatedSum::new();
        let mut l = 0usize;
        loop {
            let yl = if l == 0 {
                0.0
            } else {
                (log_interval_sum_survival(l, t) - log_norm).exp()
            };
            let w = params.p * q.powi(l as i32);
            y.push(yl);
            mean.add(w * yl);
            // stop once the gap is unlikely even among n draws and its
            // weighted value no longer matters for the mean
            if l > bracket as usize && (n as f64) * w < 1e-30 && w * yl <= 1e-18 * mean.value() {
                break;
            }
            l += 1;
        }
        let mut l_min = 0u64;
        while (l_min as usize) < y.len() && (n as f64) * y[l_min as usize] <= 1e-15 {
            l_min += 1;
        }
        Ok(Self {
            params,
            t,
            bracket,
            n,
            y,
            l_min,
            mean_y: mean.value(),
        })
    }

    /// Replaces the gap count, e.g. to examine a single summand.
    pub fn with_gap_count(mut self, n: u64) -> Self {
        self.n = n;
        self
    }

    pub fn y_at(&self, l: u64) -> f64 {
        match self.y.get(l as usize) {
            Some(&v) => v,
            None => self.params.y(l as usize, self.t).unwrap_or(0.0),
        }
    }

    /// One draw of `sum_{k} Y_k` over `n` i.i.d. gaps, minus `n E[Y]` when
    /// `centered`.
    pub fn sample<R: Rng + ?Sized>(&self, centered: bool, rng: &mut R) -> Result<f64> {
        let hist = stratified_gap_histogram(self.n, self.params.p, self.l_min, rng)?;
        let mut s = CompensatedSum::new();
        for (&l, &count) in &hist.counts {
            s.add(count as f64 * self.y_at(l));
        }
        if centered {
            s.add(-(self.n as f64) * self.mean_y);
        }
        Ok(s.value())
    }

    /// `count` draws, draw `i` using stream `i` of `seed`; identical for
    /// any thread count.
    pub fn sample_many(&self, count: usize, centered: bool, seed: u64) -> Result<Vec<f64>> {
        (0..count as u64)
            .into_par_iter()
            .map(|i| self.sample(centered, &mut sample_stream(seed, i)))
            .collect()
    }

    /// Exact characteristic function of the normalized sum at this `t`.
    pub fn char_fn(&self, u: f64, centered: bool) -> Complex64 {
        let q = self.params.q();
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        for (l, &yl) in self.y.iter().enumerate() {
            let w = self.params.p * q.powi(l as i32);
            let (s, c) = (u * yl).sin_cos();
            re.add(w * (c - 1.0));
            im.add(w * s);
        }
        let mut e = complex_ln_1p(Complex64::new(re.value(), im.value())) * self.n as f64;
        if centered {
            e.im -= u * self.n as f64 * self.mean_y;
        }
        e.exp()
    }

    /// `n P(Y > x)` for a single gap.
    pub fn tail_count(&self, x: f64) -> f64 {
        let q = self.params.q();
        let mut s = CompensatedSum::new();
        for (l, &yl) in self.y.iter().enumerate() {
            if yl > x {
                s.add(self.params.p * q.powi(l as i32));
            }
        }
        // lengths past the table have Y above any fixed x
        s.add(q.powi(self.y.len() as i32));
        self.n as f64 * s.value()
    }

    /// `P(Y > x)` for a single gap.
    pub fn exceedance(&self, x: f64) -> f64 {
        self.tail_count(x) / self.n as f64
    }

    /// `n E[Y^k; Y <= τ]`.
    pub fn truncated_moment(&self, k: u32, tau: f64) -> f64 {
        let q = self.params.q();
        let mut s = CompensatedSum::new();
        for (l, &yl) in self.y.iter().enumerate() {
            if yl <= tau {
                s.add(self.params.p * q.powi(l as i32) * yl.powi(k as i32));
            }
        }
        self.n as f64 * s.value()
    }
}

pub fn normalized_sum_sample<R: Rng + ?Sized>(
    gamma: f64,
    p: f64,
    c: f64,
    t: f64,
    centered: bool,
    rng: &mut R,
) -> Result<f64> {
    GapSumSampler::new(scaling_params(gamma, p, c)?, t)?.sample(centered, rng)
}

/// `lim n(t) E[Y^k; Y <= τ] = C (1-p)^{-M(k/a_1 - 1)} / (1 - (1-p)^{k/a_1 - 1})`
/// with `C = 2cp²/(1-p)²` and `M = floor((a_1/ν) ln τ)`: the sum of
/// `m_j z_j^k` over atoms `z_j <= τ`.
pub fn truncated_moment_limit(k: u32, tau: f64, gamma: f64, p: f64, c: f64) -> Result<f64> {
    let sp = scaling_params(gamma, p, c)?;
    sp.check_below_gamma2()?;
    if k == 0 || !(tau > 0.0) {
        return Err(param("need k >= 1 and tau > 0"));
    }
    let q = sp.q();
    let r = k as f64 / sp.a1 - 1.0;
    let ratio = q.powf(r);
    if ratio >= 1.0 {
        return Err(Error::Divergence(format!(
            "truncated moment of order {k} needs k > a1 = {}",
            sp.a1
        )));
    }
    let big_m = (sp.a1 / sp.nu * tau.ln()).floor();
    Ok(atom_scale(&sp) * q.powf(-big_m * r) / (1.0 - ratio))
}

/// The limit formula with exponent `((k - a_1)/a_1) M` and denominator
/// `1 - (1-p)^{1/a_1 - 1}` taken literally. Agrees with
/// [`truncated_moment_limit`] at `k = 1`, `0 <= ln τ < ν/a_1`.
pub fn truncated_moment_limit_literal(k: u32, tau: f64, gamma: f64, p: f64, c: f64) -> Result<f64> {
    let sp = scaling_params(gamma, p, c)?;
    sp.check_below_gamma2()?;
    if k == 0 || !(tau > 0.0) {
        return Err(param("need k >= 1 and tau > 0"));
    }
    let q = sp.q();
    let den = 1.0 - q.powf(1.0 / sp.a1 - 1.0);
    if den <= 0.0 {
        return Err(Error::Divergence("geometric factor >= 1".into()));
    }
    let big_m = (sp.a1 / sp.nu * tau.ln()).floor();
    Ok(atom_scale(&sp) * q.powf((k as f64 - sp.a1) / sp.a1 * big_m) / den)
}

pub fn truncated_moment_finite_t(
    k: u32,
    tau: f64,
    gamma: f64,
    p: f64,
    c: f64,
    t: f64,
) -> Result<f64> {
    if k == 0 || !(tau > 0.0) {
        return Err(param("need k >= 1 and tau > 0"));
    }
    Ok(GapSumSampler::new(scaling_params(gamma, p, c)?, t)?.truncated_moment(k, tau))
}

/// How the flank gap counts of the sandwich are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowRule {
    /// `m = floor((1-ε) L p/(1-p))`, `M = floor((1+ε) L p/(1-p))`.
    AsStated,
    /// `m = floor((1-ε) p L)`, `M = floor((1+ε) p L)`, the number of
    /// obstacles expected in `[0, (1∓ε)L]`.
    ObstacleCount,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichReport {
    pub t: f64,
    pub bracket: i64,
    pub scale: usize,
    pub m: usize,
    pub big_m: usize,
    /// `sum_{k=-m}^{m} S(l_k, t)`
    pub lower: f64,
    /// `sum_{x in Λ_L} p(x, t)`
    pub middle: f64,
    pub upper: f64,
    /// The flanks with the leading terms of [`xk_term`] in place of `S`.
    pub lower_leading: f64,
    pub upper_leading: f64,
    pub passed: bool,
}

/// Compares the survival mass of `Λ_{L(t)}` with sums over the gaps
/// `I_{-m}, ..., I_m` and `I_{-M}, ..., I_M` counted from the origin.
pub fn sandwich_check(
    env: &Environment,
    t: f64,
    gamma: f64,
    eps: f64,
    rule: WindowRule,
) -> Result<SandwichReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(param(format!("epsilon must lie in (0, 1), got {eps}")));
    }
    let sp = scaling_params(gamma, env.density(), 1.0)?;
    let bracket = sp.bracket(t);
    if bracket < 1 {
        return Err(Error::TimeTooSmall(t));
    }
    let scale_f = sp.scale(t);
    let scale = scale_f.floor() as usize;
    if scale > env.radius() {
        return Err(Error::Domain(format!(
            "environment radius {} is smaller than L(t) = {scale}",
            env.radius()
        )));
    }
    let p = env.density();
    let (m, big_m) = match rule {
        WindowRule::AsStated => {
            let k = scale_f * p / (1.0 - p);
            (
                ((1.0 - eps) * k).floor() as usize,
                ((1.0 + eps) * k).floor() as usize,
            )
        }
        WindowRule::ObstacleCount => (
            ((1.0 - eps) * p * scale_f).floor() as usize,
            ((1.0 + eps) * p * scale_f).floor() as usize,
        ),
    };
    let gaps = gap_structure(env)?;
    let flank = |count: usize| -> Result<(f64, f64)> {
        let mut exact = CompensatedSum::new();
        let mut lead = CompensatedSum::new();
        for k in -(count as i64)..=(count as i64) {
            let gap = gaps.indexed_gap(k).ok_or_else(|| {
                Error::Domain(format!(
                    "environment radius {} holds too few obstacles for gap index {k}",
                    env.radius()
                ))
            })?;
            exact.add(interval_sum_survival(gap.length, t));
            lead.add(xk_term(gap.length, t)?.leading);
        }
        Ok((exact.value(), lead.value()))
    };
    let (lower, lower_leading) = flank(m)?;
    let (upper, upper_leading) = flank(big_m)?;
    let avg = averaged_survival(env, t, scale)?;
    let middle = avg.value * (2 * scale + 1) as f64;
    Ok(SandwichReport {
        t,
        bracket,
        scale,
        m,
        big_m,
        lower,
        middle,
        upper,
        lower_leading,
        upper_leading,
        passed: lower <= middle && middle <= upper,
    })
}
