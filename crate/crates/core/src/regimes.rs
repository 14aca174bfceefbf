//! Dimension- and density-dependent constants, the six averaging regimes
//! for a scale `L(t)`, and the decay-rate curve `ā(γ)`.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{param, Error, Result};

/// Site percolation threshold on `Z²`, a literature value (not computed
/// here), for documenting the `p < 1 - p_c` hypothesis of the quenched
/// regime.
pub const SITE_PERCOLATION_THRESHOLD_2D: f64 = 0.592746;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainConstants {
    pub d: usize,
    pub p: f64,
    /// `|ln(1 - p)|`
    pub nu: f64,
    /// Volume of the unit ball in `R^d`.
    pub w_d: f64,
    /// Principal Dirichlet eigenvalue of `-(1/2d)Δ` on the unit ball.
    pub ell_d: f64,
    /// `(d / (w_d ν))^{1/d}`
    pub r0: f64,
    /// `ℓ_d / R_0²`
    pub c1: f64,
    /// `(w_d ν)^{2/(d+2)} ((d+2)/2) (2ℓ_d/d)^{d/(d+2)}`
    pub c2: f64,
    /// `d/2`
    pub alpha: f64,
    /// `d/(d+2)`
    pub alpha_prime: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

/// Volume of the unit ball, by `w_d = (2π/d) w_{d-2}`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / d as f64 * unit_ball_volume(d - 2),
    }
}

/// `J_ν(x) / (x/2)^ν` up to the constant factor `1/Γ(ν+1)`; same positive
/// zeros as `J_ν`, and regular at 0 for every `ν > -1`.
fn bessel_j_scaled(order: f64, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + order));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs().max(1e-300) && k > 0.5 * x {
            return sum;
        }
    }
}

/// First positive zero of `J_ν`, bracketed by a scan and refined by
/// bisection to `1e-12`.
pub fn first_bessel_zero(order: f64) -> f64 {
    let f = |x| bessel_j_scaled(order, x);
    let step = 0.05;
    let mut a = step;
    while f(a) * f(a + step) > 0.0 {
        a += step;
    }
    let mut b = a + step;
    let fa = f(a);
    while b - a > 1e-12 {
        let m = 0.5 * (a + b);
        if f(m) * fa > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// `ℓ_d = j²_{d/2-1,1} / (2d)`.
pub fn ell(d: usize) -> f64 {
    let j = first_bessel_zero(d as f64 / 2.0 - 1.0);
    j * j / (2.0 * d as f64)
}

pub fn constants(d: usize, p: f64) -> Result<DomainConstants> {
    if d == 0 {
        return Err(param("dimension must be at least 1"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(param(format!("density must satisfy 0 < p < 1, got {p}")));
    }
    let df = d as f64;
    let nu = -(1.0 - p).ln();
    let w_d = unit_ball_volume(d);
    let ell_d = if d == 1 { PI * PI / 8.0 } else { ell(d) };
    let r0 = (df / (w_d * nu)).powf(1.0 / df);
    let c1 = ell_d / (r0 * r0);
    let c2 = (w_d * nu).powf(2.0 / (df + 2.0))
        * ((df + 2.0) / 2.0)
        * (2.0 * ell_d / df).powf(df / (df + 2.0));
    let gamma1 = 2.0 / (df + 2.0);
    Ok(DomainConstants {
        d,
        p,
        nu,
        w_d,
        ell_d,
        r0,
        c1,
        c2,
        alpha: df / 2.0,
        alpha_prime: df / (df + 2.0),
        gamma1,
        gamma2: 2f64.powf(df / (df + 2.0)) * gamma1,
    })
}

pub fn gamma1(d: usize) -> f64 {
    2.0 / (d as f64 + 2.0)
}

pub fn gamma2(d: usize) -> f64 {
    let df = d as f64;
    2f64.powf(df / (df + 2.0)) * gamma1(d)
}

/// `a(γ) = (d/(d+2)) ((d+2)γ/2)^{-2/d} + γ`, in units of `c_2`.
pub fn a_of_gamma(d: usize, gamma: f64) -> Result<f64> {
    if d == 0 {
        return Err(param("dimension must be at least 1"));
    }
    if !(gamma > 0.0) {
        return Err(param(format!("gamma must be positive, got {gamma}")));
    }
    let df = d as f64;
    Ok(df / (df + 2.0) * ((df + 2.0) * gamma / 2.0).powf(-2.0 / df) + gamma)
}

/// `ā(γ)` in units of `c_2`: 0 at `γ = 0`, `a(γ)` below `γ_1`, 1 from `γ_1` on.
pub fn abar(d: usize, gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(param(format!("gamma must be >= 0, got {gamma}")));
    }
    if gamma == 0.0 {
        return Ok(0.0);
    }
    if gamma >= gamma1(d) {
        return Ok(1.0);
    }
    a_of_gamma(d, gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RegimeCase {
    Case1,
    Case2,
    Case3,
    Case4,
    Case5,
    Case6,
}

impl fmt::Display for RegimeCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = match self {
            RegimeCase::Case1 => 1,
            RegimeCase::Case2 => 2,
            RegimeCase::Case3 => 3,
            RegimeCase::Case4 => 4,
            RegimeCase::Case5 => 5,
            RegimeCase::Case6 => 6,
        };
        write!(f, "case{n}")
    }
}

/// Growth of the averaging scale `L(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaleDescriptor {
    /// `L(t) = exp((γ/d) c_2 t^{d/(d+2)})`.
    Exponential(f64),
    /// `L(t) = t^k`, `k > 0`.
    Power(f64),
    /// `1 << L(t) <= t`.
    AtMostLinear,
    /// `L(t) >= t` and `log L(t) << t^{d/(d+2)}`.
    Subexponential,
}

impl ScaleDescriptor {
    /// Accepts `gamma=<γ>`, `t^<k>`, `at-most-linear` or `subexponential`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let missing = || {
            param(format!(
                "cannot classify scale {s:?}: give an exponential rate `gamma=<value>`, \
                 a power `t^<k>`, or one of `at-most-linear`, `subexponential`"
            ))
        };
        if let Some(v) = s.strip_prefix("gamma=") {
            return v
                .parse()
                .map(ScaleDescriptor::Exponential)
                .map_err(|_| missing());
        }
        if let Some(v) = s.strip_prefix("t^") {
            return v.parse().map(ScaleDescriptor::Power).map_err(|_| missing());
        }
        match s {
            "at-most-linear" => Ok(ScaleDescriptor::AtMostLinear),
            "subexponential" => Ok(ScaleDescriptor::Subexponential),
            _ => Err(missing()),
        }
    }
}

/// The regimes whose defining conditions the scale satisfies. Cases 5 and 6
/// are lower-bound conditions, so an exponential rate can satisfy two rows.
/// At `γ = γ_1` the scale is assigned to case 3, whose asymptotics hold up
/// to and including `γ_1`.
pub fn classify(d: usize, scale: ScaleDescriptor) -> Result<Vec<RegimeCase>> {
    if d == 0 {
        return Err(param("dimension must be at least 1"));
    }
    use RegimeCase::*;
    let cases = match scale {
        ScaleDescriptor::Exponential(g) => {
            if !(g > 0.0) || !g.is_finite() {
                return Err(param(format!(
                    "exponential rate gamma must be positive, got {g}"
                )));
            }
            let (g1, g2) = (gamma1(d), gamma2(d));
            if g <= g1 {
                vec![Case3]
            } else if g < g2 {
                vec![Case4, Case5]
            } else if g == g2 {
                vec![Case5]
            } else {
                vec![Case5, Case6]
            }
        }
        ScaleDescriptor::Power(k) => {
            if !(k > 0.0) || !k.is_finite() {
                return Err(Error::Parameter(format!(
                    "power scale t^k needs k > 0 so that L(t) grows, got {k}"
                )));
            }
            if k < 1.0 {
                vec![Case1]
            } else if k == 1.0 {
                vec![Case1, Case2]
            } else {
                vec![Case2]
            }
        }
        ScaleDescriptor::AtMostLinear => vec![Case1],
        ScaleDescriptor::Subexponential => vec![Case2],
    };
    Ok(cases)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRow {
    pub gamma: f64,
    pub abar: f64,
    /// `+inf` at `γ = 0`.
    pub inv_abar: f64,
    pub cases: Vec<RegimeCase>,
}

impl PhaseRow {
    pub fn cases_label(&self) -> String {
        self.cases
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(";")
    }
}

pub fn figure1_table(d: usize, gammas: &[f64]) -> Result<Vec<PhaseRow>> {
    if gammas.is_empty() {
        return Err(param("gamma grid is empty"));
    }
    gammas
        .iter()
        .map(|&g| {
            let a = abar(d, g)?;
            let cases = if g > 0.0 {
                classify(d, ScaleDescriptor::Exponential(g))?
            } else {
                Vec::new()
            };
            Ok(PhaseRow {
                gamma: g,
                abar: a,
                inv_abar: if a == 0.0 { f64::INFINITY } else { 1.0 / a },
                cases,
            })
        })
        .collect()
}
