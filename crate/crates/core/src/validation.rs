//! Named invariant checks, grouped by module, for quick self-validation of
//! a build. Every check is deterministic given the seed.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::{gap_structure, sample_environment, Site};
use crate::limitlaw::{char_fn, levy_atoms, levy_tail, scaling_params, GapSumSampler};
use crate::montecarlo::{annealed_mc, killed_walk_mc};
use crate::regimes::{
    a_of_gamma, classify, constants, gamma1, gamma2, RegimeCase, ScaleDescriptor,
};
use crate::spectral::{
    dense_spectrum, gap_envelope, interval_eigenvalue, interval_mass, lambda0_envelope,
    principal_eigenvalue, psi0_mass_envelope_corrected, DEFAULT_SITE_CAP,
};
use crate::survival::{
    annealed_exact_1d, averaged_survival, ball, interval_sum_bounds, interval_sum_survival,
    quenched_survival_1d, truncated_survival, truncation_gap_bound,
};

pub type CheckResult = std::result::Result<String, String>;

#[derive(Debug, Clone, Copy)]
pub struct ValidationConfig {
    pub seed: u64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self { seed: 1 }
    }
}

pub struct Check {
    pub module: &'static str,
    pub name: &'static str,
    pub run: fn(&ValidationConfig) -> CheckResult,
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub module: &'static str,
    pub name: &'static str,
    pub passed: bool,
    /// Summary on success, first failing assertion otherwise.
    pub detail: String,
    pub elapsed: Duration,
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

pub fn checks() -> Vec<Check> {
    vec![
        Check {
            module: "env",
            name: "deterministic-sampling",
            run: env_deterministic,
        },
        Check {
            module: "env",
            name: "sub-box-consistency",
            run: env_subbox,
        },
        Check {
            module: "env",
            name: "gap-law-chi-square",
            run: env_gap_law,
        },
        Check {
            module: "spectral",
            name: "closed-form-vs-dense",
            run: spectral_closed_form,
        },
        Check {
            module: "spectral",
            name: "lambda0-monotone",
            run: spectral_monotone,
        },
        Check {
            module: "spectral",
            name: "envelopes",
            run: spectral_envelopes,
        },
        Check {
            module: "survival",
            name: "monotone-in-time",
            run: survival_monotone,
        },
        Check {
            module: "survival",
            name: "truncation-bound",
            run: survival_truncation,
        },
        Check {
            module: "survival",
            name: "two-term-sandwich",
            run: survival_sandwich,
        },
        Check {
            module: "survival",
            name: "averaged-equals-mean",
            run: survival_average,
        },
        Check {
            module: "survival",
            name: "series-error-bound",
            run: survival_series,
        },
        Check {
            module: "montecarlo",
            name: "thread-count-invariance",
            run: mc_threads,
        },
        Check {
            module: "montecarlo",
            name: "fubini",
            run: mc_fubini,
        },
        Check {
            module: "regimes",
            name: "conjugacy-and-a-at-gamma1",
            run: regimes_identities,
        },
        Check {
            module: "regimes",
            name: "minimum-at-gamma2",
            run: regimes_minimum,
        },
        Check {
            module: "regimes",
            name: "classify-consistent",
            run: regimes_classify,
        },
        Check {
            module: "limitlaw",
            name: "alpha-below-two",
            run: limit_boundary,
        },
        Check {
            module: "limitlaw",
            name: "levy-spectral-function",
            run: limit_levy,
        },
        Check {
            module: "limitlaw",
            name: "char-fn-properties",
            run: limit_char_fn,
        },
        Check {
            module: "limitlaw",
            name: "normalizer-exponents",
            run: limit_remark,
        },
        Check {
            module: "limitlaw",
            name: "uniform-negligibility",
            run: limit_negligible,
        },
    ]
}

/// Runs every check whose module equals `filter` (all when `None`).
pub fn run_checks(cfg: &ValidationConfig, filter: Option<&str>) -> Vec<CheckOutcome> {
    checks()
        .into_iter()
        .filter(|c| filter.is_none_or(|f| f == c.module))
        .map(|c| {
            let start = Instant::now();
            let res = (c.run)(cfg);
            let elapsed = start.elapsed();
            let (passed, detail) = match res {
                Ok(s) => (true, s),
                Err(s) => (false, s),
            };
            CheckOutcome {
                module: c.module,
                name: c.name,
                passed,
                detail,
                elapsed,
            }
        })
        .collect()
}

pub fn modules() -> Vec<&'static str> {
    let mut m: Vec<_> = checks().iter().map(|c| c.module).collect();
    m.dedup();
    m
}

/// Upper 1% point of chi-square with `k` degrees of freedom
/// (Wilson–Hilferty).
fn chi2_crit_01(k: usize) -> f64 {
    let k = k as f64;
    let h = 2.0 / (9.0 * k);
    k * (1.0 - h + 2.326_347_874 * h.sqrt()).powi(3)
}

fn env_deterministic(cfg: &ValidationConfig) -> CheckResult {
    let a = sample_environment(2, 40, 0.3, cfg.seed).map_err(err)?;
    let b = sample_environment(2, 40, 0.3, cfg.seed).map_err(err)?;
    ensure!(a == b, "two samples with seed {} differ", cfg.seed);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(err)?;
    let c = pool
        .install(|| sample_environment(2, 40, 0.3, cfg.seed))
        .map_err(err)?;
    ensure!(a == c, "single-thread sample differs");
    Ok(format!("{} sites", a.len()))
}

fn env_subbox(cfg: &ValidationConfig) -> CheckResult {
    let small = sample_environment(2, 10, 0.4, cfg.seed).map_err(err)?;
    let big = sample_environment(2, 25, 0.4, cfg.seed).map_err(err)?;
    for i in 0..small.len() {
        let s = small.site_of(i);
        ensure!(
            small.is_obstacle(&s) == big.is_obstacle(&s),
            "site {s:?} differs between radii 10 and 25"
        );
    }
    Ok(format!("{} sites agree", small.len()))
}

fn env_gap_law(cfg: &ValidationConfig) -> CheckResult {
    let p = 0.5;
    let env = sample_environment(1, 210_000, p, cfg.seed).map_err(err)?;
    let gaps = gap_structure(&env).map_err(err)?;
    let lengths: Vec<usize> = gaps.interior_lengths().collect();
    let n = lengths.len();
    ensure!(n >= 100_000, "only {n} interior gaps");
    let bins = 12;
    let mut obs = vec![0f64; bins + 1];
    for &l in &lengths {
        obs[l.min(bins)] += 1.0;
    }
    let q: f64 = 1.0 - p;
    let mut stat = 0.0;
    for (l, &o) in obs.iter().enumerate() {
        let prob = if l < bins {
            p * q.powi(l as i32)
        } else {
            q.powi(bins as i32)
        };
        let e = prob * n as f64;
        stat += (o - e).powi(2) / e;
    }
    let crit = chi2_crit_01(bins);
    ensure!(
        stat < crit,
        "chi-square {stat:.2} exceeds {crit:.2} on {n} gaps"
    );
    Ok(format!("chi2 = {stat:.2} < {crit:.2}, {n} gaps"))
}

fn path(l: usize) -> Vec<Site> {
    (0..l as i64).map(|x| vec![x]).collect()
}

fn spectral_closed_form(_: &ValidationConfig) -> CheckResult {
    let mut worst = 0f64;
    for l in 1..=64 {
        let d = dense_spectrum(&path(l), 1, DEFAULT_SITE_CAP).map_err(err)?;
        for (n, &ev) in d.eigenvalues.iter().enumerate() {
            worst = worst.max((ev - interval_eigenvalue(l, n)).abs());
        }
    }
    ensure!(worst <= 1e-10, "max eigenvalue deviation {worst:e}");
    Ok(format!("max deviation {worst:.1e}"))
}

fn spectral_monotone(cfg: &ValidationConfig) -> CheckResult {
    for l in 1..200 {
        ensure!(
            interval_eigenvalue(l + 1, 0) < interval_eigenvalue(l, 0),
            "λ0 not decreasing at l = {l}"
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for trial in 0..20 {
        let outer: Vec<Site> = (0..8i64)
            .flat_map(|x| (0..8i64).map(move |y| vec![x, y]))
            .filter(|_| rng.random::<f64>() < 0.8)
            .collect();
        let inner: Vec<Site> = outer
            .iter()
            .filter(|_| rng.random::<f64>() < 0.7)
            .cloned()
            .collect();
        if inner.is_empty() {
            continue;
        }
        let lo = principal_eigenvalue(&outer, 2).map_err(err)?;
        let hi = principal_eigenvalue(&inner, 2).map_err(err)?;
        ensure!(
            hi >= lo - 1e-12,
            "trial {trial}: λ0(A) = {hi} < λ0(B) = {lo} with A ⊆ B"
        );
    }
    Ok("strict in l, domain monotone on 20 nested pairs".into())
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n)
        .map(|i| {
            (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64)
                .exp()
                .round() as usize
        })
        .collect();
    v.dedup();
    v
}

fn spectral_envelopes(_: &ValidationConfig) -> CheckResult {
    let grid = log_grid(10.0, 1e4, 40);
    for &l in &grid {
        let l0 = interval_eigenvalue(l, 0);
        ensure!(
            lambda0_envelope(l).contains(l0),
            "λ0 outside envelope at l = {l}"
        );
        let g = interval_eigenvalue(l, 1) - l0;
        ensure!(
            gap_envelope(l).contains(g),
            "λ1 - λ0 outside envelope at l = {l}"
        );
        ensure!(
            psi0_mass_envelope_corrected(l).contains(interval_mass(l, 0)),
            "(ψ0, 1) outside the corrected envelope at l = {l}"
        );
    }
    Ok(format!("{} lengths", grid.len()))
}

fn survival_monotone(cfg: &ValidationConfig) -> CheckResult {
    let env = sample_environment(1, 60, 0.3, cfg.seed).map_err(err)?;
    let gaps = gap_structure(&env).map_err(err)?;
    for x in -10..=10 {
        let mut prev = 1.0;
        for t in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0] {
            let v = quenched_survival_1d(&gaps, x, t).map_err(err)?;
            ensure!(
                (0.0..=1.0).contains(&v.value),
                "p({x}, {t}) = {} outside [0, 1]",
                v.value
            );
            ensure!(v.value <= prev + 1e-14, "p({x}, t) increases at t = {t}");
            prev = v.value;
        }
    }
    Ok("21 sites x 7 times".into())
}

fn survival_truncation(cfg: &ValidationConfig) -> CheckResult {
    let env = sample_environment(1, 80, 0.2, cfg.seed).map_err(err)?;
    let gaps = gap_structure(&env).map_err(err)?;
    let t = 5.0;
    for x in [-3i64, 0, 4] {
        let p = quenched_survival_1d(&gaps, x, t).map_err(err)?;
        if p.error > 0.0 {
            continue;
        }
        let mut prev = 0.0;
        for a in [0.5, 1.0, 2.0, 4.0] {
            let u = ball(&[x], a * t);
            let pt = truncated_survival(&env, &[x], t, &u).map_err(err)?;
            let bound = truncation_gap_bound(a, 1, t).map_err(err)?.bound;
            ensure!(pt.value <= p.value + 1e-12, "p̃ > p at x = {x}, a = {a}");
            ensure!(
                pt.value >= prev - 1e-12,
                "p̃ decreases in U at x = {x}, a = {a}"
            );
            ensure!(
                p.value - pt.value <= bound + 1e-12,
                "gap exceeds bound at x = {x}, a = {a}"
            );
            prev = pt.value;
        }
    }
    Ok("3 sites x 4 balls".into())
}

fn survival_sandwich(_: &ValidationConfig) -> CheckResult {
    for l in [1, 2, 3, 5, 10, 30, 100, 400] {
        for t in [0.0, 0.1, 1.0, 10.0, 100.0, 1e4] {
            let s = interval_sum_survival(l, t);
            let (lo, hi) = interval_sum_bounds(l, t);
            ensure!(
                lo <= s * (1.0 + 1e-12) && s <= hi * (1.0 + 1e-12),
                "S({l}, {t}) = {s} outside [{lo}, {hi}]"
            );
        }
    }
    Ok("48 (l, t) pairs".into())
}

fn survival_average(cfg: &ValidationConfig) -> CheckResult {
    let env = sample_environment(1, 120, 0.3, cfg.seed).map_err(err)?;
    let gaps = gap_structure(&env).map_err(err)?;
    let (t, scale) = (3.0, 40usize);
    let avg = averaged_survival(&env, t, scale).map_err(err)?;
    let mut s = 0.0;
    for x in -(scale as i64)..=(scale as i64) {
        s += quenched_survival_1d(&gaps, x, t).map_err(err)?.value;
    }
    let mean = s / (2 * scale + 1) as f64;
    ensure!(
        (avg.value - mean).abs() <= 1e-12,
        "averaged {} vs mean {mean}",
        avg.value
    );
    Ok(format!("{mean:.6}"))
}

fn survival_series(_: &ValidationConfig) -> CheckResult {
    for p in [0.1, 0.5, 0.9] {
        for t in [1.0, 10.0, 100.0] {
            let a = annealed_exact_1d(p, t, 1e-9).map_err(err)?;
            let b = annealed_exact_1d(p, t, 1e-10).map_err(err)?;
            ensure!(
                (a.value - b.value).abs() <= a.error,
                "p = {p}, t = {t}: rerun moved by more than the bound"
            );
        }
    }
    Ok("9 (p, t) pairs".into())
}

fn mc_threads(cfg: &ValidationConfig) -> CheckResult {
    let a = annealed_mc(2, 0.3, 5.0, 4000, cfg.seed).map_err(err)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(err)?;
    let b = pool
        .install(|| annealed_mc(2, 0.3, 5.0, 4000, cfg.seed))
        .map_err(err)?;
    ensure!(
        a.mean.to_bits() == b.mean.to_bits(),
        "means differ across thread counts"
    );
    ensure!(
        (0.0..=1.0).contains(&a.mean),
        "mean {} outside [0, 1]",
        a.mean
    );
    Ok(format!("{:.6} ± {:.6}", a.mean, a.std_error))
}

fn mc_fubini(cfg: &ValidationConfig) -> CheckResult {
    let (p, t, envs, walks) = (0.5, 3.0, 200usize, 200usize);
    let mut values = Vec::with_capacity(envs);
    for i in 0..envs {
        let env = sample_environment(1, 60, p, cfg.seed.wrapping_add(i as u64)).map_err(err)?;
        let k = killed_walk_mc(&env, &[0], t, walks, cfg.seed ^ i as u64).map_err(err)?;
        values.push(k.estimate.mean);
    }
    let (mean, se_env) = crate::numeric::mean_and_stderr(&values);
    let ann = annealed_mc(1, p, t, 40_000, cfg.seed).map_err(err)?;
    let se = (se_env.powi(2) + ann.std_error.powi(2)).sqrt();
    ensure!(
        (mean - ann.mean).abs() <= 3.0 * se,
        "quenched average {mean} vs annealed {} (se {se})",
        ann.mean
    );
    Ok(format!("{mean:.5} vs {:.5}", ann.mean))
}

fn regimes_identities(_: &ValidationConfig) -> CheckResult {
    for d in 1..=10 {
        let k = constants(d, 0.5).map_err(err)?;
        ensure!(
            (1.0 / k.alpha_prime - 1.0 / k.alpha - 1.0).abs() < 1e-14,
            "conjugacy fails at d = {d}"
        );
        let a = a_of_gamma(d, gamma1(d)).map_err(err)?;
        ensure!((a - 1.0).abs() <= 1e-12, "a(γ1) = {a} at d = {d}");
    }
    Ok("d = 1..10".into())
}

fn regimes_minimum(_: &ValidationConfig) -> CheckResult {
    for d in 1..=10 {
        let step = 1e-4;
        let (mut best, mut arg) = (f64::INFINITY, 0.0);
        for i in 1..30_000 {
            let g = i as f64 * step;
            let v = a_of_gamma(d, g).map_err(err)? - g / 2.0;
            if v < best {
                best = v;
                arg = g;
            }
        }
        let target = 2f64.powf(-2.0 / (d as f64 + 2.0));
        ensure!(
            (best - target).abs() <= 1e-6,
            "d = {d}: minimum {best} vs {target}"
        );
        ensure!(
            (arg - gamma2(d)).abs() <= step,
            "d = {d}: argmin {arg} vs γ2 = {}",
            gamma2(d)
        );
    }
    Ok("d = 1..10".into())
}

fn regimes_classify(_: &ValidationConfig) -> CheckResult {
    for d in 1..=4 {
        let (g1, g2) = (gamma1(d), gamma2(d));
        for i in 1..200 {
            let g = 1.2 * g2 * i as f64 / 200.0;
            let cases = classify(d, ScaleDescriptor::Exponential(g)).map_err(err)?;
            ensure!(!cases.is_empty(), "no case at γ = {g}");
            if cases.contains(&RegimeCase::Case6) {
                ensure!(
                    cases.contains(&RegimeCase::Case5),
                    "Case6 without Case5 at γ = {g}"
                );
            }
            if g < g2 && g != g1 {
                let c3 = cases.contains(&RegimeCase::Case3);
                let c4 = cases.contains(&RegimeCase::Case4);
                ensure!(c3 != c4, "Case3/Case4 not a partition at γ = {g}");
            }
        }
    }
    Ok("d = 1..4".into())
}

fn limit_boundary(_: &ValidationConfig) -> CheckResult {
    let g2 = gamma2(1);
    let a1 = scaling_params(g2, 0.5, 1.0).map_err(err)?.a1;
    ensure!((a1 - 2.0).abs() <= 1e-12, "a1(γ2) = {a1}");
    ensure!(
        levy_atoms(g2, 0.5, 1.0, 5.0, 1e-10).is_err(),
        "no divergence at γ2"
    );
    ensure!(
        levy_atoms(0.99 * g2, 0.5, 1.0, 5.0, 1e-10).is_ok(),
        "divergence below γ2"
    );
    let t = levy_atoms(0.7, 0.5, 1.0, 5.0, 1e-12).map_err(err)?;
    let terms: Vec<f64> = t.atoms.iter().map(|&(z, m)| m * z * z).collect();
    let r = terms[terms.len() - 1] / terms[terms.len() - 2];
    let expect = 0.5f64.powf(2.0 / scaling_params(0.7, 0.5, 1.0).map_err(err)?.a1 - 1.0);
    ensure!((r - expect).abs() <= 1e-6, "x² ratio {r} vs {expect}");
    Ok(format!("ratio {r:.6}"))
}

fn limit_levy(cfg: &ValidationConfig) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut xs: Vec<f64> = (0..500)
        .map(|_| (rng.random::<f64>() * 20.0 - 10.0).exp())
        .collect();
    xs.sort_by(f64::total_cmp);
    let mut prev = f64::INFINITY;
    for &x in &xs {
        let v = levy_tail(x, 0.5, 0.5, 1.0).map_err(err)?;
        ensure!(v <= prev, "-L increases at x = {x}");
        prev = v;
    }
    let far = levy_tail(1e300, 0.5, 0.5, 1.0).map_err(err)?;
    ensure!(far < 1e-100, "L(∞-) = {far}");
    Ok("500 points".into())
}

fn limit_char_fn(_: &ValidationConfig) -> CheckResult {
    for (g, beta) in [(0.5, 0.3), (0.7, -1.2)] {
        let t = levy_atoms(g, 0.5, 1.0, 10.0, 1e-12)
            .map_err(err)?
            .with_beta(beta);
        ensure!(
            (char_fn(0.0, &t) - num_complex::Complex64::new(1.0, 0.0)).norm() < 1e-15,
            "φ(0) != 1"
        );
        for i in 0..100 {
            let u = -10.0 + 0.2 * i as f64;
            let a = char_fn(u, &t);
            ensure!(a.norm() <= 1.0 + 1e-12, "|φ({u})| = {}", a.norm());
            ensure!(
                (a.conj() - char_fn(-u, &t)).norm() < 1e-12,
                "φ(-u) != conj φ(u) at u = {u}"
            );
        }
    }
    Ok("two triples, 100 points".into())
}

fn limit_remark(_: &ValidationConfig) -> CheckResult {
    let (g, p) = (0.5, 0.5);
    let sp = scaling_params(g, p, 1.0).map_err(err)?;
    let mut worst = 0f64;
    for b in [50i64, 80, 120] {
        // middle of the bracket window
        let t = ((b as f64 + 0.5) * sp.nu / (g * sp.c2)).powi(3);
        let lhs = (a_of_gamma(1, g).map_err(err)? - g) * sp.c2 * t.cbrt();
        let rhs = 4.0 * t * crate::spectral::ELL1 / (sp.bracket(t) as f64).powi(2);
        let rel = (lhs / rhs - 1.0).abs();
        ensure!(rel <= 0.02, "bracket {b}: relative gap {rel}");
        worst = worst.max(rel);
    }
    Ok(format!("worst relative gap {worst:.4}"))
}

fn limit_negligible(_: &ValidationConfig) -> CheckResult {
    let sp = scaling_params(0.5, 0.5, 1.0).map_err(err)?;
    let mut prev = f64::INFINITY;
    let mut out = Vec::new();
    for b in [10, 15, 20] {
        let s = GapSumSampler::new(sp, sp.time_for_bracket(b).map_err(err)?).map_err(err)?;
        let e = s.exceedance(0.1);
        ensure!(
            e < prev,
            "P(Y > 0.1) = {e} does not decrease at bracket {b}"
        );
        prev = e;
        out.push(format!("{e:.2e}"));
    }
    Ok(out.join(", "))
}
