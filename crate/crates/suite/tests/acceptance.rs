//! Acceptance criteria, one line each. Exits nonzero if any criterion fails.

#![allow(clippy::approx_constant, clippy::type_complexity)]

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use trapwalk::env::{gap_structure, sample_environment};
use trapwalk::limitlaw::{
    beta, empirical_cf, levy_atoms, levy_tail, sandwich_check, scaling_params,
    truncated_moment_finite_t, truncated_moment_limit, BetaKind, GapSumSampler, WindowRule,
};
use trapwalk::montecarlo::{annealed_mc, correlation_mc, exit_time_tail_mc, killed_walk_mc};
use trapwalk::regimes::{a_of_gamma, constants, gamma1, gamma2};
use trapwalk::spectral::{
    dense_spectrum, gap_envelope, interval_eigenvalue, interval_mass, lambda0_envelope,
    psi0_mass_envelope, psi0_mass_envelope_corrected, DEFAULT_SITE_CAP,
};
use trapwalk::survival::{annealed_exact_1d, quenched_survival_1d, truncation_gap_bound};
use trapwalk::Error;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
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

fn spectral_exactness() -> Outcome {
    let mut worst = 0f64;
    for l in 1..=64usize {
        let sites: Vec<Vec<i64>> = (0..l as i64).map(|x| vec![x]).collect();
        let d = dense_spectrum(&sites, 1, DEFAULT_SITE_CAP).expect("dense spectrum");
        for (n, &ev) in d.eigenvalues.iter().enumerate() {
            worst = worst.max((ev - interval_eigenvalue(l, n)).abs());
        }
    }
    outcome(
        worst <= 1e-10,
        format!("max |closed form - dense| = {worst:.2e} over l <= 64"),
    )
}

fn interval_envelopes() -> Outcome {
    let grid = log_grid(10.0, 1e4, 40);
    let (mut v0, mut vg, mut vm, mut vc) = (0, 0, 0, 0);
    let mut first_mass = None;
    for &l in &grid {
        let l0 = interval_eigenvalue(l, 0);
        if !lambda0_envelope(l).contains(l0) {
            v0 += 1;
        }
        if !gap_envelope(l).contains(interval_eigenvalue(l, 1) - l0) {
            vg += 1;
        }
        let m = interval_mass(l, 0);
        if !psi0_mass_envelope(l).contains(m) {
            vm += 1;
            first_mass.get_or_insert(l);
        }
        if !psi0_mass_envelope_corrected(l).contains(m) {
            vc += 1;
        }
    }
    outcome(
        v0 + vg + vm == 0,
        format!(
            "{} lengths; violations: λ0 {v0}, λ1-λ0 {vg}, (ψ0,1) {vm} (first at l = {}); \
             (ψ0,1) with central value sqrt((l+1)/ℓ1): {vc}",
            grid.len(),
            first_mass.map_or("-".to_string(), |l| l.to_string())
        ),
    )
}

fn exact_vs_mc() -> Outcome {
    let walks = 100_000;
    let mut agree = 0;
    let mut censored = 0f64;
    for i in 0..50u64 {
        let p = [0.1, 0.2, 0.3, 0.5][i as usize % 4];
        let env = sample_environment(1, 300, p, 100 + i).expect("environment");
        let gaps = gap_structure(&env).expect("gaps");
        let mut x = (i as i64 * 7) % 41 - 20;
        while env.is_obstacle(&[x]) == Some(true) {
            x += 1;
        }
        let t = 1.0 + (i % 20) as f64;
        let exact = quenched_survival_1d(&gaps, x, t).expect("exact");
        let mc = killed_walk_mc(&env, &[x], t, walks, 1000 + i).expect("mc");
        censored = censored.max(mc.censored_fraction);
        if mc
            .estimate
            .agrees_with(exact.value, 3.0, 1.0 / walks as f64)
        {
            agree += 1;
        }
    }
    outcome(
        agree >= 47,
        format!("{agree}/50 within 3 se at {walks} walks; max censored fraction {censored:.1e}"),
    )
}

fn annealed_identity() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, t) in [5.0, 10.0, 20.0].into_iter().enumerate() {
        let exact = annealed_exact_1d(0.5, t, 1e-12).expect("series").value;
        let mc = annealed_mc(1, 0.5, t, 1_000_000, 40 + k as u64).expect("mc");
        let z = (mc.mean - exact) / mc.std_error;
        ok &= z.abs() <= 3.0;
        parts.push(format!("t={t}: z={z:+.2}"));
    }
    outcome(ok, parts.join(", "))
}

fn annealed_rate_trend() -> Outcome {
    let c2 = constants(1, 0.5).expect("constants").c2;
    let rates: Vec<f64> = [1e2, 1e3, 1e4]
        .iter()
        .map(|&t| {
            -annealed_exact_1d(0.5, t, 1e-300)
                .expect("series")
                .value
                .ln()
                / t.cbrt()
        })
        .collect();
    let increasing = rates.windows(2).all(|w| w[1] > w[0]);
    let below = rates.iter().all(|&r| r < c2);
    outcome(
        increasing && below,
        format!(
            "rates {:.5}, {:.5}, {:.5} vs c2 = {c2:.5}",
            rates[0], rates[1], rates[2]
        ),
    )
}

fn exit_time_bound() -> Outcome {
    let mut ok = true;
    let mut worst = f64::NEG_INFINITY;
    let mut i = 0u64;
    for a in [0.5, 1.0, 2.0] {
        for d in [1usize, 2] {
            for t in [10.0, 50.0] {
                let est = exit_time_tail_mc(a, d, t, 100_000, 60 + i).expect("mc");
                let bound = truncation_gap_bound(a, d, t).expect("bound").bound;
                let excess = est.mean - bound - 3.0 * est.std_error;
                worst = worst.max(excess);
                ok &= excess <= 0.0;
                i += 1;
            }
        }
    }
    outcome(
        ok,
        format!("12 grid points; max(estimate - bound - 3 se) = {worst:.3e}"),
    )
}

fn phase_identities() -> Outcome {
    let mut ok = gamma1(2) == 0.5
        && (gamma2(2) - 0.7071).abs() <= 0.005
        && (gamma2(2) - 0.71).abs() <= 0.005;
    let mut worst_a = 0f64;
    let mut worst_min = 0f64;
    let step = 1e-4;
    for d in 1..=10 {
        worst_a = worst_a.max((a_of_gamma(d, gamma1(d)).expect("a") - 1.0).abs());
        let (mut best, mut arg) = (f64::INFINITY, 0.0);
        for i in 1..30_000 {
            let g = i as f64 * step;
            let v = a_of_gamma(d, g).expect("a") - g / 2.0;
            if v < best {
                best = v;
                arg = g;
            }
        }
        worst_min = worst_min.max((best - 2f64.powf(-2.0 / (d as f64 + 2.0))).abs());
        ok &= (arg - gamma2(d)).abs() <= step;
    }
    ok &= worst_a <= 1e-12 && worst_min <= 1e-6;
    outcome(
        ok,
        format!(
            "γ1(2) = {}, γ2(2) = {:.5}; max |a(γ1) - 1| = {worst_a:.1e}; max |min - 2^(-2/(d+2))| = {worst_min:.1e}",
            gamma1(2),
            gamma2(2)
        ),
    )
}

fn limit_boundary() -> Outcome {
    let g2 = gamma2(1);
    let a1 = scaling_params(g2, 0.5, 1.0).expect("params").a1;
    let diverges = |g: f64| {
        matches!(
            levy_atoms(g, 0.5, 1.0, 5.0, 1e-10),
            Err(Error::Divergence(_))
        )
    };
    let at = diverges(g2);
    let above = diverges(1.01 * g2);
    let below =
        !diverges((1.0 - 1e-9) * g2) && levy_atoms((1.0 - 1e-3) * g2, 0.5, 1.0, 5.0, 1e-10).is_ok();
    let mut worst = 0f64;
    for (g, p) in [(0.5, 0.5), (0.7, 0.5), (0.7, 0.3), (0.8, 0.2)] {
        let t = levy_atoms(g, p, 1.0, 5.0, 1e-12).expect("atoms");
        // increments of the partial sums of x² dL from the small-atom end
        let inc: Vec<f64> = t.atoms.iter().map(|&(z, m)| m * z * z).collect();
        let n = inc.len();
        let measured = inc[n - 1] / inc[n - 2];
        let expect = (1.0 - p).powf(2.0 / scaling_params(g, p, 1.0).expect("params").a1 - 1.0);
        worst = worst.max((measured - expect).abs());
    }
    outcome(
        (a1 - 2.0).abs() <= 1e-12 && at && above && below && worst <= 1e-6,
        format!("a1(γ2) - 2 = {:.1e}; divergence at/above/below γ2: {at}/{above}/{}; ratio error {worst:.1e}", a1 - 2.0, !below),
    )
}

fn sandwich_rates(rule: WindowRule, brackets: &[i64], envs: u64) -> Vec<(i64, f64)> {
    let (p, gamma, eps) = (0.5, 0.4, 0.2);
    let sp = scaling_params(gamma, p, 1.0).expect("params");
    brackets
        .iter()
        .map(|&b| {
            let t = sp.time_for_bracket(b).expect("time");
            let scale = sp.scale(t);
            let widest = (1.0 + eps) * scale * (p / (1.0 - p)).max(p);
            let radius = (1.25 * widest / p) as usize + 200;
            let passed = (0..envs)
                .into_par_iter()
                .filter(|&i| {
                    let env = sample_environment(1, radius, p, 10_000 * b as u64 + i)
                        .expect("environment");
                    sandwich_check(&env, t, gamma, eps, rule).is_ok_and(|r| r.passed)
                })
                .count();
            (b, passed as f64 / envs as f64)
        })
        .collect()
}

fn sandwich() -> Outcome {
    let brackets = [8, 10, 12];
    let stated = sandwich_rates(WindowRule::AsStated, &brackets, 200);
    let counted = sandwich_rates(WindowRule::ObstacleCount, &brackets, 200);
    let monotone = stated.windows(2).all(|w| w[1].1 >= w[0].1);
    let last = stated.last().expect("rates").1;
    let fmt = |v: &[(i64, f64)]| {
        v.iter()
            .map(|(b, r)| format!("b={b}: {r:.3}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    outcome(
        monotone && last >= 0.9,
        format!(
            "pass rates {}; with obstacle-count windows {}",
            fmt(&stated),
            fmt(&counted)
        ),
    )
}

fn truncated_moments() -> Outcome {
    let (k, tau, g, p, c) = (1, 1.0, 0.5, 0.5, 1.0);
    let limit = truncated_moment_limit(k, tau, g, p, c).expect("limit");
    let sp = scaling_params(g, p, c).expect("params");
    let vals: Vec<f64> = [10, 15, 20]
        .iter()
        .map(|&b| {
            truncated_moment_finite_t(k, tau, g, p, c, sp.time_for_bracket(b).expect("time"))
                .expect("moment")
        })
        .collect();
    let gaps: Vec<f64> = vals.iter().map(|v| (v - limit).abs() / limit).collect();
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    outcome(
        monotone && gaps[2] < 0.25,
        format!(
            "values {:.4}, {:.4}, {:.4} vs limit {limit:.4}; relative gaps {:.3}, {:.3}, {:.3}",
            vals[0], vals[1], vals[2], gaps[0], gaps[1], gaps[2]
        ),
    )
}

fn distributional_trend() -> Outcome {
    let (g, p, c) = (0.5, 0.5, 1.0);
    let sp = scaling_params(g, p, c).expect("params");
    let b1 = beta(g, p, c, BetaKind::Uncentered, 1e-15)
        .expect("beta")
        .atom_sum;
    let triple = levy_atoms(g, p, c, 5.0, 1e-12)
        .expect("atoms")
        .with_beta(b1);
    let grid: Vec<f64> = (0..=200).map(|i| -5.0 + 0.05 * i as f64).collect();
    let phi: Vec<_> = grid
        .iter()
        .map(|&u| trapwalk::limitlaw::char_fn(u, &triple))
        .collect();
    let mut dist = Vec::new();
    let mut exact_dist = Vec::new();
    let mut tail = 0.0;
    for b in [10, 15, 20] {
        let t = sp.time_for_bracket(b).expect("time");
        let sampler = GapSumSampler::new(sp, t).expect("sampler");
        let samples = sampler
            .sample_many(10_000, false, 500 + b as u64)
            .expect("samples");
        let ecf = empirical_cf(&samples, &grid).expect("ecf");
        dist.push(
            ecf.iter()
                .zip(&phi)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max),
        );
        exact_dist.push(
            grid.iter()
                .zip(&phi)
                .map(|(&u, b)| (sampler.char_fn(u, false) - b).norm())
                .fold(0.0, f64::max),
        );
        tail = sampler.tail_count(1.0);
    }
    let target = levy_tail(1.0, g, p, c).expect("tail");
    let nonincreasing = dist.windows(2).all(|w| w[1] <= w[0]);
    let tail_ok = (tail - target).abs() <= 0.3 * target;
    outcome(
        nonincreasing && tail_ok,
        format!(
            "sup|ecf - φ| = {:.3}, {:.3}, {:.3} (exact finite-t cf: {:.3}, {:.3}, {:.3}); n P(Y > 1) = {tail:.3} vs -L(1) = {target:.3}",
            dist[0], dist[1], dist[2], exact_dist[0], exact_dist[1], exact_dist[2]
        ),
    )
}

fn correlation_positivity() -> Outcome {
    let mut configs: Vec<(f64, Vec<i64>, Vec<i64>, f64)> = Vec::new();
    for i in 0..10i64 {
        let p = [0.1, 0.3, 0.5, 0.7, 0.9][i as usize % 5];
        configs.push((p, vec![0], vec![i % 4], 1.0 + (i % 5) as f64 * 2.0));
        configs.push((
            p,
            vec![0, 0],
            vec![i % 3, (i / 3) % 2],
            1.0 + (i % 4) as f64 * 2.0,
        ));
    }
    let mut worst = f64::INFINITY;
    for (k, (p, x, y, t)) in configs.iter().enumerate() {
        let e = correlation_mc(*p, x, y, *t, 100_000, 900 + k as u64, None).expect("mc");
        let z = if e.std_error > 0.0 {
            e.mean / e.std_error
        } else {
            0.0
        };
        worst = worst.min(z);
    }
    outcome(
        worst >= -3.0,
        format!(
            "{} configurations; min estimate / se = {worst:.2}",
            configs.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Duration); 12] = [
        (
            "spectral exactness",
            spectral_exactness,
            Duration::from_secs(5),
        ),
        (
            "interval envelopes",
            interval_envelopes,
            Duration::from_secs(10),
        ),
        (
            "exact vs Monte Carlo survival",
            exact_vs_mc,
            Duration::from_secs(120),
        ),
        (
            "annealed identity",
            annealed_identity,
            Duration::from_secs(120),
        ),
        (
            "annealed rate trend",
            annealed_rate_trend,
            Duration::from_secs(60),
        ),
        ("exit time bound", exit_time_bound, Duration::from_secs(60)),
        (
            "phase diagram identities",
            phase_identities,
            Duration::from_secs(5),
        ),
        ("limit law boundary", limit_boundary, Duration::from_secs(5)),
        ("scale sandwich", sandwich, Duration::from_secs(300)),
        (
            "truncated moments",
            truncated_moments,
            Duration::from_secs(60),
        ),
        (
            "distributional trend",
            distributional_trend,
            Duration::from_secs(600),
        ),
        (
            "correlation positivity",
            correlation_positivity,
            Duration::from_secs(120),
        ),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let passed = o.passed && elapsed <= *budget;
        if !passed {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {} [{:.1} s, budget {} s]",
            i + 1,
            if passed { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
