use std::fmt::Write as _;
use std::fs;

use anyhow::{anyhow, bail, Context, Result};
use trapwalk::limitlaw::{
    beta, char_fn, empirical_cf, levy_atoms, levy_tail, scaling_params, BetaKind, GapSumSampler,
};
use trapwalk::montecarlo::annealed_mc;
use trapwalk::regimes::{figure1_table, gamma1, gamma2, PhaseRow};
use trapwalk::spectral::interval_spectrum;
use trapwalk::survival::{annealed_exact_1d, averaged_survival, quenched_survival_1d};
use trapwalk::validation::{modules, run_checks, ValidationConfig};
use trapwalk::{gap_structure, sample_environment, Environment};

use crate::output::{emit, Header};
use crate::{
    EnvArgs, LimitArgs, PhaseArgs, SpectrumArgs, Status, SurvivalArgs, SurvivalMode, ValidateArgs,
};

pub fn env(a: EnvArgs) -> Result<Status> {
    let env = sample_environment(a.dim, a.radius, a.p, a.seed)?;
    let header = Header::new("env")
        .field("dim", a.dim)
        .field("radius", a.radius)
        .field("p", a.p)
        .field("seed", a.seed);
    emit(a.out.as_deref(), &(header.into_string() + &env.to_text()))?;
    Ok(Status::Ok)
}

fn load_env(a: &SurvivalArgs) -> Result<Environment> {
    match &a.env {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Environment::from_text(&text).with_context(|| format!("parsing {}", path.display()))
        }
        None => {
            let p =
                a.p.ok_or_else(|| anyhow!("--p is required unless --env is given"))?;
            Ok(sample_environment(a.dim, a.radius, p, a.seed)?)
        }
    }
}

fn density(a: &SurvivalArgs) -> Result<f64> {
    a.p.ok_or_else(|| anyhow!("--p is required for mode {}", a.mode.name()))
}

pub fn survival(a: SurvivalArgs) -> Result<Status> {
    let mut header = Header::new("survival")
        .field("mode", a.mode.name())
        .list("t", &a.t)
        .opt("env", a.env.as_ref().map(|p| p.display().to_string()));
    let mut body = String::from("t,value,error,mode\n");
    let mut failures = Vec::new();
    match a.mode {
        SurvivalMode::AnnealedExact => {
            let p = density(&a)?;
            if a.dim != 1 {
                bail!(
                    "annealed-exact needs --dim 1 (use annealed-mc for dim {})",
                    a.dim
                );
            }
            header = header
                .field("dim", a.dim)
                .field("p", p)
                .field("tail_tol", a.tail_tol);
            for &t in &a.t {
                let v = annealed_exact_1d(p, t, a.tail_tol)?;
                writeln!(body, "{t},{},{},{}", v.value, v.error, v.mode.as_str())?;
            }
        }
        SurvivalMode::AnnealedMc => {
            let p = density(&a)?;
            header = header
                .field("dim", a.dim)
                .field("p", p)
                .field("walks", a.walks)
                .field("seed", a.seed)
                .field("check", a.check);
            if a.check && a.dim != 1 {
                bail!("--check compares against the exact series, which needs --dim 1");
            }
            for &t in &a.t {
                let e = annealed_mc(a.dim, p, t, a.walks as usize, a.seed)?;
                writeln!(body, "{t},{},{},monte-carlo", e.mean, e.std_error)?;
                if a.check {
                    let exact = annealed_exact_1d(p, t, 1e-12)?.value;
                    if !e.agrees_with(exact, 3.0, 1.0 / a.walks as f64) {
                        failures.push(format!(
                            "t = {t}: estimate {} differs from exact {exact} by more than 3 standard errors ({})",
                            e.mean, e.std_error
                        ));
                    }
                }
            }
        }
        SurvivalMode::Quenched | SurvivalMode::Averaged => {
            let env = load_env(&a)?;
            header = header
                .field("dim", env.dim())
                .field("radius", env.radius())
                .field("p", env.density())
                .field("seed", env.seed());
            let x = a.x.clone().unwrap_or_else(|| vec![0; env.dim()]);
            if x.len() != env.dim() {
                bail!(
                    "--x has {} coordinates but the environment has dimension {}",
                    x.len(),
                    env.dim()
                );
            }
            if a.mode == SurvivalMode::Quenched {
                header = header.list("x", &x);
                let gaps = if env.dim() == 1 {
                    Some(gap_structure(&env)?)
                } else {
                    None
                };
                if gaps.is_none() && x.iter().any(|&c| c != 0) {
                    bail!(
                        "quenched mode in dimension {} supports only the origin",
                        env.dim()
                    );
                }
                for &t in &a.t {
                    let v = match &gaps {
                        Some(g) => quenched_survival_1d(g, x[0], t)?,
                        None => averaged_survival(&env, t, 0)?,
                    };
                    writeln!(body, "{t},{},{},{}", v.value, v.error, v.mode.as_str())?;
                }
            } else {
                header = header.field("scale", a.scale);
                for &t in &a.t {
                    let v = averaged_survival(&env, t, a.scale)?;
                    writeln!(body, "{t},{},{},{}", v.value, v.error, v.mode.as_str())?;
                }
            }
        }
    }
    emit(a.out.as_deref(), &(header.into_string() + &body))?;
    if failures.is_empty() {
        Ok(Status::Ok)
    } else {
        for f in &failures {
            eprintln!("check failed: {f}");
        }
        Ok(Status::Failed)
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

pub fn phase(a: PhaseArgs) -> Result<Status> {
    if !(a.gamma_min >= 0.0 && a.gamma_max >= a.gamma_min) {
        bail!("need 0 <= gamma-min <= gamma-max");
    }
    let rows = figure1_table(a.dim, &linspace(a.gamma_min, a.gamma_max, a.steps))?;
    let header = Header::new("phase")
        .field("dim", a.dim)
        .field("gamma_min", a.gamma_min)
        .field("gamma_max", a.gamma_max)
        .field("steps", a.steps)
        .field("gamma1", gamma1(a.dim))
        .field("gamma2", gamma2(a.dim));
    let mut body = String::from("gamma,abar,inv_abar,cases\n");
    for r in &rows {
        writeln!(
            body,
            "{},{},{},{}",
            r.gamma,
            r.abar,
            r.inv_abar,
            r.cases_label()
        )?;
    }
    let header = header.into_string();
    emit(a.out.as_deref(), &(header.clone() + &body))?;
    if let Some(path) = &a.svg {
        let svg = phase_svg(&header, &rows, a.dim, a.gamma_min, a.gamma_max);
        fs::write(path, svg).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(Status::Ok)
}

fn phase_svg(header: &str, rows: &[PhaseRow], dim: usize, gmin: f64, gmax: f64) -> String {
    let (w, h, m) = (640.0, 400.0, 50.0);
    let ymax = 1.1;
    let span = if gmax > gmin { gmax - gmin } else { 1.0 };
    let sx = |g: f64| m + (g - gmin) / span * (w - 2.0 * m);
    let sy = |y: f64| h - m - y.clamp(0.0, ymax) / ymax * (h - 2.0 * m);
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<!--\n");
    // `--` may not appear inside an XML comment
    s.push_str(&header.replace("--", "- -"));
    s.push_str("-->\n");
    let _ = writeln!(s, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">");
    let _ = writeln!(s, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<path d=\"M{m} {} H{} M{m} {} V{m}\" stroke=\"black\" fill=\"none\"/>",
        h - m,
        w - m,
        h - m
    );
    let pts: Vec<String> = rows
        .iter()
        .filter(|r| r.inv_abar.is_finite())
        .map(|r| format!("{:.2},{:.2}", sx(r.gamma), sy(r.inv_abar)))
        .collect();
    let _ = writeln!(
        s,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"navy\" stroke-width=\"2\"/>",
        pts.join(" ")
    );
    for (name, g) in [("gamma1", gamma1(dim)), ("gamma2", gamma2(dim))] {
        if g < gmin || g > gmax {
            continue;
        }
        let x = sx(g);
        let _ = writeln!(
            s,
            "<line class=\"marker\" id=\"{name}\" data-gamma=\"{g}\" x1=\"{x:.2}\" y1=\"{m}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"firebrick\" stroke-dasharray=\"4 3\"/>",
            h - m
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{}\" font-size=\"12\">{name} = {g:.4}</text>",
            x + 4.0,
            m + 14.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-size=\"13\">gamma</text>",
        w / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        "<text x=\"8\" y=\"{}\" font-size=\"13\">1/abar (d = {dim})</text>",
        m - 16.0
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-size=\"11\">{gmin}</text>",
        m - 8.0,
        h - m + 16.0
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-size=\"11\">{gmax}</text>",
        w - m - 8.0,
        h - m + 16.0
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-size=\"11\">1</text>",
        m - 16.0,
        sy(1.0) + 4.0
    );
    s.push_str("</svg>\n");
    s
}

pub fn limitlaw(a: LimitArgs) -> Result<Status> {
    let sp = scaling_params(a.gamma, a.p, a.c)?;
    if a.u_points < 2 || !(a.u_max > 0.0) {
        bail!("need --u-points >= 2 and --u-max > 0");
    }
    let triple = levy_atoms(a.gamma, a.p, a.c, a.u_max, 1e-12)
        .with_context(|| format!("gamma must lie in (0, {:.6}) so that a1 < 2", gamma2(1)))?;
    let kind = if a.centered {
        BetaKind::Centered
    } else {
        BetaKind::Uncentered
    };
    if !a.centered && sp.a1 >= 1.0 {
        bail!(
            "uncentered sums need a1 < 1, i.e. gamma < 2/3 (a1 = {}); pass --centered",
            sp.a1
        );
    }
    if a.centered && sp.a1 <= 1.0 {
        bail!(
            "centered sums need a1 > 1, i.e. gamma > 2/3 (a1 = {}); drop --centered",
            sp.a1
        );
    }
    let b = beta(a.gamma, a.p, a.c, kind, 1e-15)?;
    let triple = triple.with_beta(b.atom_sum);
    let times: Vec<f64> = match &a.t_list {
        Some(ts) => ts.clone(),
        None => a
            .brackets
            .iter()
            .map(|&k| sp.time_for_bracket(k))
            .collect::<trapwalk::Result<_>>()?,
    };
    let grid: Vec<f64> = linspace(-a.u_max, a.u_max, a.u_points);
    let phi: Vec<_> = grid.iter().map(|&u| char_fn(u, &triple)).collect();
    let target = levy_tail(1.0, a.gamma, a.p, a.c)?;

    let header = Header::new("limitlaw")
        .field("gamma", a.gamma)
        .field("p", a.p)
        .field("c", a.c)
        .list("t", &times)
        .field("n_envs", a.n_envs)
        .field("centered", a.centered)
        .field("seed", a.seed)
        .field("u_max", a.u_max)
        .field("u_points", a.u_points)
        .field("a1", sp.a1)
        .field("beta", b.atom_sum)
        .into_string();
    let mut samples_csv = String::from("t,bracket,index,value\n");
    let mut cf_csv =
        String::from("t,u,ecf_re,ecf_im,exact_re,exact_im,limit_re,limit_im,ecf_dist,exact_dist\n");
    let mut summary =
        String::from("t,bracket,gap_count,sup_ecf_dist,sup_exact_dist,tail_count,levy_tail_at_1\n");
    let mut dists = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        let sampler = GapSumSampler::new(sp, t)?;
        let samples =
            sampler.sample_many(a.n_envs as usize, a.centered, a.seed.wrapping_add(k as u64))?;
        if a.samples_out.is_some() {
            for (i, v) in samples.iter().enumerate() {
                writeln!(samples_csv, "{t},{},{i},{v}", sampler.bracket)?;
            }
        }
        let ecf = empirical_cf(&samples, &grid)?;
        let (mut sup_e, mut sup_x) = (0f64, 0f64);
        for (j, &u) in grid.iter().enumerate() {
            let exact = sampler.char_fn(u, a.centered);
            let (de, dx) = ((ecf[j] - phi[j]).norm(), (exact - phi[j]).norm());
            sup_e = sup_e.max(de);
            sup_x = sup_x.max(dx);
            writeln!(
                cf_csv,
                "{t},{u},{},{},{},{},{},{},{de},{dx}",
                ecf[j].re, ecf[j].im, exact.re, exact.im, phi[j].re, phi[j].im
            )?;
        }
        dists.push(sup_e);
        writeln!(
            summary,
            "{t},{},{},{sup_e},{sup_x},{},{target}",
            sampler.bracket,
            sampler.n,
            sampler.tail_count(1.0)
        )?;
    }
    let trend = dists.windows(2).all(|w| w[1] <= w[0]);
    writeln!(
        summary,
        "# sup_ecf_dist nonincreasing in t: {}",
        if trend { "yes" } else { "no" }
    )?;
    if let Some(p) = &a.samples_out {
        emit(Some(p), &(header.clone() + &samples_csv))?;
    }
    if let Some(p) = &a.cf_out {
        emit(Some(p), &(header.clone() + &cf_csv))?;
    }
    emit(None, &(header + &summary))?;
    Ok(Status::Ok)
}

pub fn validate(a: ValidateArgs) -> Result<Status> {
    let known = modules();
    if let Some(f) = &a.filter {
        if !known.contains(&f.as_str()) {
            bail!("unknown module {f:?}; expected one of {}", known.join(", "));
        }
    }
    let outcomes = run_checks(&ValidationConfig { seed: a.seed }, a.filter.as_deref());
    let header = Header::new("validate")
        .opt("filter", a.filter.as_deref())
        .field("seed", a.seed)
        .into_string();
    let mut body = String::from("module,check,status,detail\n");
    for o in &outcomes {
        let status = if o.passed { "pass" } else { "fail" };
        writeln!(
            body,
            "{},{},{status},\"{}\"",
            o.module,
            o.name,
            o.detail.replace('"', "'")
        )?;
        eprintln!(
            "{:<10} {:<28} {status} {:>9.3} s",
            o.module,
            o.name,
            o.elapsed.as_secs_f64()
        );
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    writeln!(body, "# {} checks, {failed} failed", outcomes.len())?;
    emit(a.out.as_deref(), &(header + &body))?;
    match outcomes.iter().find(|o| !o.passed) {
        None => Ok(Status::Ok),
        Some(o) => {
            eprintln!("first failure: {}/{}: {}", o.module, o.name, o.detail);
            Ok(Status::Failed)
        }
    }
}

pub fn spectrum(a: SpectrumArgs) -> Result<Status> {
    let s = interval_spectrum(a.length)?;
    let header = Header::new("spectrum")
        .field("length", a.length)
        .into_string();
    let mut body = String::from("n,lambda,mass\n");
    for (n, (lam, m)) in s.eigenvalues.iter().zip(&s.psi_n_mass).enumerate() {
        writeln!(body, "{n},{lam},{m}")?;
    }
    emit(a.out.as_deref(), &(header + &body))?;
    Ok(Status::Ok)
}
