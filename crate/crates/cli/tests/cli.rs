use std::process::{Command, Output};

use tempfile::tempdir;
use trapwalk::Environment;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trapwalk"))
        .args(args)
        .output()
        .expect("spawn trapwalk")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// CSV rows after the `#` header and the column line.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn body(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("# build"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn env_file_round_trips() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("e.txt");
    let o = run(&[
        "env",
        "--dim",
        "1",
        "--radius",
        "100",
        "--p",
        "0.5",
        "--seed",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# trapwalk env\n# build: "));
    let env = Environment::from_text(&text).unwrap();
    assert_eq!(env, trapwalk::sample_environment(1, 100, 0.5, 1).unwrap());
}

#[test]
fn usage_and_parameter_errors_exit_2() {
    let o = run(&["env", "--dim", "1", "--radius", "10"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["env", "--dim", "1", "--radius", "10", "--p", "1.0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0 <= p < 1"));
    let o = run(&["limitlaw", "--n-envs", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["phase", "--steps", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn annealed_exact_at_time_zero() {
    let o = run(&[
        "survival",
        "--mode",
        "annealed-exact",
        "--p",
        "0.5",
        "--t",
        "0",
    ]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(r[0][1], "0.5");
}

#[test]
fn averaged_and_quenched_agree_on_a_single_site() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("e.txt");
    let p = path.to_str().unwrap();
    assert!(
        run(&["env", "--dim", "1", "--radius", "50", "--p", "0.3", "--seed", "4", "--out", p])
            .status
            .success()
    );
    let q = run(&[
        "survival", "--mode", "quenched", "--env", p, "--t", "0.5,2,9",
    ]);
    let a = run(&[
        "survival", "--mode", "averaged", "--env", p, "--scale", "0", "--t", "0.5,2,9",
    ]);
    let (q, a) = (rows(&stdout(&q)), rows(&stdout(&a)));
    for (x, y) in q.iter().zip(&a) {
        assert_eq!(x[1], y[1]);
    }
}

#[test]
fn annealed_check_passes_at_t_10() {
    let o = run(&[
        "survival",
        "--mode",
        "annealed-mc",
        "--p",
        "0.5",
        "--t",
        "10",
        "--walks",
        "200000",
        "--check",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn survival_output_is_reproducible() {
    let args = [
        "survival",
        "--mode",
        "annealed-mc",
        "--dim",
        "2",
        "--p",
        "0.3",
        "--t",
        "1,4",
        "--walks",
        "5000",
        "--seed",
        "9",
    ];
    assert_eq!(stdout(&run(&args)), stdout(&run(&args)));
}

#[test]
fn phase_diagram_for_d2() {
    let dir = tempdir().unwrap();
    let svg = dir.path().join("f.svg");
    let o = run(&["phase", "--svg", svg.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("# gamma1=0.5\n"));
    for r in rows(&text) {
        let g: f64 = r[0].parse().unwrap();
        if g >= 0.5 {
            assert_eq!(r[2], "1", "gamma = {g}");
        }
    }
    let svg = std::fs::read_to_string(svg).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let markers: Vec<f64> = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("marker"))
        .map(|n| n.attribute("data-gamma").unwrap().parse().unwrap())
        .collect();
    assert_eq!(markers.len(), 2);
    assert_eq!(markers[0], 0.5);
    assert!((markers[1] - 0.5f64.sqrt()).abs() < 1e-4);
    assert!(doc.descendants().any(|n| n.has_tag_name("polyline")));
}

#[test]
fn limitlaw_rejects_gamma_above_gamma2() {
    let o = run(&["limitlaw", "--gamma", "0.9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("a1 < 2"));
}

#[test]
fn limitlaw_summary_and_files() {
    let dir = tempdir().unwrap();
    let cf = dir.path().join("cf.csv");
    let samples = dir.path().join("s.csv");
    let args = [
        "limitlaw",
        "--n-envs",
        "500",
        "--cf-out",
        cf.to_str().unwrap(),
        "--samples-out",
        samples.to_str().unwrap(),
    ];
    let o = run(&args);
    assert!(o.status.success());
    let summary = stdout(&o);
    let r = rows(&summary);
    assert_eq!(r.len(), 3);
    assert_eq!(
        r.iter().map(|x| x[1].as_str()).collect::<Vec<_>>(),
        ["10", "15", "20"]
    );
    assert!(summary.contains("nonincreasing in t"));
    assert_eq!(
        rows(&std::fs::read_to_string(&samples).unwrap()).len(),
        1500
    );
    assert_eq!(rows(&std::fs::read_to_string(&cf).unwrap()).len(), 3 * 201);
    assert_eq!(body(&summary), body(&stdout(&run(&args))));
}

#[test]
fn limitlaw_centered_needs_a1_above_one() {
    assert_eq!(
        run(&["limitlaw", "--gamma", "0.7", "--n-envs", "10"])
            .status
            .code(),
        Some(2)
    );
    let o = run(&[
        "limitlaw",
        "--gamma",
        "0.7",
        "--centered",
        "--n-envs",
        "200",
        "--brackets",
        "4,5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn validate_filter_and_determinism() {
    let a = run(&["validate", "--filter", "regimes", "--seed", "3"]);
    assert_eq!(a.status.code(), Some(0));
    let text = stdout(&a);
    assert!(rows(&text).iter().all(|r| r[0] == "regimes"));
    assert_eq!(
        text,
        stdout(&run(&["validate", "--filter", "regimes", "--seed", "3"]))
    );
    assert_eq!(
        run(&["validate", "--filter", "nope"]).status.code(),
        Some(2)
    );
}

#[test]
fn spectrum_lists_all_modes() {
    let o = run(&["spectrum", "--length", "6"]);
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 6);
    assert_eq!(r[1][2], "0");
}
