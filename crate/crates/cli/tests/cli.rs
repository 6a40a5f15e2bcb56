use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_meshlessbif"));
    c.env_remove("MESHLESSBIF_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn error_json(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).expect("error JSON on stderr");
    serde_json::from_str(line).unwrap()
}

/// Rows of a CSV as header-keyed maps.
fn read_csv(path: &Path) -> Vec<std::collections::HashMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    r.records().map(|rec| header.iter().cloned().zip(rec.unwrap().iter().map(String::from)).collect()).collect()
}

fn num(row: &std::collections::HashMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap()
}

/// Lower Bratu branch: `u = 2 ln(cosh t / cosh(t (1 - 2x)))` with `cosh t = 4 t / sqrt(2 p)`.
fn bratu_lower(p: f64, x: f64) -> f64 {
    let g = |t: f64| t.cosh() - 4.0 * t / (2.0 * p).sqrt();
    let (mut a, mut b) = (1e-9, 1.19967864);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if g(a) * g(m) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    let t = 0.5 * (a + b);
    2.0 * (t.cosh() / (t * (1.0 - 2.0 * x)).cosh()).ln()
}

#[test]
fn solve_lower_branch_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["solve", "--problem", "bratu1d", "--mu", "3", "--out", &out_arg(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&dir.path().join("solution.csv"));
    assert_eq!(rows.len(), 101);
    let worst = rows.iter().map(|r| (num(r, "u") - bratu_lower(3.0, num(r, "x"))).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-4, "{worst}");
    let peak = rows.iter().max_by(|a, b| num(a, "u").total_cmp(&num(b, "u"))).unwrap();
    assert!((num(peak, "x") - 0.5).abs() < 1e-12);
    for f in ["resolved_config.json", "convergence.jsonl", "basis.json", "solve.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let log = std::fs::read_to_string(dir.path().join("convergence.jsonl")).unwrap();
    assert!(log.lines().all(|l| serde_json::from_str::<Value>(l).is_ok()));
}

#[test]
fn upper_branch_is_reached_through_the_fold() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["solve", "--problem", "bratu1d", "--mu", "3", "--branch", "upper", "--out", &out_arg(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&dir.path().join("solution.csv"));
    let max_u = rows.iter().map(|r| num(r, "u")).fold(f64::MIN, f64::max);
    // Peaks 2 ln cosh t at the two roots t ~ 0.75 and t ~ 1.64 of cosh t = 4 t / sqrt(6).
    assert!((max_u - 1.975).abs() < 5e-3, "{max_u}");
}

#[test]
fn no_solution_past_the_fold_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["solve", "--problem", "bratu1d", "--mu", "5", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_json(&o)["error"]["kind"], "numerical");
}

#[test]
fn usage_errors_exit_two_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"problem": "bratu1d", "eigs": {"shift": 0.5}}"#).unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["solve", "--problem", "nope"],
        vec!["eigs", "--problem", "bratu1d", "--k", "51"],
        vec!["reproduce", "bogus"],
        vec!["solve", "--config", cfg.to_str().unwrap()],
        vec!["solve", "--problem", "bratu1d", "--frobnicate"],
        vec!["eigs", "--problem", "bratu1d", "--method", "lanczos"],
    ];
    for args in cases {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let e = error_json(&o);
        assert_eq!(e["error"]["kind"], "usage");
        assert_eq!(e["error"]["exit_code"], 2);
    }
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let o = bin().env("MESHLESSBIF_THREADS", "lots").args(["svd-report", "--problem", "bratu1d"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn continuation_finds_the_bratu_fold() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["continue", "--problem", "bratu1d", "--out", &out_arg(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let events: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("events.json")).unwrap()).unwrap();
    let folds: Vec<f64> = events.as_array().unwrap().iter().filter(|e| e["type"] == "fold").map(|e| e["mu"].as_f64().unwrap()).collect();
    assert_eq!(folds.len(), 1);
    assert!((3.51..=3.52).contains(&folds[0]), "{folds:?}");
    let rows = read_csv(&dir.path().join("branch.csv"));
    assert!(rows.iter().any(|r| r["tag"].contains("fold")));
    assert!(rows.windows(2).all(|w| num(&w[1], "s") > num(&w[0], "s")));
}

#[test]
fn allen_cahn_sweep_has_five_pitchforks() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["continue", "--problem", "allen_cahn", "--out", &out_arg(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let events: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("events.json")).unwrap()).unwrap();
    let mut eps: Vec<f64> = events.as_array().unwrap().iter().filter(|e| e["type"] == "pitchfork").map(|e| e["mu"].as_f64().unwrap()).collect();
    eps.sort_by(|a, b| b.total_cmp(a));
    assert_eq!(eps.len(), 5, "{eps:?}");
    for (k, e) in eps.iter().enumerate() {
        let exact = 2.0 / ((k + 1) as f64 * std::f64::consts::PI);
        assert!((e - exact).abs() <= 1e-3, "{e} vs {exact}");
    }
}

#[test]
fn fhn_run_finds_fold_and_hopf() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["continue", "--problem", "fhn", "--out", &out_arg(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let events: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("events.json")).unwrap()).unwrap();
    let of = |kind: &str| -> Vec<f64> { events.as_array().unwrap().iter().filter(|e| e["type"] == kind).map(|e| e["mu"].as_f64().unwrap()).collect() };
    assert!(of("fold").iter().any(|m| (0.94..=0.95).contains(m)), "{events}");
    assert!(of("hopf").iter().any(|m| (0.017..=0.020).contains(m)), "{events}");
    let rows = read_csv(&dir.path().join("branch.csv"));
    assert!(rows.iter().all(|r| !r["mean_v"].is_empty()));
}

fn leading_physical(dir: &Path) -> (f64, Vec<std::collections::HashMap<String, String>>) {
    let rows = read_csv(&dir.join("spectrum.csv"));
    let lam = rows.iter().filter(|r| r["group"] == "physical").map(|r| num(r, "re_lambda")).fold(f64::MIN, f64::max);
    (lam, rows)
}

#[test]
fn eigen_methods_agree_and_label_outputs() {
    let base = tempfile::tempdir().unwrap();
    let mut lam = Vec::new();
    for method in ["shift_invert", "naive", "fd"] {
        let d = base.path().join(method);
        let o = run(&["eigs", "--problem", "bratu1d", "--mu", "3", "--method", method, "--out", &out_arg(&d)]);
        assert!(o.status.success(), "{method}: {}", String::from_utf8_lossy(&o.stderr));
        let (l, rows) = leading_physical(&d);
        lam.push(l);
        match method {
            "naive" => assert!(rows.iter().any(|r| r["group"] == "spurious_near_zero")),
            "fd" => {
                assert!(rows.iter().all(|r| r["source"] == "fd"));
                assert_eq!(read_csv(&d.join("eigenfunction_1.csv"))[0]["source"], "fd");
            }
            _ => assert!(rows.iter().all(|r| r["group"] == "physical")),
        }
        let phi = read_csv(&d.join("eigenfunction_1.csv"));
        assert!(phi.iter().any(|r| num(r, "re_phi_u") == 1.0));
    }
    assert!((lam[0] - lam[1]).abs() <= 1e-3, "{lam:?}");
    assert!((lam[0] - lam[2]).abs() <= 2e-2 * lam[2].abs(), "{lam:?}");
    assert!((lam[0] + 4.64).abs() <= 0.05);
}

#[test]
fn resolved_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a");
    let o = run(&["solve", "--problem", "allen_cahn", "--mu", "0.5", "--seed", "3", "--out", &out_arg(&first)]);
    assert!(o.status.success());
    let mut cfg: Value = serde_json::from_str(&std::fs::read_to_string(first.join("resolved_config.json")).unwrap()).unwrap();
    let second = dir.path().join("b");
    cfg["output_dir"] = Value::String(out_arg(&second));
    let path = dir.path().join("again.json");
    std::fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let o = run(&["solve", "--config", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["solution.csv", "basis.json"] {
        assert_eq!(std::fs::read(first.join(f)).unwrap(), std::fs::read(second.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn toml_config_and_svd_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, format!("problem = \"bratu1d\"\nseed = 2\noutput_dir = \"{}\"\n", out_arg(&dir.path().join("o")))).unwrap();
    let o = run(&["svd-report", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/svd_report.json")).unwrap()).unwrap();
    assert_eq!(rep["boundary_rank"]["full_row_rank"], true);
    assert!(rep["decay"]["fit_r2"].as_f64().unwrap() >= 0.97);
    let sv = read_csv(&dir.path().join("o/decay.csv"));
    assert_eq!(sv.len(), 50);
    assert!(sv.windows(2).all(|w| num(&w[0], "sigma") >= num(&w[1], "sigma")));
}

#[test]
fn reproduce_properties_suite() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["reproduce", "properties", "--out", &out_arg(dir.path())]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{text}");
    assert!(text.lines().any(|l| l.starts_with("PASS criterion  9")));
    assert!(text.contains("timing ratio naive:shift_invert"));
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("reproduce.json")).unwrap()).unwrap();
    assert_eq!(rep["rows"][0]["pass"], true);
}
