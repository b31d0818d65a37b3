use assert_cmd::Command;
use serde_json::Value;

fn skewrg() -> Command {
    Command::cargo_bin("skewrg").unwrap()
}

fn json_out(args: &[&str]) -> Value {
    let out = skewrg().args(args).assert().success().get_output().stdout.clone();
    serde_json::from_slice(&out).unwrap()
}

#[test]
fn golden_suite_exits_zero() {
    let v = json_out(&["verify", "--suite", "golden"]);
    assert_eq!(v[0]["pass"], Value::Bool(true));
}

#[test]
fn rotation_of_am_at_zero_energy() {
    let v = json_out(&["rotation", "--lambda", "3", "--energy", "0", "--iters", "46368"]);
    let r = v["value"].as_f64().unwrap();
    assert!((r - 0.25).abs() < 1e-3, "{r}");
    assert_eq!(v["N"], 46368);
    let lift = json_out(&["rotation", "--lambda", "3", "--energy", "0", "--iters", "46368", "--method", "lift"]);
    assert!((lift["value"].as_f64().unwrap() - r).abs() < 1.0 / 46368.0);
}

#[test]
fn lyapunov_record_shape() {
    let v = json_out(&["lyapunov", "--lambda", "3", "--energy", "0", "--iters", "10946", "--samples", "3"]);
    assert!((v["value"].as_f64().unwrap() - 3f64.ln()).abs() < 0.02);
    assert!(v["convergence_gap"].as_f64().unwrap() >= 0.0);
    assert_eq!(v["params"]["samples"], 3);
}

#[test]
fn curve_csv_on_the_symmetric_line() {
    let out = skewrg()
        .args(["curve", "find", "--rho", "1/4", "--delta-grid", "0.1:0.3:0.1"])
        .assert()
        .success()
        .get_output()
        .stdout
        .clone();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("delta,epsilon,residual,plateau_width"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert!(r[1].abs() < 1e-6, "{r:?}");
    }
}

#[test]
fn usage_errors_exit_two() {
    skewrg().arg("bogus").assert().code(2);
    skewrg().args(["rotation", "--lambda", "3", "--energy", "0", "--nope"]).assert().code(2);
    skewrg().args(["curve", "find", "--rho", "1/4"]).assert().code(2);
}

#[test]
fn computation_errors_exit_one() {
    skewrg().args(["zeros", "run", "--rho", "not-a-number"]).assert().code(1);
    skewrg().args(["verify", "--suite", "nonexistent"]).assert().code(1);
    skewrg().args(["curve", "find", "--rho", "1/4", "--delta-grid", "0.7"]).assert().code(1);
}

#[test]
fn zeros_run_quarter() {
    let v = json_out(&["zeros", "run", "--rho", "1/4", "--steps", "4"]);
    let steps = v.as_array().unwrap();
    assert_eq!(steps.len(), 5);
    for s in steps {
        assert!(s["A"].as_array().unwrap().len() <= 1);
        assert!(s["B"].as_array().unwrap().len() <= 1);
    }
    // period two: the windowed state repeats
    assert_eq!(steps[2]["A"], steps[4]["A"]);
    assert_eq!(steps[2]["A"][0]["a"], "1/4");
}

#[test]
fn wide_window_gaps_are_golden() {
    let v = json_out(&["zeros", "run", "--rho", "1/4", "--steps", "2", "--window", "9"]);
    for g in v[2]["gaps_a"].as_array().unwrap() {
        let s = (g["a"].as_str().unwrap(), g["b"].as_str().unwrap());
        assert!(s == ("1", "0") || s == ("1", "1"), "{s:?}");
    }
}

#[test]
fn rg_trajectory_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "truncation_degree = 48\noutput_format = csv\n").unwrap();
    let out = dir.path().join("traj.csv");
    skewrg()
        .args(["rg", "iterate", "--delta", "0.2", "--epsilon", "0", "--n", "2", "--steps", "2"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .assert()
        .success();
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("k,pair_norm,"));
    assert_eq!(text.lines().count(), 4);

    std::fs::write(&cfg, "r_b = 0.1\n").unwrap();
    skewrg().args(["rg", "iterate", "--delta", "0.2", "--epsilon", "0"]).arg("--config").arg(&cfg).assert().code(1);
}

#[test]
fn rg_rejects_unknown_conjugation() {
    skewrg().args(["rg", "iterate", "--delta", "0.2", "--epsilon", "0", "--L", "xyz"]).assert().code(1);
}

#[test]
fn analytic_norm_and_compose() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.json");
    std::fs::write(&f, r#"{"radius": 0.5, "coeffs": [1.0, 2.0, 4.0]}"#).unwrap();
    let v = json_out(&["analytic", "norm", "--input", f.to_str().unwrap()]);
    // 1 + 2·0.5 + 4·0.25
    assert!((v["norm"].as_f64().unwrap() - 3.0).abs() < 1e-15);
    let c = json_out(&["analytic", "compose", "--input", f.to_str().unwrap(), "--scale", "1", "--shift", "0.1", "--radius", "0.4"]);
    let coeffs: Vec<f64> = c["coeffs"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    // f(x + 0.1) = 1.24 + 2.8x + 4x²
    assert!((coeffs[0] - 1.24).abs() < 1e-14 && (coeffs[1] - 2.8).abs() < 1e-14 && (coeffs[2] - 4.0).abs() < 1e-14);
    skewrg()
        .args(["analytic", "compose", "--input", f.to_str().unwrap(), "--scale", "1", "--shift", "0.3", "--radius", "0.4"])
        .assert()
        .code(1);
}

#[test]
fn limit_functions_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("fn.json");
    skewrg().args(["limitfn", "build", "--rho", "1/4", "--blocks", "2"]).arg("--out").arg(&f).assert().success();
    let text = std::fs::read_to_string(&f).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["n"], 2);
    let again = serde_json::to_string_pretty(&v).unwrap();
    let v2: Value = serde_json::from_str(&again).unwrap();
    assert_eq!(v, v2);
    let rep = json_out(&["limitfn", "verify", "--kmax", "4", "--fn", f.to_str().unwrap()]);
    let rows = rep["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rep["decreasing"], Value::Bool(true));
}

#[test]
fn deterministic_output() {
    let a = json_out(&["rotation", "--lambda", "2.5", "--energy", "0.3", "--iters", "4181"]);
    let b = json_out(&["rotation", "--lambda", "2.5", "--energy", "0.3", "--iters", "4181"]);
    assert_eq!(a, b);
}
