use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sprp(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sprp"));
    cmd.args(args).env_remove("SPRP_THREADS");
    if let Some(t) = threads {
        cmd.env("SPRP_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn regime_three_dimensional_supercritical() {
    let out = sprp(&["--d", "3", "--variance", "1", "--theta", "1", "--rho", "0.3", "regime"], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let rho_c = report["constants"]["rho_c"].as_f64().unwrap();
    assert!((rho_c - 0.16587).abs() < 5e-5, "rho_c = {rho_c}");
    assert_eq!(report["details"]["regime"]["case"]["case"], "super3");
    let nu = report["constants"]["nu"].as_f64().unwrap();
    assert!((nu - (1.0 - rho_c / 0.3)).abs() < 1e-12);
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model": {"theta": 1.0, "density": {"kind": "gaussian", "covariance": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]},
            "rho": {"kind": "fixed", "rho": 0.1}}}"#,
    );
    let sub: Value = serde_json::from_slice(&sprp(&["--config", &cfg, "regime"], None).stdout).unwrap();
    assert_eq!(sub["details"]["regime"]["case"]["case"], "sub_const");
    let sup: Value = serde_json::from_slice(&sprp(&["--config", &cfg, "--rho", "0.3", "regime"], None).stdout).unwrap();
    assert_eq!(sup["details"]["regime"]["case"]["case"], "super3");
}

#[test]
fn sample_is_reproducible_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let base = ["--d", "2", "--variance", "1", "--n", "300", "--rho", "0.8", "--seed", "11", "--replicas", "64"];
    let mut outputs = Vec::new();
    for (name, threads) in [("a.jsonl", None), ("b.jsonl", None), ("c.jsonl", Some("1")), ("d.jsonl", Some("3"))] {
        let out_path = path(name);
        let mut args: Vec<&str> = base.to_vec();
        args.extend(["--out", &out_path, "sample"]);
        let out = sprp(&args, threads);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(std::fs::read(&out_path).unwrap());
    }
    assert!(!outputs[0].is_empty());
    assert!(outputs.iter().all(|o| o == &outputs[0]));
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 64);
    for (i, rec) in lines.iter().enumerate() {
        assert_eq!(rec["replica"].as_u64(), Some(i as u64));
        assert_eq!(rec["seed"].as_u64(), Some(11));
        let total: u64 = rec["ordered"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).sum();
        assert_eq!(total, 300);
    }
}

#[test]
fn missing_density_is_a_config_error() {
    let out = sprp(&["--d", "1", "--n", "10", "--side", "3", "weights"], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model.density"));
}

#[test]
fn rho_and_side_together_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model": {"d": 1, "density": {"kind": "isotropic", "variance": 1.0}, "n": 10, "rho": {"kind": "fixed", "rho": 2.0}, "side": 5.0}}"#,
    );
    let out = sprp(&["--config", &cfg, "weights"], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model.side"));
}

#[test]
fn zero_replicas_and_bad_thread_count_are_config_errors() {
    let out = sprp(&["--d", "1", "--variance", "1", "--n", "5", "--side", "2", "--replicas", "0", "sample"], None);
    assert_eq!(out.status.code(), Some(2));
    let out = sprp(&["--d", "1", "--variance", "1", "--n", "5", "--side", "2", "sample"], Some("many"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn weights_and_partition_csv() {
    let base = ["--d", "1", "--variance", "1", "--n", "6", "--side", "3"];
    let out = sprp(&[&base[..], &["weights"]].concat(), None);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "j,weight");
    assert_eq!(rows.len(), 7);
    let out = sprp(&[&base[..], &["partition"]].concat(), None);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("n,log_h"));
    // H_0 = 1.
    assert_eq!(text.lines().nth(1), Some("0,0.0"));
}

#[test]
fn pgf_at_one_is_one() {
    let out = sprp(&["--d", "1", "--variance", "1", "--n", "12", "--side", "3", "pgf", "--t", "1"], None);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().nth(1), Some("1.0,1.0"));
}

#[test]
fn pmf_sums_to_one_and_report_has_macro_fraction() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json").to_string_lossy().into_owned();
    let out = sprp(
        &["--d", "1", "--variance", "1", "--n", "40", "--side", "10", "--report", &report, "pmf", "--epsilon", "0.25"],
        None,
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let total: f64 = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let f = r["constants"]["macro_fraction"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&f));
}

#[test]
fn limitcheck_and_histogram_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let hist = dir.path().join("h.csv").to_string_lossy().into_owned();
    let out = sprp(&["--theta", "2", "--hist", &hist, "limitcheck", "--law", "x1", "--tau", "0.3", "--points", "10"], None);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let last = text.lines().last().unwrap();
    assert!(last.ends_with(",1.0"), "{last}");
    let h = std::fs::read_to_string(&hist).unwrap();
    assert_eq!(h.lines().next(), Some("bin_left,bin_right,mass"));
    assert_eq!(h.lines().count(), 11);
}

#[test]
fn accept_subset_reports_pass() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("accept.json").to_string_lossy().into_owned();
    let out = sprp(&["--report", &report, "accept", "--only", "11"], None);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("PASS criterion 11"));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    for row in r["checks"].as_array().unwrap() {
        let pass = row["statistic"].as_f64().unwrap() <= row["threshold"].as_f64().unwrap();
        assert_eq!(row["pass"].as_bool(), Some(pass));
    }
}
