use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qls::field::io::{self, FieldFile};

fn presets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets")
}

fn qls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qls")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

/// File contents without the `#` provenance line.
fn body(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

fn listing(dir: &Path) -> Vec<String> {
    match std::fs::read_dir(dir) {
        Ok(rd) => rd.map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect(),
        Err(_) => Vec::new(),
    }
}

const SMALL_GRID: &str = r#""grid": {"d": 1, "n": 256, "side": 16.0, "time_samples": 9, "components": 1}"#;

#[test]
fn committed_cubic_preset_passes_its_assertions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = presets().join("preset_cubic.json");
    let o = qls(&["solve", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--assert"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let trace = body(&dir.path().join("trace.csv"));
    assert!(trace.starts_with("n,l1Xs,diff_sminus1,contraction_ratio\n1,"));
    assert!(body(&dir.path().join("envelope.csv")).starts_with("j,a_j,b_j\n0,"));
    let FieldFile::SpaceTime(u) = io::read(&dir.path().join("solution.dff")).unwrap() else { panic!("space-time") };
    assert_eq!((u.grid().n, u.grid().time_samples), (512, 17));
}

#[test]
fn every_preset_solves() {
    for name in ["preset_cubic.json", "preset_deriv_quadratic.json", "preset_conformal.json"] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = presets().join(name);
        let o = qls(&["solve", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--assert"]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
    }
}

#[test]
fn malformed_json_reports_its_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", "{\n  \"s\": 2.75,\n  \"grid\": \n}\n");
    let o = qls(&["solve", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    let line = err.lines().find(|l| l.starts_with("ERROR ")).expect("ERROR record");
    assert!(line.starts_with("ERROR 1 cli ") && line.contains("line 4"), "{line}");
}

#[test]
fn unknown_keys_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "typo.json", &format!("{{{SMALL_GRID}, \"max_iter\": 3}}"));
    let o = qls(&["solve", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown field `max_iter`"), "{}", stderr(&o));
}

#[test]
fn unknown_estimate_exits_with_validation_code() {
    let o = qls(&["verify", "--estimate", "bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).lines().any(|l| l.starts_with("ERROR 1 estimate_lab unknown-estimate")), "{}", stderr(&o));
}

#[test]
fn numerical_failure_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(presets().join("preset_cubic.json"))
        .unwrap()
        .replace("\"gauge\": 1e-3", "\"gauge\": 30")
        .replace("\"eps0\": 1e-2", "\"eps0\": 1e6");
    let cfg = write_config(dir.path(), "large.json", &text);
    let out = dir.path().join("out");
    let o = qls(&["solve", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).lines().any(|l| l.starts_with("ERROR 2 ")));
    assert!(listing(&out).is_empty());
}

#[test]
fn oversized_data_is_a_validation_error_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(presets().join("preset_cubic.json")).unwrap().replace("\"gauge\": 1e-3", "\"gauge\": 1");
    let cfg = write_config(dir.path(), "large.json", &text);
    let out = dir.path().join("out");
    let o = qls(&["solve", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).lines().any(|l| l.starts_with("ERROR 1 quasilinear ")), "{}", stderr(&o));
    assert!(listing(&out).is_empty());
}

#[test]
fn failed_assertion_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(presets().join("preset_cubic.json"))
        .unwrap()
        .replace("\"max_iters\": 12", "\"max_iters\": 12, \"checks\": {\"max_iterations\": 1}");
    let cfg = write_config(dir.path(), "strict.json", &text);
    let out = dir.path().join("out");
    let o = qls(&["solve", "--config", &cfg, "--out", out.to_str().unwrap(), "--assert"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).lines().any(|l| l.starts_with("ERROR 3 quasilinear ")));
    let o = qls(&["solve", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn zero_threads_is_rejected() {
    let o = qls(&["dump-profiles", "--threads", "0"]);
    assert_eq!(o.status.code(), Some(1));
}

/// Runs a command twice into separate directories and compares every file.
fn assert_rerun_identical(args: &[&str], files: &[&str]) {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let mut a = args.to_vec();
        a.extend(["--out", d.path().to_str().unwrap()]);
        let o = qls(&a);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
    }
    for f in files {
        let (a, b) = (dirs[0].path().join(f), dirs[1].path().join(f));
        if f.ends_with(".dff") || f.ends_with(".json") {
            assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{f}");
        } else {
            assert_eq!(body(&a), body(&b), "{f}");
            assert!(std::fs::read_to_string(&a).unwrap().starts_with("# qls "));
        }
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        &format!(
            r#"{{{SMALL_GRID},
                "metric": [["1+0.1*abs2(u)"]],
                "background": {{"random": {{"seed": 3, "gauge": 0.5}}}},
                "u0": {{"packet": {{"gauge": 1e-3, "frequency": 2.0}}}},
                "norms": [{{"name": "X"}}, {{"name": "Yupper"}}, {{"name": "Ylower"}}, {{"name": "l1Hs", "s": 2.75}},
                          {{"name": "lpjU", "p": "2", "j": 1, "base": "L2"}}, {{"name": "Xj", "j": 2}}],
                "ensemble": {{"count": 3, "grid": {{"d": 1, "n": 256, "side": 8.0, "time_samples": 8, "components": 1}}}},
                "profiles": {{"bands": 4, "samples": 65}}
            }}"#
        ),
    );
    let c = cfg.as_str();
    assert_rerun_identical(&["norms", "--config", c], &["norms.csv"]);
    assert_rerun_identical(&["envelope", "--config", c, "--assert"], &["envelope.csv"]);
    assert_rerun_identical(&["solve-linear", "--config", c, "--assert"], &["solution.dff", "diagnostics.csv"]);
    assert_rerun_identical(&["dump-profiles", "--config", c, "--assert"], &["profiles.csv"]);
    assert_rerun_identical(
        &["verify", "--config", c, "--estimate", "algebra", "--seed", "5", "--threads", "1"],
        &["report.csv", "summary.json"],
    );
}

#[test]
fn report_contents() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        &format!(
            r#"{{{SMALL_GRID}, "ensemble": {{"count": 4, "grid": {{"d": 1, "n": 256, "side": 8.0, "time_samples": 8, "components": 1}}}}}}"#
        ),
    );
    let report = dir.path().join("lab/report.csv");
    let o = qls(&["verify", "--config", &cfg, "--estimate", "bernstein", "--count", "2", "--out", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = body(&report);
    assert!(rows.starts_with("sample,band,lhs,rhs,ratio\n"));
    let samples: std::collections::BTreeSet<&str> = rows.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(samples.into_iter().collect::<Vec<_>>(), ["0", "1"]);
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(report.with_extension("json")).unwrap()).unwrap();
    for key in ["max", "mean", "slope", "pass"] {
        assert!(summary.get(key).is_some(), "{key}");
    }

    let o = qls(&["norms", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let norms = body(&dir.path().join("norms.csv"));
    let names: Vec<&str> = norms.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(names, ["l1jL2", "X", "Yupper", "Ylower", "l1Hs", "l1Xs", "l1Ys"]);

    let o = qls(&["solve-linear", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let diag = body(&dir.path().join("diagnostics.csv"));
    assert!(diag.starts_with("step,t,l2,energy_residual,morawetz_residual\n"));
    assert_eq!(diag.lines().count(), 1 + 9);
}

#[test]
fn fields_round_trip_through_the_norms_command() {
    let dir = tempfile::tempdir().unwrap();
    let grid = qls::GridSpec::new(1, 256, 16.0, 9, 1).unwrap();
    let u = qls::SpatialField::from_fn(grid, |_, x| qls::C64::from_polar((-(x[0] - 8.0).powi(2)).exp(), 3.0 * x[0]));
    let path = dir.path().join("u.dff");
    io::write_spatial(&path, &u).unwrap();
    let cfg = write_config(dir.path(), "n.json", r#"{"norms": [{"name": "l1Hs", "s": 0.0}]}"#);
    let o = qls(&["norms", "--config", &cfg, "--field", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let row = body(&dir.path().join("norms.csv")).lines().nth(1).unwrap().to_string();
    let v: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
    assert!((v - qls::spaces::l1_hs(&u, 0.0).unwrap()).abs() <= 1e-15 * v, "{row}");
}
