use semiclassic::{parse_config, run, Command};
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::Command as Proc;

fn bin() -> Proc {
    Proc::new(env!("CARGO_BIN_EXE_semiclassic"))
}

fn fixture(dir: &str, name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join(dir).join(name)
}

fn command_of(path: &Path) -> String {
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap_or(Value::Null);
    v["command"].as_str().unwrap_or("classify").to_owned()
}

/// Runs the binary writing to `out`; returns the exit code.
fn invoke(config: &Path, out: &str, extra: &[&str]) -> i32 {
    bin()
        .arg(command_of(config))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

fn fixtures() -> Vec<PathBuf> {
    let mut v: Vec<_> = std::fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    v.sort();
    v
}

#[test]
fn exit_codes_follow_the_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let out = out.to_str().unwrap();
    for (name, code) in [
        ("syntax_error.json", 2),
        ("missing_matrix.json", 2),
        ("unknown_key.json", 2),
        ("not_symplectic.json", 2),
        ("parabolic.json", 3),
        ("mapping_torus_identity.json", 3),
        ("kernel_endpoint.json", 4),
        ("oracle_mismatch.json", 5),
    ] {
        assert_eq!(invoke(&fixture("malformed", name), out, &[]), code, "{name}");
    }
    for f in fixtures() {
        assert_eq!(invoke(&f, out, &[]), 0, "{}", f.display());
    }
}

#[test]
fn io_failures_exit_six() {
    let cfg = fixture("fixtures", "classify_cat.json");
    assert_eq!(invoke(&cfg, "/nonexistent-dir/sub/r.json", &[]), 6);
    let code = bin()
        .args(["classify", "--config", "/nonexistent-dir/cfg.json"])
        .output()
        .unwrap()
        .status
        .code();
    assert_eq!(code, Some(6));
}

#[test]
fn command_must_match_the_config() {
    let cfg = fixture("fixtures", "classify_cat.json");
    let st = bin().arg("eta").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&st.stderr).contains("command"));
}

#[test]
fn domain_errors_are_reported_as_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    assert_eq!(invoke(&fixture("malformed", "mapping_torus_identity.json"), out.to_str().unwrap(), &[]), 3);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["results"], Value::Null);
    assert_eq!(v["diagnostics"][0]["kind"], "NonIsolatedError");
    assert_eq!(v["diagnostics"][0]["level"], "error");
}

#[test]
fn json_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for f in fixtures() {
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        invoke(&f, a.to_str().unwrap(), &[]);
        invoke(&f, b.to_str().unwrap(), &[]);
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{}", f.display());
    }
}

#[test]
fn keys_come_in_fixed_order() {
    let st = bin()
        .args(["classify", "--config"])
        .arg(fixture("fixtures", "classify_cat.json"))
        .args(["--out", "-"])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0));
    let text = String::from_utf8(st.stdout).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
    assert_eq!(keys, ["version", "command", "config_echo", "results", "diagnostics"]);
    assert_eq!(v["results"]["sl2_class"], "hyperbolic");
}

#[test]
fn echo_round_trips_through_the_parser() {
    for f in fixtures() {
        let cfg = parse_config(&std::fs::read_to_string(&f).unwrap()).unwrap();
        let report = run(&cfg);
        let v: Value = serde_json::from_str(&report.to_json()).unwrap();
        let echo = serde_json::to_string(&v["config_echo"]).unwrap();
        assert_eq!(parse_config(&echo).unwrap(), cfg, "{}", f.display());
    }
}

#[test]
fn csv_has_one_row_per_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let code = invoke(&fixture("fixtures", "lefschetz_points.json"), out.to_str().unwrap(), &["--format", "csv"]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("label,weight_re,weight_im"));
}

#[test]
fn determinant_of_half_turn() {
    let cfg = parse_config(&std::fs::read_to_string(fixture("fixtures", "determinant_rotation_pi.json")).unwrap()).unwrap();
    let r = run(&cfg);
    assert_eq!(r.exit_code, 0);
    assert!((r.results["abs_det"].as_f64().unwrap() - 4.0).abs() < 1e-12);
    assert!((r.results["oracle"].as_f64().unwrap() - 4.0).abs() < 1e-3);
}

#[test]
fn remark_path_writes_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("flow.json");
    assert_eq!(invoke(&fixture("fixtures", "spectral_flow_remark.json"), out.to_str().unwrap(), &[]), 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["results"]["flow"], -1);
    let plot = std::fs::read_to_string(dir.path().join("flow.plot.csv")).unwrap();
    let mut lines = plot.lines();
    assert_eq!(lines.next(), Some("tau,mode,index,eigenvalue"));
    // 401 path points, three modes, two eigenvalues each.
    assert_eq!(lines.count(), 401 * 3 * 2);
}

#[test]
fn mapping_torus_report_tables_every_generic_point() {
    let cfg = parse_config(&std::fs::read_to_string(fixture("fixtures", "mapping_torus_order_six.json")).unwrap()).unwrap();
    assert_eq!(cfg.command, Command::MappingTorus);
    let r = run(&cfg);
    assert_eq!(r.exit_code, 0);
    let pts = r.results["points"].as_array().unwrap();
    assert_eq!(pts.len(), r.table.rows.len());
    assert!(!pts.is_empty());
    for p in pts {
        assert!(p["torsion_deviation"].as_f64().unwrap() < 1e-9);
    }
}
