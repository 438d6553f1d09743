//! End-to-end tests of the command-line interface.

use std::path::Path;
use std::process::{Command, Output};

fn polyvem(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyvem"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn make_mesh_is_deterministic_and_checkable() {
    let dir = tempfile::tempdir().unwrap();
    let out = polyvem(
        &["make-mesh", "--kind", "distorted_quads", "--size", "3", "--seed", "7", "--out", "a.json"],
        dir.path(),
    );
    assert_ok(&out);
    let out = polyvem(
        &["make-mesh", "--kind", "distorted_quads", "--size", "3", "--seed", "7", "--out", "b.json"],
        dir.path(),
    );
    assert_ok(&out);
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b, "same seed must give byte-identical files");

    let out = polyvem(&["check-mesh", "--mesh", "a.json"], dir.path());
    assert_ok(&out);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["all_star_shaped"], serde_json::json!(true));
    assert_eq!(report["cells"], serde_json::json!(9));
}

#[test]
fn project_echoes_constant_dofs() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&polyvem(
        &["make-mesh", "--kind", "square_grid", "--size", "1", "--out", "m.json"],
        dir.path(),
    ));
    // m = 1, k = 1 on the unit square: 4 vertex-value dofs; the all-ones
    // vector is the constant polynomial 1
    std::fs::write(dir.path().join("dofs.json"), "[1.0, 1.0, 1.0, 1.0]").unwrap();
    let out = polyvem(
        &["project", "--mesh", "m.json", "-m", "1", "-k", "1", "--dofs", "dofs.json"],
        dir.path(),
    );
    assert_ok(&out);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let pi = doc["pi_of_dofs"].as_array().unwrap();
    assert_eq!(pi.len(), 3);
    assert!((pi[0].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(pi[1].as_f64().unwrap().abs() < 1e-12);
    assert!(pi[2].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn solve_reports_errors_and_respects_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        "kind = \"square_grid\"\nsize = 4\nm = 1\nk = 1\ncase = \"bump\"\n",
    )
    .unwrap();
    let out = polyvem(
        &["solve", "--config", "run.toml", "--out", "report.json"],
        dir.path(),
    );
    assert_ok(&out);
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert!(doc["e_L2"].as_f64().unwrap() > 0.0);
    assert!(doc["e_Hm"].as_f64().unwrap() > 0.0);
    assert_eq!(doc["n_dofs"], serde_json::json!(25));
    assert_eq!(doc["solution"].as_array().unwrap().len(), 25);
}

#[test]
fn interpolation_only_case_is_exact_for_polynomials() {
    let dir = tempfile::tempdir().unwrap();
    let out = polyvem(
        &[
            "solve", "--kind", "square_grid", "--size", "2", "-m", "1", "-k", "2", "--case",
            "poly:2",
        ],
        dir.path(),
    );
    assert_ok(&out);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["interpolation_only"], serde_json::json!(true));
    assert!(doc["e_L2"].as_f64().unwrap() < 1e-10);
}

#[test]
fn convergence_prints_rate_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = polyvem(
        &[
            "convergence", "--kind", "square_grid", "--sizes", "2,4", "-m", "1", "-k", "1",
            "--case", "trig",
        ],
        dir.path(),
    );
    assert_ok(&out);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "h,N_h,e_L2,rate_L2,e_Hm,rate_Hm,osc");
    assert_eq!(lines.len(), 3);
    // second level carries rates
    assert!(!lines[2].contains(",,"));
}

#[test]
fn thread_flag_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "convergence", "--kind", "square_grid", "--sizes", "2,4", "-m", "1", "-k", "2", "--case",
        "bump",
    ];
    let mut one = args.to_vec();
    one.extend(["--threads", "1"]);
    let mut four = args.to_vec();
    four.extend(["--threads", "4"]);
    let a = polyvem(&one, dir.path());
    let b = polyvem(&four, dir.path());
    assert_ok(&a);
    assert_ok(&b);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn errors_exit_nonzero_with_single_line_reason() {
    let dir = tempfile::tempdir().unwrap();
    let out = polyvem(
        &["solve", "--kind", "square_grid", "--size", "2", "-m", "1", "-k", "1", "--case", "gauss"],
        dir.path(),
    );
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error:"), "stderr was {err:?}");

    let out = polyvem(&["check-mesh", "--mesh", "missing.json"], dir.path());
    assert!(!out.status.success());
}
