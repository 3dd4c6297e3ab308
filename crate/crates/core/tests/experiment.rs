use std::collections::HashMap;
use std::path::Path;

use balancelab_core::experiment::{
    cmd_compare, cmd_diagnose, cmd_omega, cmd_poisson, cmd_solve, cmd_theory, model_file_name, ExperimentConfig,
};
use balancelab_core::solver::{load_model, solve};
use balancelab_core::Error;
use statrs::function::gamma::ln_gamma;

fn config(dir: &Path, betas: &[f64]) -> ExperimentConfig {
    ExperimentConfig {
        betas: betas.to_vec(),
        outputs: dir.to_path_buf(),
        ..Default::default()
    }
}

/// Rows of a CSV as header-keyed maps, skipping the provenance line.
fn read_rows(path: &Path) -> Vec<HashMap<String, String>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    r.records()
        .map(|rec| header.iter().cloned().zip(rec.unwrap().iter().map(String::from)).collect())
        .collect()
}

fn field(row: &HashMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap()
}

#[test]
fn solve_beta_zero_gives_factorials() {
    let dir = tempfile::tempdir().unwrap();
    cmd_solve(&config(dir.path(), &[0.0])).unwrap();
    let m = load_model(&dir.path().join(model_file_name(0.0))).unwrap();
    for i in 0..=200 {
        assert!((m.lambda[i] - ln_gamma(i as f64 + 1.0)).abs() < 1e-6);
    }
    assert!(dir.path().join("SCHEMA.md").exists());
}

#[test]
fn sweep_writes_one_model_per_beta_and_warm_starts_pay_off() {
    let dir = tempfile::tempdir().unwrap();
    let betas = [0.75, 0.0, 0.5, 0.25];
    let report = cmd_solve(&config(dir.path(), &betas)).unwrap();
    assert_eq!(report.files.len(), 5);
    let rows = read_rows(&dir.path().join("solve_summary.csv"));
    let order: Vec<f64> = rows.iter().map(|r| field(r, "beta")).collect();
    assert_eq!(order, vec![0.0, 0.25, 0.5, 0.75]);
    for r in rows.iter().skip(1) {
        let beta = field(r, "beta");
        let cold = solve(beta, 400, 300.0, 1e-10, 500, None).unwrap();
        let warm = field(r, "iterations") as usize;
        assert!(warm <= cold.solve_report.iterations, "beta {beta}: {warm} vs {}", cold.solve_report.iterations);
        assert!(field(r, "max_e1_residual") < 1e-4);
        assert!(dir.path().join(&r["model_file"]).exists());
    }
}

#[test]
fn invalid_beta_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml_str(&format!("betas = [1.2]\noutputs = {:?}", dir.path())).unwrap();
    match cmd_solve(&cfg) {
        Err(Error::Config { field, .. }) => assert_eq!(field, "betas"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn failed_sweep_keeps_finished_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        max_iter: 3,
        ..config(dir.path(), &[0.0, 0.5])
    };
    assert!(matches!(cmd_solve(&cfg), Err(Error::MaxIterExceeded { .. })));
    assert!(dir.path().join(model_file_name(0.0)).exists());
    assert!(!dir.path().join(model_file_name(0.5)).exists());
    assert_eq!(read_rows(&dir.path().join("solve_summary.csv")).len(), 1);
}

#[test]
fn diagnostics_of_the_exponential() {
    let dir = tempfile::tempdir().unwrap();
    cmd_solve(&config(dir.path(), &[0.0])).unwrap();
    let model = dir.path().join(model_file_name(0.0));
    let cfg = ExperimentConfig {
        a_grid: vec![10.0, 50.0, 100.0, 200.0],
        ..config(dir.path(), &[0.0])
    };
    let report = cmd_diagnose(&model, &cfg).unwrap();
    assert_eq!(report.warnings.len(), 1);
    let rows = read_rows(&dir.path().join("diagnostics_model_beta_0.csv"));
    assert_eq!(rows.len(), 4);
    for r in &rows {
        let a = field(r, "a");
        let stirling = (ln_gamma(a + 1.0) + a - a * a.ln()).exp() / a.sqrt();
        assert!((field(r, "nu_classic") - stirling).abs() < 1e-4, "a = {a}");
        assert!(field(r, "lambda_d2") > 0.0);
        assert_eq!(r["status"], if a > 150.0 { "untrusted" } else { "trusted" });
    }
}

#[test]
fn diagnose_rejects_an_empty_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        a_grid: vec![],
        ..config(dir.path(), &[0.0])
    };
    let err = cmd_diagnose(&dir.path().join("none.json"), &cfg).unwrap_err();
    assert!(matches!(err, Error::Config { field, .. } if field == "a_grid"));
}

#[test]
fn omega_of_the_exponential() {
    let dir = tempfile::tempdir().unwrap();
    let report = cmd_omega(&config(dir.path(), &[0.0])).unwrap();
    let rows = read_rows(&dir.path().join("omega.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(field(&rows[0], "beta"), 0.0);
    assert!(field(&rows[0], "omega_hat").abs() < 5e-4);
    assert!((field(&rows[0], "c_beta_hat") - 1.0).abs() < 5e-4);
    assert!(report.lines.iter().any(|l| l.contains("increasing")));
}

#[test]
fn theory_curve_starts_at_the_gaussian_value() {
    let dir = tempfile::tempdir().unwrap();
    cmd_theory(&config(dir.path(), &[0.0])).unwrap();
    let rows = read_rows(&dir.path().join("theory.csv"));
    assert_eq!(field(&rows[0], "m"), 1.0);
    for key in ["p", "q"] {
        assert!((field(&rows[0], key) - 0.159155).abs() < 1e-4);
    }
    assert_eq!(rows[0]["argmax_c"], "");
}

#[test]
fn poisson_needs_trusted_anchors() {
    let dir = tempfile::tempdir().unwrap();
    for grid in [vec![], vec![25.0, 200.0]] {
        let cfg = ExperimentConfig {
            a_grid: grid,
            ..config(dir.path(), &[0.0])
        };
        assert!(matches!(cmd_poisson(&cfg), Err(Error::Config { field, .. }) if field == "a_grid"));
    }
}

#[test]
fn poisson_and_compare_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        a_grid: vec![25.0, 50.0],
        ..config(dir.path(), &[0.0, 0.2])
    };
    cmd_poisson(&cfg).unwrap();
    let rows = read_rows(&dir.path().join("poisson.csv"));
    assert_eq!(rows.len(), 2 * 2 * 4);
    let report = cmd_compare(&cfg).unwrap();
    let rows = read_rows(&dir.path().join("compare.csv"));
    assert_eq!(rows.len(), 150);
    assert!(rows.iter().all(|r| field(r, "k") > 1.0));
    assert_eq!(rows[149]["dlogk"], "");
    assert!(report.lines[0].contains("PASS"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, workers) in [(a.path(), 1), (b.path(), 3)] {
        let cfg = ExperimentConfig {
            workers,
            a_grid: vec![25.0, 50.0],
            ..config(dir, &[0.0, 0.3])
        };
        cmd_solve(&cfg).unwrap();
        cmd_omega(&cfg).unwrap();
        cmd_theory(&cfg).unwrap();
        cmd_poisson(&cfg).unwrap();
        cmd_compare(&cfg).unwrap();
        cmd_diagnose(&dir.join(model_file_name(0.3)), &cfg).unwrap();
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| n.to_string_lossy().ends_with(".csv"))
        .collect();
    names.sort();
    assert_eq!(names.len(), 7);
    for n in names {
        let x = std::fs::read(a.path().join(&n)).unwrap();
        let y = std::fs::read(b.path().join(&n)).unwrap();
        assert_eq!(x, y, "{n:?}");
        assert!(x.starts_with(b"# balancelab "));
    }
}
