use std::path::Path;
use std::process::{Command, Output};

use d2d_ra::cli::ExperimentConfig;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_d2d-ra"))
        .args(args)
        .output()
        .expect("binary runs")
}

/// A cheap configuration: one load, RBC only, moderate CI.
fn write_config(dir: &Path, extra: &str) -> String {
    let text = format!(
        "mu = 160\nschemes = rbc\ndelta_grid = 0.5,1\ntheta_c_grid_db = -15,-9\n\
         realizations = 8\nci_target = 0.02\nmax_realizations = 400\n{extra}"
    );
    let path = dir.join("exp.cfg");
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn show_config_round_trips() {
    let out = run(&["show-config", "--seed", "17", "--gain-mode", "physical"]);
    assert!(out.status.success());
    let cfg = ExperimentConfig::parse(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(cfg.seed, 17);
    assert_eq!(
        cfg,
        ExperimentConfig {
            seed: 17,
            gain_mode: d2d_ra::sim::GainMode::Physical,
            ..ExperimentConfig::default()
        }
    );
}

#[test]
fn pmf_writes_csv_with_units_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "pmf_deltas = 0.2\npmf_max_n = 5\n");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = run(&[
            "pmf",
            "--config",
            &cfg,
            "--seed",
            "3",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "mu[devices/km2],delta[-],n[CMs],pmf_analytic[-],pmf_empirical[-],ci_halfwidth[-]"
    );
    assert_eq!(lines.count(), 6);
}

#[test]
fn validate_passes_then_fails_when_one_side_is_perturbed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let ok = run(&["validate", "--config", &cfg]);
    assert!(
        ok.status.success(),
        "{}",
        String::from_utf8_lossy(&ok.stdout)
    );
    let report: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["params"]["mu"][0], 160.0);
    assert_eq!(report["results"].as_array().unwrap().len(), 2 + 2);

    let bad_cfg = write_config(dir.path(), "perturb_theta_ra_db = 3\n");
    let bad = run(&["validate", "--config", &bad_cfg]);
    assert_eq!(bad.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&bad.stdout).unwrap();
    assert_eq!(report["pass"], false);
}

#[test]
fn bad_config_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    std::fs::write(&path, "delta = 2\n").unwrap();
    let out = run(&["delay-vs-delta", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta"));
}
