use std::fs;
use std::path::Path;
use std::process::Command;

fn osnls(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_osnls"))
        .args(args)
        .env("OSNLS_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, overrides: serde_json::Value) -> String {
    let mut cfg = serde_json::json!({
        "grid": {"nx": 64, "ny": 64, "lx": 16.0, "ly": 16.0},
        "initial_data": {"family": "gaussian", "amplitude": 0.3, "sigma": 1.5},
        "profile": {"kind": "sine_affine", "lambda0": 1.0, "lambda1": 1.0, "tau": std::f64::consts::TAU},
        "omegas": [8, 16, 32],
        "t_end": 0.5,
        "dt": 0.005,
        "save_stride": 10,
        "resolution_tolerance": null,
        "output_dir": dir.join("out"),
        "inequalities": {"grid_sizes": [64], "mt_box": 4.0, "probe_n": [4, 8]}
    });
    for (k, v) in overrides.as_object().unwrap() {
        cfg[k] = v.clone();
    }
    let path = dir.join("config.json");
    fs::write(&path, cfg.to_string()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn sweep_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), serde_json::json!({}));
    let out = osnls(&["sweep", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/convergence.csv")).unwrap();
    assert!(csv.starts_with("omega,sup_h1_gap,gap_q4_r4,gap_qinf_r2,sup_grad,status\n"));

    let out = osnls(&["plots", "--report", dir.path().join("out").to_str().unwrap()]);
    assert!(out.status.success());
    assert!(dir.path().join("out/plot_gap_q4_r4.gp").exists());
    assert!(dir.path().join("out/plot_gap_qinf_r2.gp").exists());
}

#[test]
fn other_subcommands_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), serde_json::json!({}));
    for (cmd, file) in [
        ("simulate", "diagnostics.csv"),
        ("duhamel-gap", "duhamel_gap.csv"),
        ("check-conservation", "conservation.csv"),
        ("verify-inequalities", "moser_trudinger.csv"),
    ] {
        let out = osnls(&[cmd, "--config", &cfg]);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(dir.path().join("out").join(file).exists(), "{cmd}");
    }
    let alt = dir.path().join("alt");
    let out = osnls(&["simulate", "--config", &cfg, "--out", alt.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(alt.join("trace.json").exists());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), serde_json::json!({"omegas": [8, 16], "bogus": 1}));
    assert_eq!(osnls(&["sweep", "--config", &cfg]).status.code(), Some(2));
    let cfg = write_config(dir.path(), serde_json::json!({"initial_data": {"family": "gaussian", "amplitude": 0.6, "sigma": 1.0}}));
    assert_eq!(osnls(&["sweep", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(osnls(&["sweep"]).status.code(), Some(2));
}

#[test]
fn io_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(osnls(&["sweep", "--config", missing.to_str().unwrap()]).status.code(), Some(4));
    assert_eq!(osnls(&["plots", "--report", missing.to_str().unwrap()]).status.code(), Some(4));
}

#[test]
fn blow_up_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // Focusing data with 4π|u|² ≈ 650 at the peak trips the overflow guard almost at once.
    let cfg = write_config(
        dir.path(),
        serde_json::json!({
            "grid": {"nx": 64, "ny": 64, "lx": 4.0, "ly": 4.0},
            "initial_data": {"family": "gaussian", "amplitude": 7.2, "sigma": 0.3},
            "profile": {"kind": "constant", "c": -1.0},
            "allow_supercritical": true,
            "t_end": 0.05,
            "dt": 0.0001
        }),
    );
    let out = osnls(&["sweep", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
    let out = osnls(&["simulate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn sweep_csv_is_independent_of_thread_count() {
    let read = |threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(dir.path(), serde_json::json!({}));
        let out = Command::new(env!("CARGO_BIN_EXE_osnls"))
            .args(["sweep", "--config", &cfg])
            .env("OSNLS_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        fs::read(dir.path().join("out/convergence.csv")).unwrap()
    };
    assert_eq!(read("1"), read("3"));
}
