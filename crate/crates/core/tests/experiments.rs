use std::f64::consts::PI;

use osnls::experiments::{run_convergence_sweep, ExperimentConfig};

fn config(dir: &std::path::Path, stride: usize) -> ExperimentConfig {
    let text = serde_json::json!({
        "grid": {"nx": 128, "ny": 128, "lx": 16.0, "ly": 16.0},
        "initial_data": {"family": "gaussian", "amplitude": 0.35, "sigma": 1.0},
        "profile": {"kind": "sine_affine", "lambda0": 1.0, "lambda1": 1.0, "tau": 2.0 * PI},
        "omegas": [8, 16, 32],
        "t_end": 1.0,
        "dt": 0.002,
        "save_stride": stride,
        "pairs": [4, 6, "inf"],
        "output_dir": dir
    });
    ExperimentConfig::from_json(&text.to_string()).unwrap()
}

#[test]
fn doubling_save_stride_barely_moves_gaps() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let fine = run_convergence_sweep(&config(a.path(), 5), 1).unwrap();
    let coarse = run_convergence_sweep(&config(b.path(), 10), 1).unwrap();
    for (f, c) in fine.rows.iter().zip(&coarse.rows) {
        let mut pairs = vec![(f.sup_h1_gap, c.sup_h1_gap)];
        pairs.extend(f.pair_gaps.iter().copied().zip(c.pair_gaps.iter().copied()));
        for (x, y) in pairs {
            assert!((x - y).abs() / x < 0.01, "omega {}: {x} vs {y}", f.omega);
        }
    }
}

#[test]
fn checkpoints_hold_the_final_states() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 50);
    let rep = run_convergence_sweep(&cfg, 2).unwrap();
    let (limit, t) = osnls::checkpoint::load_checkpoint(&dir.path().join(&rep.limit_solution_id)).unwrap();
    assert_eq!(t, 1.0);
    let (u32_, _) = osnls::checkpoint::load_checkpoint(&dir.path().join("checkpoints/omega_32.osnl")).unwrap();
    let mut ws = osnls::SpectralWorkspace::new(cfg.grid);
    let end_gap = ws.norm_h1(&u32_.sub(&limit).unwrap());
    assert!(end_gap <= rep.rows[2].sup_h1_gap * (1.0 + 1e-12));
}
