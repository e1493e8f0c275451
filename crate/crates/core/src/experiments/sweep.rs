use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::strichartz::lq_in_time;
use crate::analysis::{AdmissiblePair, Criticality};
use crate::checkpoint::save_checkpoint;
use crate::error::{Error, Result};
use crate::experiments::config::ExperimentConfig;
use crate::experiments::initial::build_initial_data;
use crate::forcing::ThetaProfile;
use crate::grid::ComplexField;
use crate::integrator::{simulate_with, Frame, RunStatus};
use crate::spectral::SpectralWorkspace;

pub const CONVERGENCE_CSV: &str = "convergence.csv";
pub const CONVERGENCE_SUMMARY: &str = "convergence_summary.json";
pub const LIMIT_CHECKPOINT: &str = "checkpoints/limit.osnl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub omega: f64,
    /// `sup_t ‖u_ω − U‖_{H¹}`
    pub sup_h1_gap: f64,
    /// `‖u_ω − U‖_{L^q W^{1,r}}`, one per configured pair.
    pub pair_gaps: Vec<f64>,
    /// `sup_t ‖∇u_ω‖`
    pub sup_grad: f64,
    /// `sup_grad ≥ 1`: the small-gradient assumption fails on this run.
    pub grad_threshold_exceeded: bool,
    pub status: RunStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub pairs: Vec<AdmissiblePair>,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log sup_h1_gap` against `log ω` over completed rows.
    pub fitted_rate: Option<f64>,
    pub limit_solution_id: String,
    pub initial: Criticality,
}

impl ConvergenceReport {
    pub fn all_failed(&self) -> bool {
        self.rows.iter().all(|r| r.status != RunStatus::Completed)
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut h = vec!["omega".to_string(), "sup_h1_gap".to_string()];
        h.extend(self.pairs.iter().map(|p| format!("gap_{}", p.label())));
        h.push("sup_grad".into());
        h.push("status".into());
        h
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(self.csv_header())?;
        for row in &self.rows {
            let mut rec = vec![row.omega.to_string(), row.sup_h1_gap.to_string()];
            rec.extend(row.pair_gaps.iter().map(f64::to_string));
            rec.push(row.sup_grad.to_string());
            rec.push(row.status.label().to_string());
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.write_csv(fs::File::create(dir.join(CONVERGENCE_CSV))?)?;
        fs::write(dir.join(CONVERGENCE_SUMMARY), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Thread cap from `OSNLS_THREADS`, else the available parallelism.
pub fn threads_from_env() -> usize {
    std::env::var("OSNLS_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Ordinary least squares slope of `log y` on `log x`.
pub fn fit_loglog(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn omega_checkpoint(omega: f64) -> String {
    format!("checkpoints/omega_{omega}.osnl")
}

/// Solves the averaged equation once, then each oscillating run, comparing saved
/// frames one to one. Writes `convergence.csv`, a JSON summary and final-state
/// checkpoints under `output_dir`.
pub fn run_convergence_sweep(config: &ExperimentConfig, threads: usize) -> Result<ConvergenceReport> {
    config.validate()?;
    let profile = &config.profile;
    let average = profile.average();
    let init = build_initial_data(&config.initial_data, config.grid, average, config.allow_supercritical)?;
    let kind = config.nonlinearity;

    let limit_profile = ThetaProfile::constant(average)?;
    let limit_params = config.solver_params(0.0)?;
    let mut ws = SpectralWorkspace::new(config.grid);
    let limit = simulate_with(&init.field, &limit_params, &limit_profile, kind, &mut ws, true, |_, _| Ok(()))?;
    if limit.status != RunStatus::Completed {
        return Err(Error::NumericalFailure(format!(
            "limit run ended with status {}",
            limit.status.label()
        )));
    }
    let limit_frames: &[Frame] = &limit.frames;
    let out = &config.output_dir;
    fs::create_dir_all(out.join("checkpoints"))?;
    let last = limit_frames.last().expect("completed run has frames");
    save_checkpoint(&out.join(LIMIT_CHECKPOINT), &last.field, last.time)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let rows: Vec<Result<(ConvergenceRow, Option<Frame>)>> = pool.install(|| {
        config
            .omegas
            .par_iter()
            .map(|&omega| run_row(config, &init.field, limit_frames, omega))
            .collect()
    });

    let mut report_rows = Vec::with_capacity(rows.len());
    for row in rows {
        let (row, final_frame) = row?;
        if let Some(f) = final_frame {
            save_checkpoint(&out.join(omega_checkpoint(row.omega)), &f.field, f.time)?;
        }
        report_rows.push(row);
    }
    let fitted_rate = fit_loglog(
        &report_rows
            .iter()
            .filter(|r| r.status == RunStatus::Completed)
            .map(|r| (r.omega, r.sup_h1_gap))
            .collect::<Vec<_>>(),
    );
    let report = ConvergenceReport {
        pairs: config.pairs.clone(),
        rows: report_rows,
        fitted_rate,
        limit_solution_id: LIMIT_CHECKPOINT.to_string(),
        initial: init.criticality,
    };
    report.save(out)?;
    Ok(report)
}

fn run_row(
    config: &ExperimentConfig,
    u0: &ComplexField,
    limit: &[Frame],
    omega: f64,
) -> Result<(ConvergenceRow, Option<Frame>)> {
    let params = config.solver_params(omega)?;
    let mut ws = SpectralWorkspace::new(config.grid);
    let mut diff_ws = SpectralWorkspace::new(config.grid);
    let pairs = &config.pairs;
    let mut times = Vec::with_capacity(limit.len());
    let mut h1 = Vec::with_capacity(limit.len());
    let mut per_pair: Vec<Vec<f64>> = vec![Vec::with_capacity(limit.len()); pairs.len()];
    let mut final_frame = None;
    let trace = simulate_with(u0, &params, &config.profile, config.nonlinearity, &mut ws, false, |t, u| {
        let reference = limit
            .get(times.len())
            .filter(|f| f.time == t)
            .ok_or_else(|| Error::NumericalFailure(format!("no limit frame at t = {t}")))?;
        let d = u.sub(&reference.field)?;
        let h1_gap = diff_ws.norm_h1(&d);
        h1.push(h1_gap);
        for (acc, p) in per_pair.iter_mut().zip(pairs) {
            acc.push(if p.r() == 2.0 { h1_gap } else { diff_ws.norm_w1r(&d, p.r()) });
        }
        times.push(t);
        final_frame = Some(Frame { time: t, field: u.clone() });
        Ok(())
    })?;
    let sup_grad = trace.sup_grad();
    let row = if trace.status == RunStatus::Completed {
        ConvergenceRow {
            omega,
            sup_h1_gap: h1.iter().copied().fold(0.0, f64::max),
            pair_gaps: pairs
                .iter()
                .zip(&per_pair)
                .map(|(p, v)| lq_in_time(&times, v, p.q()))
                .collect::<Result<_>>()?,
            sup_grad,
            grad_threshold_exceeded: sup_grad >= 1.0,
            status: trace.status,
        }
    } else {
        ConvergenceRow {
            omega,
            sup_h1_gap: f64::NAN,
            pair_gaps: vec![f64::NAN; pairs.len()],
            sup_grad,
            grad_threshold_exceeded: sup_grad >= 1.0,
            status: trace.status,
        }
    };
    Ok((row, final_frame))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::ExperimentConfig;

    fn config(dir: &Path, profile: &str) -> ExperimentConfig {
        let text = format!(
            r#"{{
            "grid": {{"nx": 128, "ny": 128, "lx": 16.0, "ly": 16.0}},
            "initial_data": {{"family": "gaussian", "amplitude": 0.35, "sigma": 1.0}},
            "profile": {profile},
            "omegas": [8, 16, 32],
            "t_end": 1.0,
            "dt": 0.004,
            "save_stride": 25,
            "pairs": [4, "inf"],
            "output_dir": {dir:?}
        }}"#
        );
        ExperimentConfig::from_json(&text).unwrap()
    }

    const SINE: &str = r#"{"kind": "sine_affine", "lambda0": 1.0, "lambda1": 1.0, "tau": 6.283185307179586}"#;

    #[test]
    fn fit_recovers_power_law() {
        let pts: Vec<(f64, f64)> = [8.0f64, 16.0, 32.0].iter().map(|&w| (w, 3.0 * w.powf(-1.5))).collect();
        assert!((fit_loglog(&pts).unwrap() + 1.5).abs() < 1e-12);
        assert_eq!(fit_loglog(&pts[..1]), None);
    }

    #[test]
    fn all_failed_needs_every_row() {
        let row = |status| ConvergenceRow {
            omega: 8.0,
            sup_h1_gap: f64::NAN,
            pair_gaps: vec![],
            sup_grad: 0.5,
            grad_threshold_exceeded: false,
            status,
        };
        let mut rep = ConvergenceReport {
            pairs: vec![],
            rows: vec![row(RunStatus::BlownUp { time: 0.1 }), row(RunStatus::Underresolved { time: 0.2 })],
            fitted_rate: None,
            limit_solution_id: LIMIT_CHECKPOINT.into(),
            initial: Criticality { class: crate::analysis::CriticalityClass::Subcritical, hamiltonian: 0.1 },
        };
        assert!(rep.all_failed());
        rep.rows.push(row(RunStatus::Completed));
        assert!(!rep.all_failed());
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("8,NaN,0.5,blown_up"));
    }

    #[test]
    fn constant_profile_has_zero_gaps() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), r#"{"kind": "constant", "c": 1.0}"#);
        let rep = run_convergence_sweep(&cfg, 1).unwrap();
        for r in &rep.rows {
            assert_eq!(r.status, RunStatus::Completed);
            assert!(r.sup_h1_gap <= 1e-10, "{r:?}");
            assert!(r.pair_gaps.iter().all(|g| *g <= 1e-10));
        }
    }

    #[test]
    fn sweep_writes_reports_and_gaps_shrink() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), SINE);
        let rep = run_convergence_sweep(&cfg, 2).unwrap();
        let gaps: Vec<f64> = rep.rows.iter().map(|r| r.sup_h1_gap).collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
        assert!(rep.rows.iter().all(|r| r.sup_grad < 1.0 && !r.grad_threshold_exceeded));
        assert!(rep.fitted_rate.unwrap() < 0.0);
        let csv = fs::read_to_string(dir.path().join(CONVERGENCE_CSV)).unwrap();
        assert_eq!(csv.lines().next().unwrap(), "omega,sup_h1_gap,gap_q4_r4,gap_qinf_r2,sup_grad,status");
        assert_eq!(csv.lines().count(), 4);
        assert!(dir.path().join(LIMIT_CHECKPOINT).exists());
        assert!(dir.path().join("checkpoints/omega_32.osnl").exists());
        let summary: ConvergenceReport =
            serde_json::from_str(&fs::read_to_string(dir.path().join(CONVERGENCE_SUMMARY)).unwrap()).unwrap();
        assert_eq!(summary.rows.len(), 3);
    }

    #[test]
    fn supercritical_data_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(dir.path(), SINE);
        cfg.initial_data = crate::experiments::config::InitialData::Gaussian {
            amplitude: 0.6,
            sigma: 1.0,
            center: [0.0, 0.0],
        };
        assert!(matches!(
            run_convergence_sweep(&cfg, 1),
            Err(Error::SupercriticalInitialData { .. })
        ));
    }
}
