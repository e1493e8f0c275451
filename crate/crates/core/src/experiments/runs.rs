use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::duhamel::max_spacing;
use crate::analysis::{duhamel_gap, AdmissiblePair, Criticality, SampledSource};
use crate::checkpoint::save_checkpoint;
use crate::error::{Error, Result};
use crate::experiments::config::ExperimentConfig;
use crate::experiments::initial::{build_initial_data, sample};
use crate::forcing::ThetaProfile;
use crate::integrator::{save_diagnostics_csv, simulate_with, RunStatus, RunTrace, SolverParams};
use crate::spectral::SpectralWorkspace;

pub const DIAGNOSTICS_CSV: &str = "diagnostics.csv";
pub const TRACE_JSON: &str = "trace.json";
pub const FINAL_CHECKPOINT: &str = "final.osnl";
pub const CONSERVATION_CSV: &str = "conservation.csv";
pub const DUHAMEL_CSV: &str = "duhamel_gap.csv";

/// Everything about a single run except the field history.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceSummary {
    pub params: SolverParams,
    pub initial: Criticality,
    pub status: RunStatus,
    pub saved_frames: usize,
    pub max_relative_mass_drift: f64,
    pub max_hamiltonian_drift: f64,
    pub sup_grad: f64,
    pub grad_threshold_exceeded: Option<f64>,
    pub initial_gradient_warning: bool,
    pub negative_average: bool,
}

fn summarize(trace: &RunTrace, initial: Criticality) -> TraceSummary {
    TraceSummary {
        params: trace.params.clone(),
        initial,
        status: trace.status,
        saved_frames: trace.diagnostics.len(),
        max_relative_mass_drift: trace.max_relative_mass_drift(),
        max_hamiltonian_drift: trace.max_hamiltonian_drift(),
        sup_grad: trace.sup_grad(),
        grad_threshold_exceeded: trace.grad_threshold_exceeded,
        initial_gradient_warning: trace.initial_gradient_warning,
        negative_average: trace.negative_average,
    }
}

/// One run at the configured single-run frequency. Writes the diagnostics CSV,
/// a JSON trace summary and the last saved state into `out`.
pub fn run_simulation(config: &ExperimentConfig, out: &Path) -> Result<TraceSummary> {
    config.validate()?;
    let init = build_initial_data(
        &config.initial_data,
        config.grid,
        config.profile.average(),
        config.allow_supercritical,
    )?;
    let params = config.solver_params(config.single_run_omega())?;
    let mut ws = SpectralWorkspace::new(config.grid);
    let mut last = None;
    let trace = simulate_with(&init.field, &params, &config.profile, config.nonlinearity, &mut ws, false, |t, u| {
        last = Some((t, u.clone()));
        Ok(())
    })?;
    fs::create_dir_all(out)?;
    save_diagnostics_csv(&out.join(DIAGNOSTICS_CSV), &trace.diagnostics)?;
    if let Some((t, u)) = last {
        save_checkpoint(&out.join(FINAL_CHECKPOINT), &u, t)?;
    }
    let summary = summarize(&trace, init.criticality);
    fs::write(out.join(TRACE_JSON), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservationRow {
    pub label: String,
    pub omega: f64,
    pub max_rel_mass_drift: f64,
    pub max_hamiltonian_drift: f64,
    pub status: RunStatus,
}

/// Drift table for the averaged equation and every sweep frequency. The
/// Hamiltonian is conserved only by the averaged run; for the others the column
/// measures how far the oscillating flow moves it.
pub fn run_conservation_check(config: &ExperimentConfig, threads: usize) -> Result<Vec<ConservationRow>> {
    config.validate()?;
    let average = config.profile.average();
    let init = build_initial_data(&config.initial_data, config.grid, average, config.allow_supercritical)?;
    let averaged = ThetaProfile::constant(average)?;
    let mut jobs: Vec<(String, f64, &ThetaProfile)> = vec![("averaged".into(), 0.0, &averaged)];
    jobs.extend(config.omegas.iter().map(|&w| (format!("omega_{w}"), w, &config.profile)));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let rows: Vec<Result<ConservationRow>> = pool.install(|| {
        jobs.par_iter()
            .map(|(label, omega, profile)| {
                let params = config.solver_params(*omega)?;
                let mut ws = SpectralWorkspace::new(config.grid);
                let trace =
                    simulate_with(&init.field, &params, profile, config.nonlinearity, &mut ws, false, |_, _| Ok(()))?;
                Ok(ConservationRow {
                    label: label.clone(),
                    omega: *omega,
                    max_rel_mass_drift: trace.max_relative_mass_drift(),
                    max_hamiltonian_drift: trace.max_hamiltonian_drift(),
                    status: trace.status,
                })
            })
            .collect()
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;

    fs::create_dir_all(&config.output_dir)?;
    let mut wr = csv::Writer::from_path(config.output_dir.join(CONSERVATION_CSV))?;
    wr.write_record(["label", "omega", "max_rel_mass_drift", "max_hamiltonian_drift", "status"])?;
    for r in &rows {
        wr.write_record([
            r.label.clone(),
            r.omega.to_string(),
            r.max_rel_mass_drift.to_string(),
            r.max_hamiltonian_drift.to_string(),
            r.status.label().to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DuhamelRow {
    pub omega: f64,
    pub pair: AdmissiblePair,
    pub gap: f64,
}

fn exponent(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        v.to_string()
    }
}

/// Averaging gap of the Duhamel term for a fixed source at each frequency,
/// written as `omega,q,r,gap`.
pub fn run_duhamel_experiment(config: &ExperimentConfig) -> Result<Vec<DuhamelRow>> {
    config.validate()?;
    let d = &config.duhamel;
    let source = sample(d.source.as_ref().unwrap_or(&config.initial_data), config.grid)?;
    let omegas = d.omegas.clone().unwrap_or_else(|| config.omegas.clone());
    let pairs = d
        .pairs
        .clone()
        .unwrap_or_else(|| vec![AdmissiblePair::endpoint(), AdmissiblePair::new(4.0).expect("admissible")]);
    let mut ws = SpectralWorkspace::new(config.grid);
    let mut rows = Vec::new();
    for omega in omegas {
        let src = SampledSource::Steady {
            field: source.clone(),
            spacing: d.spacing_factor * max_spacing(omega),
            t_end: config.t_end,
        };
        let gaps = duhamel_gap(&mut ws, &src, &config.profile, omega, &pairs).map_err(|e| match e {
            Error::SamplingTooCoarse { .. } => Error::Config(e.to_string()),
            e => e,
        })?;
        rows.extend(pairs.iter().zip(gaps).map(|(&pair, gap)| DuhamelRow { omega, pair, gap }));
    }
    fs::create_dir_all(&config.output_dir)?;
    let mut wr = csv::Writer::from_path(config.output_dir.join(DUHAMEL_CSV))?;
    wr.write_record(["omega", "q", "r", "gap"])?;
    for r in &rows {
        wr.write_record([r.omega.to_string(), exponent(r.pair.q()), exponent(r.pair.r()), r.gap.to_string()])?;
    }
    wr.flush()?;
    Ok(rows)
}
