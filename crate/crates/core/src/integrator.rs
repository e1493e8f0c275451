//! Strang split-step evolution of `i u_t + Δu = θ(ωt) g(|u|²) u`.
//!
//! The nonlinear flow `u_t = −iθ(ωt) g(|u|²) u` leaves `|u|` unchanged, so it is
//! solved exactly as a phase rotation by `Θ·g(|u|²)` with `Θ = ∫θ(ωs)ds`. The
//! linear flow is the Fourier multiplier `exp(−i|k|²t)`. Steps are composed
//! nonlinear–linear–nonlinear.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forcing::ThetaProfile;
use crate::grid::ComplexField;
use crate::nonlinearity::{NonlinearityKind, ALPHA0, OVERFLOW_LIMIT};
use crate::spectral::{FieldNorms, SpectralWorkspace};
use crate::Complex64;

/// Upper bound on `dt·|ω|`.
pub const MAX_OSCILLATION_PER_STEP: f64 = 0.5;

pub const DEFAULT_RESOLUTION_TOLERANCE: f64 = 1e-10;

const PHASE_CHUNK: usize = 4096;

fn default_grad_warn() -> f64 {
    1.0
}

fn default_resolution_tolerance() -> Option<f64> {
    Some(DEFAULT_RESOLUTION_TOLERANCE)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverParams {
    pub dt: f64,
    pub t_end: f64,
    /// A frame is kept every `save_stride` steps, plus the final one.
    pub save_stride: usize,
    #[serde(default)]
    pub omega: f64,
    #[serde(default = "default_grad_warn")]
    pub grad_warn_threshold: f64,
    /// Largest tolerated spectral energy fraction in the top third of the modes,
    /// checked at saved frames. `None` disables the check.
    #[serde(default = "default_resolution_tolerance")]
    pub resolution_tolerance: Option<f64>,
    /// Coefficient of the potential term in the monitored Hamiltonian.
    /// Defaults to the profile average.
    #[serde(default)]
    pub hamiltonian_coefficient: Option<f64>,
}

impl SolverParams {
    pub fn new(dt: f64, t_end: f64, save_stride: usize, omega: f64) -> Result<Self> {
        let p = SolverParams {
            dt,
            t_end,
            save_stride,
            omega,
            grad_warn_threshold: default_grad_warn(),
            resolution_tolerance: default_resolution_tolerance(),
            hamiltonian_coefficient: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end = {} must be positive", self.t_end));
        }
        if self.dt > self.t_end * (1.0 + 1e-12) {
            return bad(format!("dt = {} exceeds t_end = {}", self.dt, self.t_end));
        }
        if self.save_stride == 0 {
            return bad("save_stride must be at least 1".into());
        }
        if !self.omega.is_finite() {
            return bad("omega must be finite".into());
        }
        if self.dt * self.omega.abs() > MAX_OSCILLATION_PER_STEP * (1.0 + 1e-12) {
            return bad(format!(
                "dt·|omega| = {} exceeds {MAX_OSCILLATION_PER_STEP}",
                self.dt * self.omega.abs()
            ));
        }
        if !(self.grad_warn_threshold.is_finite() && self.grad_warn_threshold > 0.0) {
            return bad("grad_warn_threshold must be positive".into());
        }
        if let Some(tol) = self.resolution_tolerance {
            if !(tol.is_finite() && tol > 0.0) {
                return bad("resolution_tolerance must be positive".into());
            }
        }
        Ok(())
    }

    /// Number of steps and the uniform step actually taken: `t_end` is split
    /// into `ceil(t_end/dt)` equal steps, so the step never exceeds `dt`.
    pub fn steps(&self) -> (usize, f64) {
        let n = ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize;
        (n, self.t_end / n as f64)
    }
}

/// Rotates `u ← u·exp(−iΘ·g(|u|²))` in place.
///
/// The guard is checked at every point before rotating it; on error the field is
/// partially updated and should be discarded.
pub fn apply_nonlinear_phase(
    field: &mut ComplexField,
    theta_integral: f64,
    kind: NonlinearityKind,
) -> Result<()> {
    if theta_integral == 0.0 {
        return Ok(());
    }
    let (worst, finite) = field
        .values_mut()
        .par_chunks_mut(PHASE_CHUNK)
        .map(|chunk| {
            let mut worst = 0.0f64;
            let mut finite = true;
            for u in chunk.iter_mut() {
                let s = u.norm_sqr();
                if !s.is_finite() {
                    finite = false;
                    continue;
                }
                if let NonlinearityKind::ExponentialCritical = kind {
                    let x = ALPHA0 * s;
                    worst = worst.max(x);
                    if x > OVERFLOW_LIMIT {
                        continue;
                    }
                }
                *u *= Complex64::from_polar(1.0, -theta_integral * kind.growth(s));
            }
            (worst, finite)
        })
        .reduce(|| (0.0, true), |a, b| (a.0.max(b.0), a.1 && b.1));
    if !finite {
        return Err(Error::NonFinite);
    }
    if worst > OVERFLOW_LIMIT {
        return Err(Error::Overflow {
            exponent: worst,
            limit: OVERFLOW_LIMIT,
        });
    }
    Ok(())
}

/// Exact flow of `u_t = −iθ(ωt) g(|u|²) u` from `t0` to `t0 + dt`.
pub fn nonlinear_substep(
    field: &ComplexField,
    t0: f64,
    dt: f64,
    profile: &ThetaProfile,
    omega: f64,
    kind: NonlinearityKind,
) -> Result<ComplexField> {
    let mut out = field.clone();
    apply_nonlinear_phase(&mut out, profile.time_integral(omega, t0, t0 + dt), kind)?;
    Ok(out)
}

/// One Strang step in place. A negative `dt` steps backwards in time.
pub fn strang_step_in_place(
    field: &mut ComplexField,
    t0: f64,
    dt: f64,
    profile: &ThetaProfile,
    omega: f64,
    kind: NonlinearityKind,
    ws: &mut SpectralWorkspace,
) -> Result<()> {
    ws.check(field)?;
    let tm = t0 + 0.5 * dt;
    apply_nonlinear_phase(field, profile.time_integral(omega, t0, tm), kind)?;
    ws.free_propagate(field, dt);
    apply_nonlinear_phase(field, profile.time_integral(omega, tm, t0 + dt), kind)
}

pub fn strang_step(
    field: &ComplexField,
    t0: f64,
    dt: f64,
    profile: &ThetaProfile,
    omega: f64,
    kind: NonlinearityKind,
    ws: &mut SpectralWorkspace,
) -> Result<ComplexField> {
    let mut out = field.clone();
    strang_step_in_place(&mut out, t0, dt, profile, omega, kind, ws)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub time: f64,
    pub mass: f64,
    pub hamiltonian: f64,
    pub grad_l2: f64,
    pub linf: f64,
    pub w14: f64,
    pub holder_half: f64,
}

/// Mass, Hamiltonian `‖∇u‖² + coefficient·∫G(|u|²)` and the monitored norms.
pub fn compute_diagnostics(
    ws: &mut SpectralWorkspace,
    field: &ComplexField,
    time: f64,
    coefficient: f64,
    kind: NonlinearityKind,
) -> Result<Diagnostics> {
    ws.check(field)?;
    let norms = ws.field_norms(field);
    diagnostics_from_norms(&norms, field, time, coefficient, kind)
}

fn diagnostics_from_norms(
    norms: &FieldNorms,
    field: &ComplexField,
    time: f64,
    coefficient: f64,
    kind: NonlinearityKind,
) -> Result<Diagnostics> {
    let potential = kind.potential_energy(field, coefficient)?;
    Ok(Diagnostics {
        time,
        mass: norms.mass,
        hamiltonian: norms.grad_sq + potential,
        grad_l2: norms.grad_sq.sqrt(),
        linf: field.norm_linf(),
        w14: norms.w14,
        holder_half: field.holder_half_norm(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// Overflow guard or non-finite values at this time.
    BlownUp { time: f64 },
    /// High-band energy exceeded the resolution tolerance at this saved frame.
    Underresolved { time: f64 },
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::BlownUp { .. } => "blown_up",
            RunStatus::Underresolved { .. } => "underresolved",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub time: f64,
    pub field: ComplexField,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub params: SolverParams,
    /// Empty when the run was made with `keep_frames = false`.
    pub frames: Vec<Frame>,
    /// One entry per saved frame.
    pub diagnostics: Vec<Diagnostics>,
    pub status: RunStatus,
    /// First saved time with `‖∇u‖ ≥ grad_warn_threshold`.
    pub grad_threshold_exceeded: Option<f64>,
    /// `‖∇u0‖ ≥ 1`: the run proceeds, outside the small-data regime.
    pub initial_gradient_warning: bool,
    /// The profile has negative average.
    pub negative_average: bool,
}

impl RunTrace {
    pub fn final_diagnostics(&self) -> &Diagnostics {
        self.diagnostics.last().expect("a trace always holds the initial frame")
    }

    pub fn max_relative_mass_drift(&self) -> f64 {
        let m0 = self.diagnostics[0].mass;
        self.diagnostics
            .iter()
            .map(|d| (d.mass - m0).abs() / m0.max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }

    pub fn max_hamiltonian_drift(&self) -> f64 {
        let h0 = self.diagnostics[0].hamiltonian;
        self.diagnostics
            .iter()
            .map(|d| (d.hamiltonian - h0).abs())
            .fold(0.0, f64::max)
    }

    pub fn sup_grad(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.grad_l2).fold(0.0, f64::max)
    }
}

/// Runs to `params.t_end`, keeping every saved frame.
pub fn simulate(
    u0: &ComplexField,
    params: &SolverParams,
    profile: &ThetaProfile,
    kind: NonlinearityKind,
) -> Result<RunTrace> {
    let mut ws = SpectralWorkspace::new(*u0.grid());
    simulate_with(u0, params, profile, kind, &mut ws, true, |_, _| Ok(()))
}

/// General driver. `observer` sees every saved `(time, field)` in order, starting
/// with the initial data; an observer error aborts the run.
///
/// Between two unsaved steps the trailing half phase of one step and the leading
/// half phase of the next are applied as one rotation.
pub fn simulate_with<F>(
    u0: &ComplexField,
    params: &SolverParams,
    profile: &ThetaProfile,
    kind: NonlinearityKind,
    ws: &mut SpectralWorkspace,
    keep_frames: bool,
    mut observer: F,
) -> Result<RunTrace>
where
    F: FnMut(f64, &ComplexField) -> Result<()>,
{
    params.validate()?;
    kind.validate()?;
    ws.check(u0)?;
    kind.check_overflow(u0)?;
    let coefficient = params.hamiltonian_coefficient.unwrap_or_else(|| profile.average());
    let omega = params.omega;
    let (n, h) = params.steps();
    let time = |k: usize| if k == n { params.t_end } else { k as f64 * h };
    let mid = |k: usize| (k as f64 + 0.5) * h;

    let mut trace = RunTrace {
        params: params.clone(),
        frames: Vec::new(),
        diagnostics: Vec::new(),
        status: RunStatus::Completed,
        grad_threshold_exceeded: None,
        initial_gradient_warning: false,
        negative_average: !profile.has_nonnegative_average(),
    };

    let mut record = |trace: &mut RunTrace, ws: &mut SpectralWorkspace, t: f64, u: &ComplexField| -> Result<bool> {
        let norms = ws.field_norms(u);
        let d = diagnostics_from_norms(&norms, u, t, coefficient, kind)?;
        if d.grad_l2 >= params.grad_warn_threshold && trace.grad_threshold_exceeded.is_none() {
            trace.grad_threshold_exceeded = Some(t);
        }
        trace.diagnostics.push(d);
        if keep_frames {
            trace.frames.push(Frame {
                time: t,
                field: u.clone(),
            });
        }
        observer(t, u)?;
        if let Some(tol) = params.resolution_tolerance {
            if norms.high_band_fraction > tol {
                trace.status = RunStatus::Underresolved { time: t };
                return Ok(false);
            }
        }
        Ok(true)
    };

    if !record(&mut trace, ws, 0.0, u0)? {
        return Ok(trace);
    }
    trace.initial_gradient_warning = trace.diagnostics[0].grad_l2 >= 1.0;

    let mut u = u0.clone();
    let mut pending_half = true;
    for k in 0..n {
        let step = (|| -> Result<bool> {
            if pending_half {
                apply_nonlinear_phase(&mut u, profile.time_integral(omega, time(k), mid(k)), kind)?;
            }
            ws.free_propagate(&mut u, h);
            let save = (k + 1) % params.save_stride == 0 || k + 1 == n;
            if save {
                apply_nonlinear_phase(&mut u, profile.time_integral(omega, mid(k), time(k + 1)), kind)?;
            } else {
                apply_nonlinear_phase(&mut u, profile.time_integral(omega, mid(k), mid(k + 1)), kind)?;
            }
            Ok(save)
        })();
        match step {
            Ok(save) => {
                pending_half = save;
                if save && !record(&mut trace, ws, time(k + 1), &u)? {
                    return Ok(trace);
                }
            }
            Err(Error::Overflow { .. } | Error::NonFinite) => {
                trace.status = RunStatus::BlownUp { time: time(k + 1) };
                return Ok(trace);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(trace)
}

pub fn write_diagnostics_csv<W: Write>(w: W, diagnostics: &[Diagnostics]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for d in diagnostics {
        wr.serialize(d)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn save_diagnostics_csv(path: &Path, diagnostics: &[Diagnostics]) -> Result<()> {
    write_diagnostics_csv(std::fs::File::create(path)?, diagnostics)
}
