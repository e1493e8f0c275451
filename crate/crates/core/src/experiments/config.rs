use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::AdmissiblePair;
use crate::error::{Error, Result};
use crate::forcing::ThetaProfile;
use crate::grid::GridSpec;
use crate::integrator::{SolverParams, DEFAULT_RESOLUTION_TOLERANCE, MAX_OSCILLATION_PER_STEP};
use crate::nonlinearity::NonlinearityKind;

/// Initial data families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Zero,
    Gaussian {
        amplitude: f64,
        sigma: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    /// `A·exp(1 − 1/(1 − |x−c|²/R²))` inside radius `R`, so the peak value is `A`.
    Bump {
        amplitude: f64,
        radius: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    /// Moser function of index `n`, multiplied by `scale`.
    Moser {
        n: usize,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `A·exp(i(k_x x + k_y y))` with `k = 2π·m/L`.
    SingleMode { amplitude: f64, mx: i64, my: i64 },
}

fn one() -> f64 {
    1.0
}

fn default_pairs() -> Vec<AdmissiblePair> {
    vec![AdmissiblePair::new(4.0).expect("q = 4 is admissible"), AdmissiblePair::endpoint()]
}

fn default_threshold() -> f64 {
    1.0
}

fn default_resolution_tolerance() -> Option<f64> {
    Some(DEFAULT_RESOLUTION_TOLERANCE)
}

fn default_stride() -> usize {
    20
}

/// The full experiment description. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSpec,
    pub initial_data: InitialData,
    pub profile: ThetaProfile,
    #[serde(default)]
    pub nonlinearity: NonlinearityKind,
    pub omegas: Vec<f64>,
    /// Frequency for single runs; defaults to the largest sweep frequency.
    #[serde(default)]
    pub omega: Option<f64>,
    pub t_end: f64,
    pub dt: f64,
    #[serde(default = "default_stride")]
    pub save_stride: usize,
    #[serde(default = "default_pairs")]
    pub pairs: Vec<AdmissiblePair>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub allow_supercritical: bool,
    #[serde(default = "default_threshold")]
    pub grad_warn_threshold: f64,
    #[serde(default = "default_resolution_tolerance")]
    pub resolution_tolerance: Option<f64>,
    #[serde(default)]
    pub inequalities: InequalityConfig,
    #[serde(default)]
    pub duhamel: DuhamelConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gaussian,
    Bump,
    Moser,
    Random,
}

fn default_grid_sizes() -> Vec<usize> {
    vec![256, 512]
}

fn default_mt_box() -> f64 {
    8.0
}

fn default_alpha() -> f64 {
    3.9 * PI
}

fn default_alpha_probe() -> f64 {
    4.2 * PI
}

fn default_probe_n() -> Vec<usize> {
    vec![4, 8, 16]
}

fn default_lambda() -> f64 {
    2.0 / PI
}

fn default_beta() -> f64 {
    0.5
}

fn default_families() -> Vec<Family> {
    vec![Family::Gaussian, Family::Bump, Family::Moser]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InequalityConfig {
    #[serde(default = "default_grid_sizes")]
    pub grid_sizes: Vec<usize>,
    /// Box side for the Trudinger–Moser family.
    #[serde(default = "default_mt_box")]
    pub mt_box: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_alpha_probe")]
    pub alpha_probe: f64,
    #[serde(default = "default_probe_n")]
    pub probe_n: Vec<usize>,
    #[serde(default = "default_families")]
    pub families: Vec<Family>,
    /// Extra seeded random Gaussian mixtures in the Trudinger–Moser family.
    #[serde(default)]
    pub random_members: usize,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "one")]
    pub mu: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
}

impl Default for InequalityConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

fn default_spacing_factor() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DuhamelConfig {
    /// Defaults to the run's initial data.
    #[serde(default)]
    pub source: Option<InitialData>,
    /// Defaults to the sweep frequencies.
    #[serde(default)]
    pub omegas: Option<Vec<f64>>,
    /// Defaults to `(∞, 2)` and `(4, 4)`.
    #[serde(default)]
    pub pairs: Option<Vec<AdmissiblePair>>,
    /// Quadrature step as a fraction of the largest allowed `0.5/max(1,|ω|)`.
    #[serde(default = "default_spacing_factor")]
    pub spacing_factor: f64,
}

impl Default for DuhamelConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.omegas.len() < 3 {
            return bad(format!("need at least 3 omegas, got {}", self.omegas.len()));
        }
        if self.omegas.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return bad("omegas must be positive".into());
        }
        if self.omegas.windows(2).any(|w| w[0] >= w[1]) {
            return bad("omegas must be strictly increasing".into());
        }
        let max_omega = self.omegas.iter().copied().fold(0.0, f64::max);
        if self.dt * max_omega > MAX_OSCILLATION_PER_STEP * (1.0 + 1e-12) {
            return bad(format!(
                "dt·max(omega) = {} exceeds {MAX_OSCILLATION_PER_STEP}",
                self.dt * max_omega
            ));
        }
        if self.pairs.is_empty() {
            return bad("at least one admissible pair is required".into());
        }
        self.nonlinearity.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.solver_params(self.single_run_omega())
            .map_err(|e| Error::Config(e.to_string()))?;
        if !(self.duhamel.spacing_factor > 0.0 && self.duhamel.spacing_factor <= 1.0) {
            return bad("duhamel.spacing_factor must lie in (0, 1]".into());
        }
        let iq = &self.inequalities;
        if iq.grid_sizes.is_empty() {
            return bad("inequalities.grid_sizes must not be empty".into());
        }
        if !(iq.mt_box > 0.0 && iq.alpha >= 0.0 && iq.alpha_probe >= 0.0) {
            return bad("inequality box and exponents must be positive".into());
        }
        Ok(())
    }

    pub fn single_run_omega(&self) -> f64 {
        self.omega
            .unwrap_or_else(|| self.omegas.iter().copied().fold(0.0, f64::max))
    }

    pub fn solver_params(&self, omega: f64) -> Result<SolverParams> {
        let p = SolverParams {
            dt: self.dt,
            t_end: self.t_end,
            save_stride: self.save_stride,
            omega,
            grad_warn_threshold: self.grad_warn_threshold,
            resolution_tolerance: self.resolution_tolerance,
            hamiltonian_coefficient: None,
        };
        p.validate()?;
        Ok(p)
    }
}
