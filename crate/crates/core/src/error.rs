use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field shape does not match grid {nx}x{ny}")]
    GridMismatch { nx: usize, ny: usize },

    #[error("field contains non-finite values")]
    NonFinite,

    /// `4π|u|²` exceeded the overflow guard at some grid point.
    #[error("overflow guard tripped: 4π|u|² = {exponent:.3} > {limit}")]
    Overflow { exponent: f64, limit: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("invalid solver parameters: {0}")]
    InvalidParams(String),

    #[error("invalid forcing profile: {0}")]
    InvalidProfile(String),

    #[error("need at least {needed} frames, got {got}")]
    InsufficientFrames { needed: usize, got: usize },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("resolution too coarse: {0}")]
    ResolutionTooCoarse(String),

    #[error("lambda = {lambda} must exceed 1/(2π·beta) = {threshold}")]
    ThresholdViolated { lambda: f64, threshold: f64 },

    #[error("source sampling too coarse: spacing {spacing} exceeds {limit}")]
    SamplingTooCoarse { spacing: f64, limit: f64 },

    #[error("sample integral {integral} exceeds mass bound {bound}")]
    MassBoundViolated { integral: f64, bound: f64 },

    #[error("initial data is supercritical: H(u0) = {hamiltonian}")]
    SupercriticalInitialData { hamiltonian: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("report not found: {}", .0.display())]
    MissingReport(PathBuf),

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
