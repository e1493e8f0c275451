//! Pseudo-spectral simulation of the 2-D Schrödinger equation
//!
//! ```text
//! i ∂t u + Δu = θ(ωt) · u (e^{4π|u|²} − 1)
//! ```
//!
//! on a periodic torus, together with the limiting (averaged) equation, the
//! conservation diagnostics, and numerical checks of the inequalities that
//! control its well-posedness.

pub mod analysis;
pub mod checkpoint;
pub mod error;
pub mod experiments;
pub mod forcing;
pub mod grid;
pub mod integrator;
pub mod nonlinearity;
pub mod spectral;

pub use error::{Error, Result};
pub use forcing::ThetaProfile;
pub use grid::{ComplexField, GridSpec};
pub use integrator::{Diagnostics, RunStatus, RunTrace, SolverParams};
pub use nonlinearity::NonlinearityKind;
pub use rustfft::num_complex::Complex64;
pub use spectral::SpectralWorkspace;
