use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ComplexField;
use crate::nonlinearity::NonlinearityKind;
use crate::spectral::SpectralWorkspace;

/// Width of the band around `H = 1` classified as critical.
pub const CRITICAL_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalityClass {
    Subcritical,
    Critical,
    Supercritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Criticality {
    pub class: CriticalityClass,
    pub hamiltonian: f64,
}

/// `H(u0) = ‖∇u0‖² + (coefficient/4π)∫(e^{4π|u0|²} − 1 − 4π|u0|²)` against 1.
pub fn criticality_classify(
    ws: &mut SpectralWorkspace,
    u0: &ComplexField,
    coefficient: f64,
) -> Result<Criticality> {
    if !(coefficient.is_finite() && coefficient >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "coefficient = {coefficient} must be nonnegative"
        )));
    }
    ws.check(u0)?;
    let h = ws.gradient_energy(u0)
        + NonlinearityKind::ExponentialCritical.potential_energy(u0, coefficient)?;
    let class = if (h - 1.0).abs() <= CRITICAL_BAND {
        CriticalityClass::Critical
    } else if h < 1.0 {
        CriticalityClass::Subcritical
    } else {
        CriticalityClass::Supercritical
    };
    Ok(Criticality { class, hamiltonian: h })
}
