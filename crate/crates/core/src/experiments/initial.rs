use crate::analysis::{criticality_classify, moser_sequence, Criticality, CriticalityClass};
use crate::error::{Error, Result};
use crate::experiments::config::InitialData;
use crate::grid::{ComplexField, GridSpec};
use crate::spectral::SpectralWorkspace;
use crate::Complex64;

/// Sampled initial data with its classification.
#[derive(Debug, Clone)]
pub struct InitialField {
    pub field: ComplexField,
    pub criticality: Criticality,
}

/// Signed minimal-image offset of `x` from `c` on a circle of length `l`.
fn wrap(x: f64, c: f64, l: f64) -> f64 {
    let d = x - c;
    d - l * (d / l).round()
}

pub fn sample(descriptor: &InitialData, grid: GridSpec) -> Result<ComplexField> {
    let (lx, ly) = (grid.lx(), grid.ly());
    let field = match *descriptor {
        InitialData::Zero => ComplexField::zeros(grid),
        InitialData::Gaussian { amplitude, sigma, center } => {
            if !(sigma > 0.0 && amplitude.is_finite()) {
                return Err(Error::Config(format!("bad gaussian amplitude {amplitude} or sigma {sigma}")));
            }
            let s2 = 2.0 * sigma * sigma;
            ComplexField::from_fn(grid, |x, y| {
                let (dx, dy) = (wrap(x, center[0], lx), wrap(y, center[1], ly));
                Complex64::new(amplitude * (-(dx * dx + dy * dy) / s2).exp(), 0.0)
            })
        }
        InitialData::Bump { amplitude, radius, center } => {
            if !(radius > 0.0 && amplitude.is_finite()) {
                return Err(Error::Config(format!("bad bump amplitude {amplitude} or radius {radius}")));
            }
            ComplexField::from_fn(grid, |x, y| {
                let (dx, dy) = (wrap(x, center[0], lx), wrap(y, center[1], ly));
                let s = (dx * dx + dy * dy) / (radius * radius);
                let v = if s < 1.0 { amplitude * (1.0 - 1.0 / (1.0 - s)).exp() } else { 0.0 };
                Complex64::new(v, 0.0)
            })
        }
        InitialData::Moser { n, scale } => {
            let u = moser_sequence(n, grid).map_err(|e| Error::Config(e.to_string()))?;
            u.scaled(Complex64::new(scale, 0.0))
        }
        InitialData::SingleMode { amplitude, mx, my } => {
            let (kx, ky) = (
                2.0 * std::f64::consts::PI * mx as f64 / lx,
                2.0 * std::f64::consts::PI * my as f64 / ly,
            );
            ComplexField::from_fn(grid, |x, y| Complex64::from_polar(amplitude, kx * x + ky * y))
        }
    };
    if !field.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(field)
}

/// Samples the descriptor and classifies `H(u0)` with the given potential
/// coefficient. Supercritical data is an error unless `allow_supercritical`.
pub fn build_initial_data(
    descriptor: &InitialData,
    grid: GridSpec,
    coefficient: f64,
    allow_supercritical: bool,
) -> Result<InitialField> {
    let field = sample(descriptor, grid)?;
    let mut ws = SpectralWorkspace::new(grid);
    let criticality = criticality_classify(&mut ws, &field, coefficient.max(0.0))?;
    if criticality.class != CriticalityClass::Subcritical && !allow_supercritical {
        return Err(Error::SupercriticalInitialData {
            hamiltonian: criticality.hamiltonian,
        });
    }
    Ok(InitialField { field, criticality })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gauss(a: f64, center: [f64; 2]) -> InitialData {
        InitialData::Gaussian { amplitude: a, sigma: 1.0, center }
    }

    #[test]
    fn zero_descriptor() {
        let g = GridSpec::square(32, 8.0).unwrap();
        let z = build_initial_data(&InitialData::Zero, g, 1.0, false).unwrap();
        assert_eq!(z.field, ComplexField::zeros(g));
        assert_eq!(z.criticality.hamiltonian, 0.0);
    }

    #[test]
    fn default_acceptance_data_is_small() {
        let g = GridSpec::square(256, 8.0 * PI).unwrap();
        let init = build_initial_data(&gauss(0.35, [0.0, 0.0]), g, 1.0, false).unwrap();
        let mut ws = SpectralWorkspace::new(g);
        assert!(init.criticality.hamiltonian < 0.9, "{:?}", init.criticality);
        assert!(ws.grad_l2(&init.field) < 0.95);
    }

    #[test]
    fn translation_on_grid_points_keeps_h() {
        let g = GridSpec::square(128, 16.0).unwrap();
        let shift = [10.0 * g.dx(), -3.0 * g.dy()];
        let a = build_initial_data(&gauss(0.35, [0.0, 0.0]), g, 1.0, false).unwrap();
        let b = build_initial_data(&gauss(0.35, shift), g, 1.0, false).unwrap();
        let (ha, hb) = (a.criticality.hamiltonian, b.criticality.hamiltonian);
        assert!((ha - hb).abs() < 1e-13 * ha, "{ha} vs {hb}");
    }

    #[test]
    fn centers_wrap_around_the_box() {
        let g = GridSpec::square(64, 8.0).unwrap();
        let near_edge = sample(&gauss(1.0, [3.9, 0.0]), g).unwrap();
        // x = −4 is 0.1 from the center through the periodic boundary.
        let v = near_edge.at(0, 32).re;
        assert!((v - (-0.01f64 / 2.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn gate_rejects_large_data() {
        let g = GridSpec::square(256, 8.0 * PI).unwrap();
        let err = build_initial_data(&gauss(0.5, [0.0, 0.0]), g, 1.0, false).unwrap_err();
        assert!(matches!(err, Error::SupercriticalInitialData { hamiltonian } if hamiltonian > 1.0));
        assert!(build_initial_data(&gauss(0.5, [0.0, 0.0]), g, 1.0, true).is_ok());
    }

    #[test]
    fn bump_peak_and_support() {
        let g = GridSpec::square(64, 8.0).unwrap();
        let b = sample(&InitialData::Bump { amplitude: 0.7, radius: 1.0, center: [0.0, 0.0] }, g).unwrap();
        assert!((b.at(32, 32).re - 0.7).abs() < 1e-15);
        assert_eq!(b.at(32 + 8, 32).re, 0.0);
        let m = sample(&InitialData::SingleMode { amplitude: 0.1, mx: 1, my: 0 }, g).unwrap();
        assert!((m.norm_linf() - 0.1).abs() < 1e-15);
    }
}
