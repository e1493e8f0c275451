//! Fixtures shared by the criterion benches.

use osnls::{Complex64, ComplexField, GridSpec};

/// Desk-scale torus: `n × n` points on a side of 8π.
pub fn desk_grid(n: usize) -> GridSpec {
    GridSpec::square(n, 8.0 * std::f64::consts::PI).expect("valid grid")
}

/// Centered Gaussian `a·exp(-|x|²/2σ²)`.
pub fn gaussian(grid: GridSpec, a: f64, sigma: f64) -> ComplexField {
    ComplexField::from_fn(grid, |x, y| {
        Complex64::new(a * (-(x * x + y * y) / (2.0 * sigma * sigma)).exp(), 0.0)
    })
}
