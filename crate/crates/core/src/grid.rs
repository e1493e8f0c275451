//! Periodic grid geometry and complex fields sampled on it.
//!
//! Grid points sit at `x_i = -lx/2 + i·dx`, `y_j = -ly/2 + j·dy`, so the origin is
//! the grid point `(nx/2, ny/2)`. Values are stored row-major: index `j·nx + i`.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible number of points per axis.
pub const MIN_POINTS: usize = 16;

/// Offset radius (in cells, per axis) of the Hölder difference-quotient stencil.
pub const HOLDER_STENCIL_RADIUS: i64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct GridSpec {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
}

impl TryFrom<RawGrid> for GridSpec {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        GridSpec::new(raw.nx, raw.ny, raw.lx, raw.ly)
    }
}

impl From<GridSpec> for RawGrid {
    fn from(g: GridSpec) -> Self {
        RawGrid {
            nx: g.nx,
            ny: g.ny,
            lx: g.lx,
            ly: g.ly,
        }
    }
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        for (name, n) in [("nx", nx), ("ny", ny)] {
            if !n.is_power_of_two() || n < MIN_POINTS {
                return Err(Error::InvalidGrid(format!(
                    "{name} = {n} must be a power of two >= {MIN_POINTS}"
                )));
            }
        }
        for (name, l) in [("lx", lx), ("ly", ly)] {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!("{name} = {l} must be positive")));
            }
        }
        Ok(GridSpec { nx, ny, lx, ly })
    }

    /// Square `n × n` torus of side `l`.
    pub fn square(n: usize, l: f64) -> Result<Self> {
        Self::new(n, n, l, l)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self, i: usize) -> f64 {
        -0.5 * self.lx + i as f64 * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        -0.5 * self.ly + j as f64 * self.dy()
    }

    /// Same box, every axis refined by `factor` (a power of two).
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.nx * factor, self.ny * factor, self.lx, self.ly)
    }
}

/// A complex scalar field on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch {
                nx: grid.nx,
                ny: grid.ny,
            });
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(ComplexField { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: GridSpec, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ComplexField { grid, values }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        ComplexField {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Samples `f(x, y)` at every grid point.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            let y = grid.y(j);
            for i in 0..grid.nx {
                values.push(f(grid.x(i), y));
            }
        }
        ComplexField { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[j * self.grid.nx + i]
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scale(&mut self, s: Complex64) {
        self.values.iter_mut().for_each(|z| *z *= s);
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    /// `self - other`, both on the same grid.
    pub fn sub(&self, other: &ComplexField) -> Result<ComplexField> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(ComplexField::from_vec_unchecked(self.grid, values))
    }

    pub(crate) fn check_same_grid(&self, other: &ComplexField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                nx: self.grid.nx,
                ny: self.grid.ny,
            });
        }
        Ok(())
    }

    /// Largest `|u|` on the grid.
    pub fn norm_linf(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Rectangle-rule `‖u‖²_{L²}`.
    pub fn mass(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    pub fn norm_l2(&self) -> f64 {
        self.mass().sqrt()
    }

    /// Rectangle-rule `L^p` norm, `p >= 1` finite.
    pub fn norm_lp(&self, p: f64) -> f64 {
        assert!(p >= 1.0 && p.is_finite(), "norm_lp needs finite p >= 1");
        if p == 2.0 {
            return self.norm_l2();
        }
        lp_sum(&self.values, p).powf(1.0 / p) * self.grid.cell_area().powf(1.0 / p)
    }

    /// `‖u‖_{L∞} + max_stencil |u(x)-u(y)|/|x-y|^β`.
    ///
    /// The seminorm runs over all offsets `(a·dx, b·dy)` with `|a|, |b| <= 8`
    /// (periodic wrap), not over all pairs of grid points.
    pub fn holder_norm(&self, beta: f64) -> f64 {
        self.norm_linf() + self.holder_seminorm(beta)
    }

    pub fn holder_half_norm(&self) -> f64 {
        self.holder_norm(0.5)
    }

    pub fn holder_seminorm(&self, beta: f64) -> f64 {
        let r = HOLDER_STENCIL_RADIUS;
        // (a,b) and (-a,-b) probe the same pairs.
        let offsets: Vec<(i64, i64)> = (-r..=r)
            .flat_map(|a| (0..=r).map(move |b| (a, b)))
            .filter(|&(a, b)| b > 0 || a > 0)
            .collect();
        offsets
            .par_iter()
            .map(|&(a, b)| self.offset_quotient(a, b, beta))
            .reduce(|| 0.0, f64::max)
    }

    fn offset_quotient(&self, a: i64, b: i64, beta: f64) -> f64 {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let hx = a as f64 * self.grid.dx();
        let hy = b as f64 * self.grid.dy();
        let dist = (hx * hx + hy * hy).sqrt();
        let sx = a.rem_euclid(nx as i64) as usize;
        let sy = b.rem_euclid(ny as i64) as usize;
        let mut best = 0.0f64;
        for j in 0..ny {
            let row = &self.values[j * nx..(j + 1) * nx];
            let jj = (j + sy) % ny;
            let other = &self.values[jj * nx..(jj + 1) * nx];
            for (i, u) in row.iter().enumerate() {
                let v = other[(i + sx) % nx];
                best = best.max((u - v).norm_sqr());
            }
        }
        best.sqrt() / dist.powf(beta)
    }
}

pub(crate) fn lp_sum(values: &[Complex64], p: f64) -> f64 {
    if p == 4.0 {
        values.iter().map(|z| z.norm_sqr() * z.norm_sqr()).sum()
    } else {
        values.iter().map(|z| z.norm().powf(p)).sum()
    }
}
