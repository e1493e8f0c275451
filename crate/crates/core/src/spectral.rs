//! FFT-backed operators on the periodic grid.
//!
//! Spectra are kept in a transposed (x-mode-major) layout: mode `(mx, my)`
//! lives at `ix·ny + iy`. Only this module touches that layout.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::Result;
use crate::grid::{lp_sum, ComplexField, GridSpec};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Signed wavenumbers `2π·m/L` in FFT order (`m = 0, 1, …, n/2-1, -n/2, …, -1`).
pub fn wavenumbers(n: usize, length: f64) -> Vec<f64> {
    let n_i = n as i64;
    (0..n_i)
        .map(|i| {
            let m = if i < n_i / 2 { i } else { i - n_i };
            2.0 * std::f64::consts::PI * m as f64 / length
        })
        .collect()
}

/// Exclusive per-thread FFT plans, wavenumber tables and scratch buffers.
pub struct SpectralWorkspace {
    grid: GridSpec,
    kx: Vec<f64>,
    ky: Vec<f64>,
    // Derivative multipliers: like kx/ky but with the Nyquist mode zeroed.
    dkx: Vec<f64>,
    dky: Vec<f64>,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    spec: Vec<Complex64>,
    tmp: Vec<Complex64>,
    propagator: Option<(f64, Vec<Complex64>)>,
}

impl std::fmt::Debug for SpectralWorkspace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralWorkspace")
            .field("grid", &self.grid)
            .finish_non_exhaustive()
    }
}

/// Norms of one field that share a single forward transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldNorms {
    pub mass: f64,
    pub grad_sq: f64,
    pub w14: f64,
    pub high_band_fraction: f64,
}

impl SpectralWorkspace {
    pub fn new(grid: GridSpec) -> Self {
        let (nx, ny) = (grid.nx(), grid.ny());
        let mut planner = FftPlanner::new();
        let fwd_x = planner.plan_fft_forward(nx);
        let inv_x = planner.plan_fft_inverse(nx);
        let fwd_y = planner.plan_fft_forward(ny);
        let inv_y = planner.plan_fft_inverse(ny);
        let scratch_len = [&fwd_x, &inv_x, &fwd_y, &inv_y]
            .iter()
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        let kx = wavenumbers(nx, grid.lx());
        let ky = wavenumbers(ny, grid.ly());
        let mut dkx = kx.clone();
        dkx[nx / 2] = 0.0;
        let mut dky = ky.clone();
        dky[ny / 2] = 0.0;
        SpectralWorkspace {
            grid,
            kx,
            ky,
            dkx,
            dky,
            fwd_x,
            inv_x,
            fwd_y,
            inv_y,
            scratch: vec![ZERO; scratch_len],
            spec: vec![ZERO; grid.len()],
            tmp: vec![ZERO; grid.len()],
            propagator: None,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn kx(&self) -> &[f64] {
        &self.kx
    }

    pub fn ky(&self) -> &[f64] {
        &self.ky
    }

    /// Unnormalized forward transform of `input` into `self.spec`.
    fn forward_into_spec(&mut self, input: &[Complex64]) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        self.tmp.copy_from_slice(input);
        self.fwd_x.process_with_scratch(&mut self.tmp, &mut self.scratch);
        transpose(&self.tmp, &mut self.spec, ny, nx);
        self.fwd_y.process_with_scratch(&mut self.spec, &mut self.scratch);
    }

    /// Inverse transform (normalized) of `spec`; `spec` is clobbered.
    fn inverse(
        &mut self,
        spec: &mut [Complex64],
        out: &mut [Complex64],
    ) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        self.inv_y.process_with_scratch(spec, &mut self.scratch);
        transpose(spec, out, nx, ny);
        self.inv_x.process_with_scratch(out, &mut self.scratch);
        let norm = 1.0 / self.grid.len() as f64;
        out.iter_mut().for_each(|z| *z *= norm);
    }

    /// Forward then inverse transform.
    pub fn fft_roundtrip(&mut self, field: &ComplexField) -> ComplexField {
        self.forward_into_spec(field.values());
        let mut spec = std::mem::take(&mut self.spec);
        let mut out = vec![ZERO; self.grid.len()];
        self.inverse(&mut spec, &mut out);
        self.spec = spec;
        ComplexField::from_vec_unchecked(self.grid, out)
    }

    /// Fourier coefficient of mode index `(ix, iy)` (FFT ordering), unnormalized.
    pub fn coefficients(&mut self, field: &ComplexField) -> Vec<Vec<Complex64>> {
        self.forward_into_spec(field.values());
        let ny = self.grid.ny();
        self.spec.chunks(ny).map(|c| c.to_vec()).collect()
    }

    /// Multiplies every Fourier coefficient by `exp(-i|k|²t)` in place.
    pub fn free_propagate(&mut self, field: &mut ComplexField, t: f64) {
        if t == 0.0 {
            return;
        }
        self.forward_into_spec(field.values());
        let cached = matches!(&self.propagator, Some((tc, _)) if *tc == t);
        if !cached {
            let ny = self.grid.ny();
            let table = self
                .kx
                .iter()
                .flat_map(|&kx| self.ky.iter().map(move |&ky| (kx, ky)))
                .map(|(kx, ky)| Complex64::from_polar(1.0, -(kx * kx + ky * ky) * t))
                .collect::<Vec<_>>();
            debug_assert_eq!(table.len(), self.kx.len() * ny);
            self.propagator = Some((t, table));
        }
        let (_, table) = self.propagator.as_ref().expect("propagator table");
        self.spec
            .iter_mut()
            .zip(table)
            .for_each(|(z, p)| *z *= p);
        let mut spec = std::mem::take(&mut self.spec);
        self.inverse(&mut spec, field.values_mut());
        self.spec = spec;
    }

    /// `e^{itΔ}` applied to a copy of `field`.
    pub fn free_propagator(&mut self, field: &ComplexField, t: f64) -> ComplexField {
        let mut out = field.clone();
        self.free_propagate(&mut out, t);
        out
    }

    /// `Δu` with symbol `−|k|²`, the generator of [`Self::free_propagate`].
    pub fn laplacian(&mut self, field: &ComplexField) -> ComplexField {
        self.forward_into_spec(field.values());
        let ny = self.grid.ny();
        for (ix, &kx) in self.kx.iter().enumerate() {
            for (z, &ky) in self.spec[ix * ny..(ix + 1) * ny].iter_mut().zip(&self.ky) {
                *z *= -(kx * kx + ky * ky);
            }
        }
        let mut spec = std::mem::take(&mut self.spec);
        let mut out = vec![ZERO; self.grid.len()];
        self.inverse(&mut spec, &mut out);
        self.spec = spec;
        ComplexField::from_vec_unchecked(self.grid, out)
    }

    /// Spectral `(∂x u, ∂y u)`.
    pub fn gradient(&mut self, field: &ComplexField) -> (ComplexField, ComplexField) {
        self.forward_into_spec(field.values());
        let (gx, gy) = self.gradient_from_spec();
        (
            ComplexField::from_vec_unchecked(self.grid, gx),
            ComplexField::from_vec_unchecked(self.grid, gy),
        )
    }

    fn gradient_from_spec(&mut self) -> (Vec<Complex64>, Vec<Complex64>) {
        let ny = self.grid.ny();
        let n = self.grid.len();
        let mut sx = vec![ZERO; n];
        let mut sy = vec![ZERO; n];
        for (ix, &kx) in self.dkx.iter().enumerate() {
            let row = ix * ny;
            for (iy, &ky) in self.dky.iter().enumerate() {
                let z = self.spec[row + iy];
                // i·k·z
                sx[row + iy] = Complex64::new(-kx * z.im, kx * z.re);
                sy[row + iy] = Complex64::new(-ky * z.im, ky * z.re);
            }
        }
        let mut gx = vec![ZERO; n];
        let mut gy = vec![ZERO; n];
        self.inverse(&mut sx, &mut gx);
        self.inverse(&mut sy, &mut gy);
        (gx, gy)
    }

    /// `Σ|k|²|û|²` weighted to give `‖∇u‖²_{L²}`, from whatever is in `self.spec`.
    fn grad_sq_from_spec(&self) -> f64 {
        let ny = self.grid.ny();
        let mut acc = 0.0;
        for (ix, &kx) in self.dkx.iter().enumerate() {
            let row = &self.spec[ix * ny..(ix + 1) * ny];
            for (z, &ky) in row.iter().zip(&self.dky) {
                acc += (kx * kx + ky * ky) * z.norm_sqr();
            }
        }
        acc * self.grid.cell_area() / self.grid.len() as f64
    }

    fn spectral_mass_from_spec(&self) -> f64 {
        self.spec.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_area()
            / self.grid.len() as f64
    }

    /// Fraction of spectral energy outside the 2/3-rule box, i.e. in modes
    /// with `|mx| > nx/3` or `|my| > ny/3`.
    fn high_band_fraction_from_spec(&self) -> f64 {
        let (nx, ny) = (self.grid.nx() as i64, self.grid.ny() as i64);
        let signed = |i: usize, n: i64| {
            let i = i as i64;
            if i < n / 2 {
                i
            } else {
                i - n
            }
        };
        let mut total = 0.0;
        let mut high = 0.0;
        for ix in 0..nx as usize {
            let mx = signed(ix, nx).abs();
            for iy in 0..ny as usize {
                let my = signed(iy, ny).abs();
                let e = self.spec[ix * ny as usize + iy].norm_sqr();
                total += e;
                if 3 * mx > nx || 3 * my > ny {
                    high += e;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            high / total
        }
    }

    /// `‖u‖²_{L²}` evaluated on the Fourier side (Parseval).
    pub fn spectral_mass(&mut self, field: &ComplexField) -> f64 {
        self.forward_into_spec(field.values());
        self.spectral_mass_from_spec()
    }

    /// `‖∇u‖²_{L²}` via Parseval.
    pub fn gradient_energy(&mut self, field: &ComplexField) -> f64 {
        self.forward_into_spec(field.values());
        self.grad_sq_from_spec()
    }

    pub fn grad_l2(&mut self, field: &ComplexField) -> f64 {
        self.gradient_energy(field).sqrt()
    }

    pub fn norm_h1(&mut self, field: &ComplexField) -> f64 {
        self.norm_mu(field, 1.0)
    }

    /// `(‖∇u‖² + μ²‖u‖²)^{1/2}`.
    pub fn norm_mu(&mut self, field: &ComplexField, mu: f64) -> f64 {
        self.forward_into_spec(field.values());
        (self.grad_sq_from_spec() + mu * mu * field.mass()).sqrt()
    }

    /// `(‖u‖_r^r + ‖∂x u‖_r^r + ‖∂y u‖_r^r)^{1/r}` with spectral derivatives.
    pub fn norm_w1r(&mut self, field: &ComplexField, r: f64) -> f64 {
        assert!(r >= 1.0 && r.is_finite(), "W^(1,r) needs finite r >= 1");
        self.forward_into_spec(field.values());
        if r == 2.0 {
            return (self.grad_sq_from_spec() + field.mass()).sqrt();
        }
        let (gx, gy) = self.gradient_from_spec();
        let s = lp_sum(field.values(), r) + lp_sum(&gx, r) + lp_sum(&gy, r);
        (s * self.grid.cell_area()).powf(1.0 / r)
    }

    pub fn norm_w14(&mut self, field: &ComplexField) -> f64 {
        self.norm_w1r(field, 4.0)
    }

    pub fn high_band_fraction(&mut self, field: &ComplexField) -> f64 {
        self.forward_into_spec(field.values());
        self.high_band_fraction_from_spec()
    }

    /// Mass, gradient energy, `W^{1,4}` norm and high-band fraction from one transform.
    pub fn field_norms(&mut self, field: &ComplexField) -> FieldNorms {
        self.forward_into_spec(field.values());
        let grad_sq = self.grad_sq_from_spec();
        let high_band_fraction = self.high_band_fraction_from_spec();
        let (gx, gy) = self.gradient_from_spec();
        let s = lp_sum(field.values(), 4.0) + lp_sum(&gx, 4.0) + lp_sum(&gy, 4.0);
        FieldNorms {
            mass: field.mass(),
            grad_sq,
            w14: (s * self.grid.cell_area()).powf(0.25),
            high_band_fraction,
        }
    }

    /// Checks that `field` lives on this workspace's grid.
    pub fn check(&self, field: &ComplexField) -> Result<()> {
        if field.grid() != &self.grid {
            return Err(crate::Error::GridMismatch {
                nx: self.grid.nx(),
                ny: self.grid.ny(),
            });
        }
        Ok(())
    }
}

/// `src` is `rows × cols` row-major; `dst` receives the `cols × rows` transpose.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const BLOCK: usize = 16;
    for r0 in (0..rows).step_by(BLOCK) {
        for c0 in (0..cols).step_by(BLOCK) {
            for r in r0..(r0 + BLOCK).min(rows) {
                for c in c0..(c0 + BLOCK).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}
