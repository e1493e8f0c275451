//! Distance between the oscillating and the averaged Duhamel integrals
//! `D(t) = ∫₀^t (θ(ωs) − I(θ)) e^{i(t−s)Δ} f(s) ds`.

use crate::analysis::strichartz::{lq_in_time, AdmissiblePair};
use crate::error::{Error, Result};
use crate::forcing::ThetaProfile;
use crate::grid::ComplexField;
use crate::spectral::SpectralWorkspace;
use crate::Complex64;

/// Source `f(s)` on a uniform time grid.
#[derive(Debug, Clone)]
pub enum SampledSource {
    /// Time-independent source sampled with step `spacing` up to `t_end`.
    Steady {
        field: ComplexField,
        spacing: f64,
        t_end: f64,
    },
    /// `frames[j] = f(j·spacing)`.
    Frames {
        frames: Vec<ComplexField>,
        spacing: f64,
    },
}

impl SampledSource {
    /// Number of intervals and their uniform width.
    fn grid(&self) -> Result<(usize, f64)> {
        match self {
            SampledSource::Steady { spacing, t_end, .. } => {
                if !(*spacing > 0.0 && *t_end > 0.0) {
                    return Err(Error::InvalidParams("spacing and t_end must be positive".into()));
                }
                let n = ((t_end / spacing) - 1e-9).ceil().max(1.0) as usize;
                Ok((n, t_end / n as f64))
            }
            SampledSource::Frames { frames, spacing } => {
                if frames.len() < 2 {
                    return Err(Error::InsufficientFrames {
                        needed: 2,
                        got: frames.len(),
                    });
                }
                if !(*spacing > 0.0) {
                    return Err(Error::InvalidParams("spacing must be positive".into()));
                }
                Ok((frames.len() - 1, *spacing))
            }
        }
    }

    fn at(&self, j: usize) -> &ComplexField {
        match self {
            SampledSource::Steady { field, .. } => field,
            SampledSource::Frames { frames, .. } => &frames[j],
        }
    }
}

/// Coarsest source spacing accepted at frequency `omega`.
pub fn max_spacing(omega: f64) -> f64 {
    0.5 / omega.abs().max(1.0)
}

/// `‖D‖_{L^q((0,T), L^r)}` for each pair, trapezoid in `s` with exact propagators.
pub fn duhamel_gap(
    ws: &mut SpectralWorkspace,
    source: &SampledSource,
    profile: &ThetaProfile,
    omega: f64,
    pairs: &[AdmissiblePair],
) -> Result<Vec<f64>> {
    let (n, h) = source.grid()?;
    let limit = max_spacing(omega);
    if h > limit * (1.0 + 1e-12) {
        return Err(Error::SamplingTooCoarse { spacing: h, limit });
    }
    ws.check(source.at(0))?;
    let avg = profile.average();
    let weight = |j: usize| profile.eval(omega * j as f64 * h) - avg;

    let times: Vec<f64> = (0..=n).map(|j| j as f64 * h).collect();
    let mut norms: Vec<Vec<f64>> = vec![Vec::with_capacity(n + 1); pairs.len()];
    let mut d = ComplexField::zeros(*source.at(0).grid());
    let mut push_norms = |d: &ComplexField| {
        for (acc, p) in norms.iter_mut().zip(pairs) {
            acc.push(d.norm_lp(p.r()));
        }
    };
    push_norms(&d);
    for j in 0..n {
        // D_{j+1} = e^{ihΔ}(D_j + (h/2) w_j f_j) + (h/2) w_{j+1} f_{j+1}
        axpy(&mut d, 0.5 * h * weight(j), source.at(j));
        ws.free_propagate(&mut d, h);
        axpy(&mut d, 0.5 * h * weight(j + 1), source.at(j + 1));
        push_norms(&d);
    }
    pairs
        .iter()
        .zip(&norms)
        .map(|(p, v)| lq_in_time(&times, v, p.q()))
        .collect()
}

fn axpy(y: &mut ComplexField, a: f64, x: &ComplexField) {
    if a == 0.0 {
        return;
    }
    let a = Complex64::new(a, 0.0);
    y.values_mut()
        .iter_mut()
        .zip(x.values())
        .for_each(|(y, x)| *y += a * x);
}
