//! Finite partitions by integral mass, and the bootstrap bound for `X ≤ a + bX^θ`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Slack allowed between the trapezoid integral and the declared mass bound.
pub const MASS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionResult {
    /// `0 = t_0 < … < t_J = ℓ`
    pub breakpoints: Vec<f64>,
}

impl PartitionResult {
    /// Number of subintervals `J`.
    pub fn intervals(&self) -> usize {
        self.breakpoints.len() - 1
    }
}

/// Cumulative trapezoid integral `φ` of the piecewise-linear interpolant.
fn cumulative(samples: &[f64], h: f64) -> Vec<f64> {
    let mut phi = Vec::with_capacity(samples.len());
    phi.push(0.0);
    for w in samples.windows(2) {
        let last = *phi.last().expect("nonempty");
        phi.push(last + 0.5 * h * (w[0] + w[1]));
    }
    phi
}

/// `∫` of the piecewise-linear interpolant from the cell start to offset `s ∈ [0, h]`.
fn partial(f0: f64, f1: f64, h: f64, s: f64) -> f64 {
    f0 * s + 0.5 * (f1 - f0) * s * s / h
}

/// Offset `s ∈ [0, h]` in a cell where the partial integral reaches `target`.
fn solve_partial(f0: f64, f1: f64, h: f64, target: f64) -> f64 {
    // (f1 − f0)/(2h) s² + f0 s − target = 0, with the root in [0, h]
    let a = 0.5 * (f1 - f0) / h;
    let s = if a.abs() <= 1e-14 * (f0.abs() + f1.abs()).max(f64::MIN_POSITIVE) {
        target / f0
    } else {
        // Cancellation-free form of (−f0 + sqrt(f0² + 4a·target)) / 2a
        2.0 * target / (f0 + (f0 * f0 + 4.0 * a * target).max(0.0).sqrt())
    };
    s.clamp(0.0, h)
}

/// Splits `[0, ℓ]` where the running integral of the samples crosses
/// `ε, 2ε, …`, giving at most `⌊M/ε⌋ + 1` pieces of integral at most `ε`.
pub fn partition_interval(samples: &[f64], length: f64, eps: f64, mass_bound: f64) -> Result<PartitionResult> {
    if samples.len() < 2 {
        return Err(Error::InvalidParams("need at least two samples".into()));
    }
    if samples.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidParams("samples must be finite and nonnegative".into()));
    }
    if !(length > 0.0 && eps > 0.0 && mass_bound > 0.0) {
        return Err(Error::InvalidParams("length, eps and mass bound must be positive".into()));
    }
    let h = length / (samples.len() - 1) as f64;
    let phi = cumulative(samples, h);
    let total = *phi.last().expect("nonempty");
    if total > mass_bound + MASS_SLACK {
        return Err(Error::MassBoundViolated {
            integral: total,
            bound: mass_bound,
        });
    }
    let tol = 1e-12 * mass_bound.max(eps);
    let mut breakpoints = vec![0.0];
    let mut level = 1usize;
    for (i, w) in samples.windows(2).enumerate() {
        while level as f64 * eps <= phi[i + 1] + tol {
            let target = level as f64 * eps;
            if target >= total - tol {
                break;
            }
            let t = if (target - phi[i + 1]).abs() <= tol {
                (i + 1) as f64 * length / (samples.len() - 1) as f64
            } else {
                i as f64 * h + solve_partial(w[0], w[1], h, target - phi[i])
            };
            if t > *breakpoints.last().expect("nonempty") {
                breakpoints.push(t);
            }
            level += 1;
        }
    }
    breakpoints.push(length);
    Ok(PartitionResult { breakpoints })
}

/// Integral of the samples' interpolant over `[a, b] ⊂ [0, ℓ]`.
pub fn interval_integral(samples: &[f64], length: f64, a: f64, b: f64) -> f64 {
    let h = length / (samples.len() - 1) as f64;
    let phi = cumulative(samples, h);
    let at = |t: f64| {
        let i = ((t / h).floor() as usize).min(samples.len() - 2);
        phi[i] + partial(samples[i], samples[i + 1], h, t - i as f64 * h)
    };
    at(b) - at(a)
}

/// If `a < (1 − 1/θ)(θb)^{−1/(θ−1)}` and `x0 ≤ (θb)^{−1/(θ−1)}`, any continuous
/// `X ≥ 0` with `X(0) = x0` and `X ≤ a + bX^θ` stays below `θa/(θ − 1)`.
pub fn continuity_bound(a: f64, b: f64, theta: f64, x0: f64) -> Option<f64> {
    if !(a > 0.0 && b > 0.0 && theta > 1.0 && x0 >= 0.0) {
        return None;
    }
    let barrier = (theta * b).powf(-1.0 / (theta - 1.0));
    if a < (1.0 - 1.0 / theta) * barrier && x0 <= barrier {
        Some(theta * a / (theta - 1.0))
    } else {
        None
    }
}
