//! Trudinger–Moser ratios, the Moser concentrating family, and the `L^∞`
//! logarithmic estimate.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, GridSpec};
use crate::nonlinearity::OVERFLOW_LIMIT;
use crate::spectral::SpectralWorkspace;
use crate::Complex64;

/// Slack on the unit-gradient hypothesis.
pub const HYPOTHESIS_SLACK: f64 = 1e-9;

fn exp_l1_ratio(field: &ComplexField, alpha: f64) -> Result<f64> {
    let mass = field.mass();
    if mass == 0.0 {
        return Err(Error::DegenerateInput("zero field"));
    }
    let mut acc = 0.0;
    for z in field.values() {
        let x = alpha * z.norm_sqr();
        if x > OVERFLOW_LIMIT {
            return Err(Error::Overflow {
                exponent: x,
                limit: OVERFLOW_LIMIT,
            });
        }
        acc += x.exp_m1();
    }
    Ok(acc * field.grid().cell_area() / mass)
}

/// `‖e^{α|u|²} − 1‖_{L¹} / ‖u‖²_{L²}` for `‖∇u‖_{L²} ≤ 1`.
pub fn moser_trudinger_ratio(ws: &mut SpectralWorkspace, field: &ComplexField, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    ws.check(field)?;
    let grad = ws.grad_l2(field);
    if grad > 1.0 + HYPOTHESIS_SLACK {
        return Err(Error::HypothesisViolated(format!("‖∇u‖ = {grad} exceeds 1")));
    }
    exp_l1_ratio(field, alpha)
}

/// Same ratio under the full `‖u‖_{H¹} ≤ 1` constraint, where `α = 4π` is admissible.
pub fn moser_trudinger_ratio_h1(ws: &mut SpectralWorkspace, field: &ComplexField, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    ws.check(field)?;
    let h1 = ws.norm_h1(field);
    if h1 > 1.0 + HYPOTHESIS_SLACK {
        return Err(Error::HypothesisViolated(format!("‖u‖_H1 = {h1} exceeds 1")));
    }
    exp_l1_ratio(field, alpha)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::InvalidParams(format!("alpha = {alpha} must be nonnegative")));
    }
    Ok(())
}

/// Radial Moser profile and its antiderivative in `r`.
struct MoserProfile {
    inner: f64,
    core: f64,
    k: f64,
}

impl MoserProfile {
    fn new(n: usize) -> Self {
        let log_n = (n as f64).ln();
        MoserProfile {
            inner: 1.0 / n as f64,
            core: (log_n / (2.0 * PI)).sqrt(),
            k: (2.0 * PI * log_n).sqrt(),
        }
    }

    fn value(&self, r: f64) -> f64 {
        if r <= self.inner {
            self.core
        } else if r <= 1.0 {
            -r.ln() / self.k
        } else {
            0.0
        }
    }

    /// `∫₀^r value`, with the core value continued to `r < 0`.
    fn antiderivative(&self, r: f64) -> f64 {
        // ∫ −ln s ds = s − s ln s
        let outer = |s: f64| (s - s * s.ln()) / self.k;
        if r <= self.inner {
            self.core * r
        } else if r <= 1.0 {
            self.core * self.inner + outer(r) - outer(self.inner)
        } else {
            self.core * self.inner + outer(1.0) - outer(self.inner)
        }
    }

    /// Average of `value` over `[r − w/2, r + w/2]` near the two kinks, plain value elsewhere.
    fn smoothed(&self, r: f64, w: f64) -> f64 {
        let near = |kink: f64| (r - kink).abs() < w;
        if near(self.inner) || near(1.0) {
            (self.antiderivative(r + 0.5 * w) - self.antiderivative(r - 0.5 * w)) / w
        } else {
            self.value(r)
        }
    }
}

/// The concentrating Moser function
/// `sqrt(log n / 2π)` on `|x| ≤ 1/n`, `log(1/|x|)/sqrt(2π log n)` on `1/n < |x| ≤ 1`,
/// zero beyond, averaged over one cell across each kink.
pub fn moser_sequence(n: usize, grid: GridSpec) -> Result<ComplexField> {
    if n < 2 {
        return Err(Error::InvalidParams(format!("moser index n = {n} must be at least 2")));
    }
    let h = grid.dx().max(grid.dy());
    if 1.0 / (n as f64) < 2.0 * h {
        return Err(Error::ResolutionTooCoarse(format!(
            "core radius 1/{n} is below two cells ({h})"
        )));
    }
    if grid.lx().min(grid.ly()) < 2.0 + 4.0 * h {
        return Err(Error::InvalidGrid("unit support does not fit in the box".into()));
    }
    let profile = MoserProfile::new(n);
    Ok(ComplexField::from_fn(grid, |x, y| {
        Complex64::new(profile.smoothed(x.hypot(y), h), 0.0)
    }))
}

/// `‖u‖_μ = (‖∇u‖² + μ²‖u‖²)^{1/2}` ingredients and the Hölder ratio of the log estimate.
struct LogTerms {
    linf_sq: f64,
    mu_sq: f64,
    /// `(8/μ)^β ‖u‖_{C^β} / ‖u‖_μ`
    x: f64,
}

fn log_terms(ws: &mut SpectralWorkspace, field: &ComplexField, lambda: f64, mu: f64, beta: f64) -> Result<LogTerms> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParams(format!("beta = {beta} must lie in (0, 1)")));
    }
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::InvalidParams(format!("mu = {mu} must lie in (0, 1]")));
    }
    let threshold = 1.0 / (2.0 * PI * beta);
    if lambda.is_nan() || lambda <= threshold {
        return Err(Error::ThresholdViolated { lambda, threshold });
    }
    ws.check(field)?;
    let norm_mu = ws.norm_mu(field, mu);
    if norm_mu == 0.0 {
        return Err(Error::DegenerateInput("zero field"));
    }
    let linf = field.norm_linf();
    Ok(LogTerms {
        linf_sq: linf * linf,
        mu_sq: norm_mu * norm_mu,
        x: (8.0 / mu).powf(beta) * field.holder_norm(beta) / norm_mu,
    })
}

/// `λ‖u‖²_μ log(C_λ + (8/μ)^β ‖u‖_{C^β}/‖u‖_μ) − ‖u‖²_{L^∞}`; nonnegative when the
/// estimate holds with the trial constant `c_lambda`.
pub fn log_estimate_deficit(
    ws: &mut SpectralWorkspace,
    field: &ComplexField,
    lambda: f64,
    mu: f64,
    beta: f64,
    c_lambda: f64,
) -> Result<f64> {
    let t = log_terms(ws, field, lambda, mu, beta)?;
    let arg = c_lambda + t.x;
    if !(arg > 0.0) {
        return Err(Error::InvalidParams(format!("log argument {arg} is not positive")));
    }
    Ok(lambda * t.mu_sq * arg.ln() - t.linf_sq)
}

/// Smallest `C` with zero deficit for this field: `exp(‖u‖²_∞/(λ‖u‖²_μ)) − X`.
/// May be negative, meaning every positive constant works for this field.
pub fn log_estimate_min_constant(
    ws: &mut SpectralWorkspace,
    field: &ComplexField,
    lambda: f64,
    mu: f64,
    beta: f64,
) -> Result<f64> {
    let t = log_terms(ws, field, lambda, mu, beta)?;
    Ok((t.linf_sq / (lambda * t.mu_sq)).exp() - t.x)
}
