//! Pointwise nonlinearities `f(u) = g(|u|²)·u`.
//!
//! The exponential-critical case is `g(s) = e^{4πs} − 1`; the monomial
//! case `g(s) = s^{(p−1)/2}` is kept for cross-checks against schemes that
//! only handle polynomial terms.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ComplexField;
use crate::Complex64;

/// Critical Moser–Trudinger exponent `4π`.
pub const ALPHA0: f64 = 4.0 * PI;

/// Largest admissible `4π|u|²` before the exponential is considered to overflow.
pub const OVERFLOW_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearityKind {
    #[default]
    ExponentialCritical,
    Monomial { p: f64 },
}

/// `e^x − 1 − x`, accurate for small `x`.
pub fn expm1_minus_x(x: f64) -> f64 {
    if x.abs() < 0.1 {
        // Horner form of x²/2! + x³/3! + … + x⁹/9!
        let mut acc = 0.0;
        for k in (2..=9).rev() {
            acc = (acc + 1.0) * x / k as f64;
        }
        acc * x
    } else {
        x.exp_m1() - x
    }
}

impl NonlinearityKind {
    pub fn monomial(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidParams(format!("monomial power p = {p} must exceed 1")));
        }
        Ok(NonlinearityKind::Monomial { p })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NonlinearityKind::ExponentialCritical => Ok(()),
            NonlinearityKind::Monomial { p } => Self::monomial(p).map(|_| ()),
        }
    }

    /// `g(s)` for `s = |u|²`, without the overflow guard.
    #[inline]
    pub fn growth(&self, s: f64) -> f64 {
        match *self {
            NonlinearityKind::ExponentialCritical => (ALPHA0 * s).exp_m1(),
            NonlinearityKind::Monomial { p } => s.powf(0.5 * (p - 1.0)),
        }
    }

    /// Fails with [`Error::Overflow`] if the exponential would leave the safe range.
    pub fn check_overflow(&self, field: &ComplexField) -> Result<()> {
        if let NonlinearityKind::ExponentialCritical = self {
            let s = field.values().iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
            check_exponent(ALPHA0 * s)?;
        }
        if !field.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    /// `G(|u|²)` integrated over the torus, scaled by `coefficient`, where `G' = g`.
    pub fn potential_energy(&self, field: &ComplexField, coefficient: f64) -> Result<f64> {
        match *self {
            NonlinearityKind::ExponentialCritical => potential_density(field, coefficient),
            NonlinearityKind::Monomial { p } => {
                let q = 0.5 * (p + 1.0);
                let s: f64 = field.values().iter().map(|z| z.norm_sqr().powf(q)).sum();
                Ok(coefficient * s * field.grid().cell_area() / q)
            }
        }
    }
}

#[inline]
fn check_exponent(exponent: f64) -> Result<()> {
    if exponent > OVERFLOW_LIMIT || exponent.is_nan() {
        return Err(Error::Overflow {
            exponent,
            limit: OVERFLOW_LIMIT,
        });
    }
    Ok(())
}

/// Pointwise `f(u)`.
pub fn f_eval(field: &ComplexField, kind: NonlinearityKind) -> Result<ComplexField> {
    kind.check_overflow(field)?;
    let values = field
        .values()
        .iter()
        .map(|&u| u * kind.growth(u.norm_sqr()))
        .collect();
    ComplexField::new(*field.grid(), values)
}

/// Scalar `f(u)` for the exponential nonlinearity.
pub fn f_scalar(u: Complex64) -> Complex64 {
    u * (ALPHA0 * u.norm_sqr()).exp_m1()
}

/// The two real coefficient fields of `∇f(u) = a·∇u + b·(u/ū)·∇ū`.
#[derive(Debug, Clone, PartialEq)]
pub struct DfComponents {
    /// `e^{4π|u|²} − 1 + 4π|u|² e^{4π|u|²}`
    pub a: Vec<f64>,
    /// `4π|u|² e^{4π|u|²}`
    pub b: Vec<f64>,
}

/// `(a(|u|), b(|u|))` for one scalar.
pub fn df_scalar(u: Complex64) -> (f64, f64) {
    let x = ALPHA0 * u.norm_sqr();
    let b = x * x.exp();
    (x.exp_m1() + b, b)
}

pub fn df_components(field: &ComplexField) -> Result<DfComponents> {
    NonlinearityKind::ExponentialCritical.check_overflow(field)?;
    let (a, b) = field.values().iter().map(|&u| df_scalar(u)).unzip();
    Ok(DfComponents { a, b })
}

/// Contracts the derivative with one partial derivative `du` of `u`:
/// `a·du + b·(u/ū)·conj(du)`.
///
/// For real `u` the phase factor is 1 and this is the literal pairing
/// `a·∂u + b·∂ū`; for complex `u` the factor `u/ū` makes it exact.
pub fn df_contract(
    field: &ComplexField,
    components: &DfComponents,
    du: &ComplexField,
) -> Result<ComplexField> {
    field.check_same_grid(du)?;
    let values = field
        .values()
        .iter()
        .zip(du.values())
        .zip(components.a.iter().zip(&components.b))
        .map(|((&u, &d), (&a, &b))| {
            let s = u.norm_sqr();
            let phase = if s > 0.0 { u * u / s } else { Complex64::new(0.0, 0.0) };
            d * a + phase * d.conj() * b
        })
        .collect();
    ComplexField::new(*field.grid(), values)
}

/// `(coefficient/4π)·∫(e^{4π|u|²} − 1 − 4π|u|²) dx` by rectangle rule.
pub fn potential_density(field: &ComplexField, coefficient: f64) -> Result<f64> {
    NonlinearityKind::ExponentialCritical.check_overflow(field)?;
    if coefficient == 0.0 {
        return Ok(0.0);
    }
    let s: f64 = field
        .values()
        .iter()
        .map(|z| expm1_minus_x(ALPHA0 * z.norm_sqr()))
        .sum();
    Ok(coefficient / ALPHA0 * s * field.grid().cell_area())
}

/// `|f(u) − f(v)| / (|u − v|·(e^{4π(1+ε)|u|²} − 1 + e^{4π(1+ε)|v|²} − 1))`.
pub fn local_lipschitz_ratio(u: Complex64, v: Complex64, eps: f64) -> Result<f64> {
    if u == v {
        return Err(Error::DegenerateInput("u and v coincide"));
    }
    let weight = |z: Complex64| (ALPHA0 * (1.0 + eps) * z.norm_sqr()).exp_m1();
    Ok((f_scalar(u) - f_scalar(v)).norm() / ((u - v).norm() * (weight(u) + weight(v))))
}

/// Companion ratio for the derivative bound:
/// `|Df(u) − Df(v)| / (|u − v|·(|u| + e^{4π(1+ε)|u|²} − 1 + |v| + e^{4π(1+ε)|v|²} − 1))`,
/// with `Df` the real 2-vector `(a, b)`.
pub fn df_lipschitz_ratio(u: Complex64, v: Complex64, eps: f64) -> Result<f64> {
    if u == v {
        return Err(Error::DegenerateInput("u and v coincide"));
    }
    let (au, bu) = df_scalar(u);
    let (av, bv) = df_scalar(v);
    let num = (au - av).hypot(bu - bv);
    let weight = |z: Complex64| z.norm() + (ALPHA0 * (1.0 + eps) * z.norm_sqr()).exp_m1();
    Ok(num / ((u - v).norm() * (weight(u) + weight(v))))
}

/// Largest ratio over `samples` random pairs drawn uniformly from the disk `|z| <= radius`.
pub fn empirical_lipschitz_max(
    ratio: impl Fn(Complex64, Complex64, f64) -> Result<f64>,
    samples: usize,
    radius: f64,
    eps: f64,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut disk = move || {
        let r = radius * rng.gen::<f64>().sqrt();
        Complex64::from_polar(r, rng.gen_range(0.0..2.0 * PI))
    };
    let mut best = 0.0f64;
    for _ in 0..samples {
        let (u, v) = (disk(), disk());
        if let Ok(q) = ratio(u, v, eps) {
            best = best.max(q);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::spectral::SpectralWorkspace;

    fn gaussian(grid: GridSpec, a: f64, phase_k: f64) -> ComplexField {
        ComplexField::from_fn(grid, |x, y| {
            Complex64::from_polar(a * (-(x * x + y * y) / 2.0).exp(), phase_k * x)
        })
    }

    #[test]
    fn f_vanishes_at_zero() {
        let g = GridSpec::square(16, 1.0).unwrap();
        let z = ComplexField::zeros(g);
        assert_eq!(f_eval(&z, NonlinearityKind::ExponentialCritical).unwrap(), z);
        assert_eq!(f_scalar(Complex64::new(0.0, 0.0)), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn f_matches_high_precision_value() {
        // 0.1·(e^{0.04π} − 1) to 50 digits (series evaluation).
        let expected = 0.013_390_078_029_121_16_f64;
        let got = f_scalar(Complex64::new(0.1, 0.0)).re;
        assert!(((got - expected) / expected).abs() < 1e-14, "{got}");
    }

    #[test]
    fn monomial_cubic() {
        let g = GridSpec::square(16, 1.0).unwrap();
        let u = ComplexField::from_fn(g, |_, _| Complex64::new(2.0, 0.0));
        let f = f_eval(&u, NonlinearityKind::monomial(3.0).unwrap()).unwrap();
        assert!(f.values().iter().all(|z| (z - Complex64::new(8.0, 0.0)).norm() < 1e-14));
        assert!(NonlinearityKind::monomial(1.0).is_err());
        assert!(NonlinearityKind::monomial(f64::NAN).is_err());
    }

    #[test]
    fn overflow_guard() {
        let g = GridSpec::square(16, 1.0).unwrap();
        let big = (OVERFLOW_LIMIT / ALPHA0).sqrt() * 1.001;
        let mut u = ComplexField::zeros(g);
        u.values_mut()[7] = Complex64::new(0.0, big);
        assert!(matches!(
            f_eval(&u, NonlinearityKind::ExponentialCritical),
            Err(Error::Overflow { .. })
        ));
        assert!(matches!(df_components(&u), Err(Error::Overflow { .. })));
        assert!(matches!(potential_density(&u, 1.0), Err(Error::Overflow { .. })));
        // Monomial has no exponential to overflow.
        assert!(f_eval(&u, NonlinearityKind::Monomial { p: 3.0 }).is_ok());
    }

    #[test]
    fn gauge_covariance() {
        let g = GridSpec::square(32, 10.0).unwrap();
        let u = gaussian(g, 0.6, 0.7);
        let rot = Complex64::from_polar(1.0, 1.234);
        let lhs = f_eval(&u.scaled(rot), NonlinearityKind::ExponentialCritical).unwrap();
        let rhs = f_eval(&u, NonlinearityKind::ExponentialCritical).unwrap().scaled(rot);
        for ((a, b), u) in lhs.values().iter().zip(rhs.values()).zip(u.values()) {
            let cond = 1.0 + ALPHA0 * u.norm_sqr();
            assert!((a - b).norm() <= 1e-15 * cond * b.norm());
        }
    }

    #[test]
    fn df_at_zero_and_identity() {
        let (a, b) = df_scalar(Complex64::new(0.0, 0.0));
        assert_eq!((a, b), (0.0, 0.0));
        for r in [0.01, 0.2, 0.5, 1.0] {
            let (a, b) = df_scalar(Complex64::new(r, 0.0));
            let expected = (ALPHA0 * r * r).exp_m1();
            assert!(((a - b) - expected).abs() < 1e-12 * (1.0 + a));
        }
    }

    fn chain_rule_error(u: &ComplexField) -> f64 {
        let g = *u.grid();
        let mut ws = SpectralWorkspace::new(g);
        let f = f_eval(u, NonlinearityKind::ExponentialCritical).unwrap();
        let (fx, fy) = ws.gradient(&f);
        let (ux, uy) = ws.gradient(u);
        let comps = df_components(u).unwrap();
        let cx = df_contract(u, &comps, &ux).unwrap();
        let cy = df_contract(u, &comps, &uy).unwrap();
        let num = (fx.sub(&cx).unwrap().mass() + fy.sub(&cy).unwrap().mass()).sqrt();
        let den = (fx.mass() + fy.mass()).sqrt();
        num / den
    }

    // f(u) carries modes up to |k| ≈ 20 for |u| ≈ 0.6; a 16π box at 256² aliases them.
    #[test]
    fn chain_rule_consistency_real_gaussian() {
        let g = GridSpec::square(256, 16.0).unwrap();
        let err = chain_rule_error(&gaussian(g, 0.6, 0.0));
        assert!(err < 1e-7, "relative L² error {err}");
    }

    #[test]
    fn chain_rule_consistency_with_phase() {
        let g = GridSpec::square(256, 16.0).unwrap();
        let err = chain_rule_error(&gaussian(g, 0.5, 0.8));
        assert!(err < 1e-7, "relative L² error {err}");
    }

    #[test]
    fn potential_density_basics() {
        let g = GridSpec::square(32, 8.0).unwrap();
        assert_eq!(potential_density(&ComplexField::zeros(g), 1.0).unwrap(), 0.0);
        let u = gaussian(g, 0.4, 0.3);
        assert_eq!(potential_density(&u, 0.0).unwrap(), 0.0);
        assert!(potential_density(&u, 1.0).unwrap() > 0.0);
    }

    #[test]
    fn potential_density_matches_refined_grid() {
        let l = 16.0 * PI;
        let coarse = GridSpec::square(256, l).unwrap();
        let fine = coarse.refined(4).unwrap();
        let a = potential_density(&gaussian(coarse, 0.5, 0.0), 1.0).unwrap();
        let b = potential_density(&gaussian(fine, 0.5, 0.0), 1.0).unwrap();
        assert!(((a - b) / b).abs() < 1e-8, "{a} vs {b}");
    }

    #[test]
    fn potential_density_matches_series() {
        // For A·e^{-|x|²/2}: (1/4)·Σ_{k≥2} (4πA²)^k / (k·k!).
        let g = GridSpec::square(256, 16.0 * PI).unwrap();
        let a: f64 = 0.35;
        let x = ALPHA0 * a * a;
        let mut term = 1.0;
        let mut series = 0.0;
        for k in 1..60 {
            term *= x / k as f64;
            if k >= 2 {
                series += term / k as f64;
            }
        }
        let expected = 0.25 * series;
        let got = potential_density(&gaussian(g, a, 0.0), 1.0).unwrap();
        assert!(((got - expected) / expected).abs() < 1e-10, "{got} vs {expected}");
    }

    #[test]
    fn expm1_minus_x_is_accurate_near_zero() {
        for &x in &[1e-8, 1e-4, 0.05, 0.099, 0.1, 0.5, 3.0] {
            let series: f64 = {
                let mut term = 1.0;
                let mut s = 0.0;
                for k in 1..40 {
                    term *= x / k as f64;
                    if k >= 2 {
                        s += term;
                    }
                }
                s
            };
            assert!(((expm1_minus_x(x) - series) / series).abs() < 1e-14, "x = {x}");
        }
    }

    #[test]
    fn lipschitz_ratio_examples() {
        let r = local_lipschitz_ratio(Complex64::new(0.1, 0.0), Complex64::new(-0.1, 0.0), 0.1).unwrap();
        assert!(r.is_finite() && r > 0.0);
        // Antipodal pair: ratio = (e^x − 1) / (2(e^{1.1x} − 1)), x = 0.04π.
        let x = ALPHA0 * 0.01;
        let expected = x.exp_m1() / (2.0 * (1.1 * x).exp_m1());
        assert!((r - expected).abs() < 1e-14);
        assert!(matches!(
            local_lipschitz_ratio(Complex64::new(0.3, 0.1), Complex64::new(0.3, 0.1), 0.1),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn lipschitz_ratio_limit_along_real_axis() {
        // u → v: ratio → |f'(r)| / (2(e^{4π(1+ε)r²} − 1)).
        let r: f64 = 0.3;
        let eps = 0.1;
        let (a, b) = df_scalar(Complex64::new(r, 0.0));
        let limit = (a + b) / (2.0 * (ALPHA0 * (1.0 + eps) * r * r).exp_m1());
        let q = local_lipschitz_ratio(Complex64::new(r + 1e-7, 0.0), Complex64::new(r, 0.0), eps).unwrap();
        assert!(limit.is_finite());
        assert!(((q - limit) / limit).abs() < 1e-5, "{q} vs {limit}");
    }

    #[test]
    fn lipschitz_ratio_is_phase_invariant() {
        let u = Complex64::new(0.4, -0.2);
        let v = Complex64::new(-0.1, 0.5);
        let rot = Complex64::from_polar(1.0, 2.1);
        let a = local_lipschitz_ratio(u, v, 0.1).unwrap();
        let b = local_lipschitz_ratio(u * rot, v * rot, 0.1).unwrap();
        assert!((a - b).abs() < 1e-13 * a);
    }

    #[test]
    fn empirical_lipschitz_max_is_stable() {
        let m1 = empirical_lipschitz_max(local_lipschitz_ratio, 100_000, 1.0, 0.1, 42);
        let m2 = empirical_lipschitz_max(local_lipschitz_ratio, 200_000, 1.0, 0.1, 42);
        assert!(m1.is_finite() && m1 > 0.0);
        assert!((m2 - m1).abs() <= 0.05 * m1, "{m1} vs {m2}");
    }

    #[test]
    fn empirical_df_lipschitz_max_is_finite() {
        let m1 = empirical_lipschitz_max(df_lipschitz_ratio, 100_000, 1.0, 0.1, 7);
        let m2 = empirical_lipschitz_max(df_lipschitz_ratio, 200_000, 1.0, 0.1, 7);
        assert!(m1.is_finite() && m1 > 0.0);
        assert!((m2 - m1).abs() <= 0.05 * m1, "{m1} vs {m2}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn potential_is_nonnegative(re in -0.8f64..0.8, im in -0.8f64..0.8, c in 0.0f64..3.0) {
                let g = GridSpec::square(16, 2.0).unwrap();
                let u = ComplexField::from_fn(g, |x, y| Complex64::new(re * x.cos(), im * y.sin()));
                prop_assert!(potential_density(&u, c).unwrap() >= 0.0);
            }

            #[test]
            fn f_is_gauge_covariant(re in -0.9f64..0.9, im in -0.9f64..0.9, phi in 0.0f64..6.3) {
                let u = Complex64::new(re, im);
                let rot = Complex64::from_polar(1.0, phi);
                let lhs = f_scalar(u * rot);
                let rhs = f_scalar(u) * rot;
                // Rounding in |u|² is amplified by the condition number 1 + 4π|u|² of g.
                let cond = 1.0 + ALPHA0 * u.norm_sqr();
                prop_assert!((lhs - rhs).norm() <= 1e-15 * cond * rhs.norm().max(f64::MIN_POSITIVE));
            }
        }
    }
}
