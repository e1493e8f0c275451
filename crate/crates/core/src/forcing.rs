//! Periodic forcing profiles `θ` and their exact or Gauss–Legendre integrals.

use std::f64::consts::PI;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Complex64;

/// Minimum number of composite Gauss–Legendre panels over one period.
pub const AVERAGE_PANELS: usize = 64;

/// Panels may not be wider than `τ / MAX_PANEL_DIVISOR`.
pub const MAX_PANEL_DIVISOR: f64 = 16.0;

// 4-point Gauss–Legendre on [-1, 1].
const GL_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_86,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_86,
];

fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let w = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let mid = a + (p as f64 + 0.5) * w;
            GL_NODES
                .iter()
                .zip(GL_WEIGHTS)
                .map(|(x, wt)| wt * f(mid + 0.5 * w * x))
                .sum::<f64>()
                * 0.5
                * w
        })
        .sum()
}

/// Serialized form of a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThetaSpec {
    Constant { c: f64 },
    SineAffine { lambda0: f64, lambda1: f64, tau: f64 },
    Tabulated { tau: f64, samples: Vec<f64> },
}

/// A `τ`-periodic `C¹` profile `θ(s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ThetaSpec", into = "ThetaSpec")]
pub enum ThetaProfile {
    Constant(f64),
    /// `λ0 + λ1·sin(2πs/τ)`
    SineAffine { lambda0: f64, lambda1: f64, tau: f64 },
    TabulatedPeriodic(PeriodicSpline),
}

impl TryFrom<ThetaSpec> for ThetaProfile {
    type Error = Error;

    fn try_from(spec: ThetaSpec) -> Result<Self> {
        match spec {
            ThetaSpec::Constant { c } => ThetaProfile::constant(c),
            ThetaSpec::SineAffine {
                lambda0,
                lambda1,
                tau,
            } => ThetaProfile::sine_affine(lambda0, lambda1, tau),
            ThetaSpec::Tabulated { tau, samples } => ThetaProfile::tabulated(tau, samples),
        }
    }
}

impl From<ThetaProfile> for ThetaSpec {
    fn from(p: ThetaProfile) -> Self {
        match p {
            ThetaProfile::Constant(c) => ThetaSpec::Constant { c },
            ThetaProfile::SineAffine {
                lambda0,
                lambda1,
                tau,
            } => ThetaSpec::SineAffine {
                lambda0,
                lambda1,
                tau,
            },
            ThetaProfile::TabulatedPeriodic(s) => ThetaSpec::Tabulated {
                tau: s.tau,
                samples: s.y,
            },
        }
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidProfile(format!("period tau = {tau} must be positive")));
    }
    Ok(())
}

impl ThetaProfile {
    pub fn constant(c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::InvalidProfile("constant must be finite".into()));
        }
        Ok(ThetaProfile::Constant(c))
    }

    pub fn sine_affine(lambda0: f64, lambda1: f64, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        if !(lambda0.is_finite() && lambda1.is_finite()) {
            return Err(Error::InvalidProfile("coefficients must be finite".into()));
        }
        Ok(ThetaProfile::SineAffine {
            lambda0,
            lambda1,
            tau,
        })
    }

    pub fn tabulated(tau: f64, samples: Vec<f64>) -> Result<Self> {
        PeriodicSpline::new(tau, samples).map(ThetaProfile::TabulatedPeriodic)
    }

    /// Period; `None` for a constant profile.
    pub fn period(&self) -> Option<f64> {
        match self {
            ThetaProfile::Constant(_) => None,
            ThetaProfile::SineAffine { tau, .. } => Some(*tau),
            ThetaProfile::TabulatedPeriodic(s) => Some(s.tau),
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            ThetaProfile::Constant(c) => c,
            ThetaProfile::SineAffine {
                lambda0,
                lambda1,
                tau,
            } => lambda0 + lambda1 * (2.0 * PI * s.rem_euclid(tau) / tau).sin(),
            ThetaProfile::TabulatedPeriodic(ref sp) => sp.eval(s),
        }
    }

    /// `I(θ) = (1/τ)∫₀^τ θ`.
    pub fn average(&self) -> f64 {
        match *self {
            ThetaProfile::Constant(c) => c,
            ThetaProfile::SineAffine { lambda0, .. } => lambda0,
            ThetaProfile::TabulatedPeriodic(ref sp) => sp.period_integral / sp.tau,
        }
    }

    /// Whether the average is nonnegative, the regime the averaging result covers.
    pub fn has_nonnegative_average(&self) -> bool {
        self.average() >= 0.0
    }

    /// Signed `∫_{s1}^{s2} θ(s) ds`.
    pub fn integral(&self, s1: f64, s2: f64) -> f64 {
        match *self {
            ThetaProfile::Constant(c) => c * (s2 - s1),
            ThetaProfile::SineAffine {
                lambda0,
                lambda1,
                tau,
            } => {
                // cos A − cos B = 2 sin((A+B)/2) sin((B−A)/2), no cancellation for short windows.
                let mid = (PI * (s1 + s2) / tau).rem_euclid(2.0 * PI);
                let half = PI * (s2 - s1) / tau;
                lambda0 * (s2 - s1) + lambda1 * tau / PI * mid.sin() * half.sin()
            }
            ThetaProfile::TabulatedPeriodic(ref sp) => sp.antiderivative(s2) - sp.antiderivative(s1),
        }
    }

    /// `∫_{t0}^{t1} θ(ω s) ds`, reduced to a `θ`-integral so the accuracy does not depend on `ω`.
    pub fn time_integral(&self, omega: f64, t0: f64, t1: f64) -> f64 {
        match *self {
            ThetaProfile::Constant(c) => c * (t1 - t0),
            _ if omega == 0.0 => self.eval(0.0) * (t1 - t0),
            _ => self.integral(omega * t0, omega * t1) / omega,
        }
    }
}

/// Periodic cubic spline through equispaced samples on `[0, τ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSpline {
    tau: f64,
    h: f64,
    y: Vec<f64>,
    // Second derivatives at the knots.
    m: Vec<f64>,
    // ∫₀^{x_j} of the spline, j = 0..=n.
    cumulative: Vec<f64>,
    period_integral: f64,
}

impl PeriodicSpline {
    pub fn new(tau: f64, y: Vec<f64>) -> Result<Self> {
        check_tau(tau)?;
        let n = y.len();
        if n < 4 {
            return Err(Error::InvalidProfile(format!(
                "tabulated profile needs at least 4 samples, got {n}"
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile("samples must be finite".into()));
        }
        let h = tau / n as f64;
        let m = solve_circulant_moments(&y, h);
        let mut spline = PeriodicSpline {
            tau,
            h,
            y,
            m,
            cumulative: Vec::with_capacity(n + 1),
            period_integral: 0.0,
        };
        let panels = AVERAGE_PANELS
            .div_ceil(n)
            .max((h / (tau / MAX_PANEL_DIVISOR)).ceil() as usize)
            .max(1);
        let mut acc = 0.0;
        spline.cumulative.push(0.0);
        for j in 0..n {
            acc += gauss_legendre(|t| spline.local(j, t), 0.0, h, panels);
            spline.cumulative.push(acc);
        }
        spline.period_integral = acc;
        Ok(spline)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn samples(&self) -> &[f64] {
        &self.y
    }

    /// Cubic on knot interval `j`, at offset `t ∈ [0, h]`.
    fn local(&self, j: usize, t: f64) -> f64 {
        let n = self.y.len();
        let j1 = (j + 1) % n;
        let b = t / self.h;
        let a = 1.0 - b;
        a * self.y[j]
            + b * self.y[j1]
            + ((a * a * a - a) * self.m[j] + (b * b * b - b) * self.m[j1]) * self.h * self.h / 6.0
    }

    fn locate(&self, s: f64) -> (f64, usize, f64) {
        let periods = (s / self.tau).floor();
        let sigma = s - periods * self.tau;
        let n = self.y.len();
        let j = ((sigma / self.h).floor() as usize).min(n - 1);
        (periods, j, (sigma - j as f64 * self.h).max(0.0))
    }

    pub fn eval(&self, s: f64) -> f64 {
        let (_, j, t) = self.locate(s);
        self.local(j, t)
    }

    /// `∫₀^s` of the spline.
    fn antiderivative(&self, s: f64) -> f64 {
        let (periods, j, t) = self.locate(s);
        let max_w = self.tau / MAX_PANEL_DIVISOR;
        let panels = ((t / max_w).ceil() as usize).max(1);
        let partial = gauss_legendre(|x| self.local(j, x), 0.0, t, panels);
        periods * self.period_integral + self.cumulative[j] + partial
    }
}

/// Solves `(h/6)(M_{j-1} + 4M_j + M_{j+1}) = (y_{j+1} − 2y_j + y_{j-1})/h` (periodic)
/// by diagonalizing the circulant matrix with an FFT.
fn solve_circulant_moments(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut rhs: Vec<Complex64> = (0..n)
        .map(|j| {
            let d = (y[(j + 1) % n] - 2.0 * y[j] + y[(j + n - 1) % n]) / h;
            Complex64::new(d, 0.0)
        })
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut rhs);
    for (k, z) in rhs.iter_mut().enumerate() {
        let eig = h / 6.0 * (4.0 + 2.0 * (2.0 * PI * k as f64 / n as f64).cos());
        *z /= eig;
    }
    planner.plan_fft_inverse(n).process(&mut rhs);
    rhs.iter().map(|z| z.re / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine_table(lambda0: f64, lambda1: f64, tau: f64, n: usize) -> ThetaProfile {
        let samples = (0..n)
            .map(|j| lambda0 + lambda1 * (2.0 * PI * j as f64 / n as f64).sin())
            .collect();
        ThetaProfile::tabulated(tau, samples).unwrap()
    }

    #[test]
    fn eval_examples() {
        let c = ThetaProfile::constant(2.0).unwrap();
        assert_eq!(c.eval(-13.7), 2.0);
        let s = ThetaProfile::sine_affine(1.0, 0.5, 2.0 * PI).unwrap();
        assert!((s.eval(0.0) - 1.0).abs() < 1e-15);
        assert!((s.eval(PI / 2.0) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn eval_is_periodic() {
        let profiles = [
            ThetaProfile::sine_affine(0.3, 2.0, 1.7).unwrap(),
            sine_table(1.0, 1.0, 3.0, 12),
        ];
        for p in &profiles {
            let tau = p.period().unwrap();
            for s in [-2.3, 0.0, 0.41, 5.9] {
                assert!((p.eval(s + tau) - p.eval(s)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn averages() {
        assert_eq!(ThetaProfile::constant(-0.7).unwrap().average(), -0.7);
        assert_eq!(ThetaProfile::sine_affine(0.4, 9.0, 3.0).unwrap().average(), 0.4);
        let t = sine_table(1.25, 0.8, 2.0 * PI, 10);
        assert!((t.average() - 1.25).abs() < 1e-10);
        assert!(!ThetaProfile::constant(-1.0).unwrap().has_nonnegative_average());
    }

    #[test]
    fn integral_examples() {
        let s = ThetaProfile::sine_affine(0.0, 1.0, 2.0 * PI).unwrap();
        assert!((s.integral(0.0, PI) - 2.0).abs() < 1e-14);
        let c = ThetaProfile::constant(3.0).unwrap();
        assert!((c.integral(1.0, 2.5) - 4.5).abs() < 1e-15);
        for p in [s, sine_table(0.5, 1.0, 1.3, 7)] {
            let tau = p.period().unwrap();
            assert!((p.integral(0.0, tau) - tau * p.average()).abs() < 1e-12);
        }
    }

    #[test]
    fn spline_interpolates_and_tracks_smooth_profile() {
        let tau = 2.0;
        let n = 64;
        let t = sine_table(1.0, 0.5, tau, n);
        let exact = ThetaProfile::sine_affine(1.0, 0.5, tau).unwrap();
        for j in 0..n {
            let s = j as f64 * tau / n as f64;
            assert!((t.eval(s) - exact.eval(s)).abs() < 1e-14);
        }
        for k in 0..200 {
            let s = k as f64 * 0.0137;
            assert!((t.eval(s) - exact.eval(s)).abs() < 1e-5);
        }
        assert!((t.integral(0.2, 1.1) - exact.integral(0.2, 1.1)).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_profiles() {
        assert!(ThetaProfile::sine_affine(1.0, 1.0, 0.0).is_err());
        assert!(ThetaProfile::tabulated(1.0, vec![1.0, 2.0, 3.0]).is_err());
        assert!(ThetaProfile::tabulated(-1.0, vec![1.0; 8]).is_err());
        assert!(ThetaProfile::constant(f64::INFINITY).is_err());
    }

    #[test]
    fn json_round_trip() {
        let p: ThetaProfile =
            serde_json::from_str(r#"{"kind":"sine_affine","lambda0":1,"lambda1":0.5,"tau":6.5}"#).unwrap();
        assert_eq!(p, ThetaProfile::sine_affine(1.0, 0.5, 6.5).unwrap());
        let p: ThetaProfile = serde_json::from_str(r#"{"kind":"constant","c":2}"#).unwrap();
        assert_eq!(p, ThetaProfile::Constant(2.0));
        let t: ThetaProfile =
            serde_json::from_str(r#"{"kind":"tabulated","tau":1,"samples":[0,1,0,-1]}"#).unwrap();
        let back: ThetaProfile = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(t, back);
        assert!(serde_json::from_str::<ThetaProfile>(r#"{"kind":"constant","c":2,"x":1}"#).is_err());
        assert!(serde_json::from_str::<ThetaProfile>(r#"{"kind":"tabulated","tau":1,"samples":[0,1]}"#).is_err());
    }

    #[test]
    fn time_integral_substitution() {
        let p = ThetaProfile::sine_affine(1.0, 1.0, 2.0 * PI).unwrap();
        // ∫_0^T (1 + sin(ωs)) ds = T + (1 − cos ωT)/ω
        let (omega, t) = (128.0f64, 0.37f64);
        let expected = t + (1.0 - (omega * t).cos()) / omega;
        assert!((p.time_integral(omega, 0.0, t) - expected).abs() < 1e-14);
        assert!((p.time_integral(0.0, 0.0, t) - t).abs() < 1e-15);
        assert!((p.time_integral(-omega, 0.0, t) - (t - (1.0 - (omega * t).cos()) / omega)).abs() < 1e-14);
        let c = ThetaProfile::constant(0.5).unwrap();
        assert_eq!(c.time_integral(64.0, 0.1, 0.3), 0.5 * (0.3 - 0.1));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn profiles() -> Vec<ThetaProfile> {
            vec![
                ThetaProfile::constant(1.7).unwrap(),
                ThetaProfile::sine_affine(1.0, 1.0, 2.0 * PI).unwrap(),
                ThetaProfile::sine_affine(-0.2, 3.0, 0.7).unwrap(),
                ThetaProfile::tabulated(1.5, vec![0.0, 2.0, 1.0, -1.0, 0.5, 3.0]).unwrap(),
            ]
        }

        proptest! {
            #[test]
            fn additivity(a in -20.0f64..20.0, d1 in 0.0f64..10.0, d2 in 0.0f64..10.0) {
                for p in profiles() {
                    let (b, c) = (a + d1, a + d1 + d2);
                    let lhs = p.integral(a, b) + p.integral(b, c);
                    prop_assert!((lhs - p.integral(a, c)).abs() < 1e-12);
                }
            }

            #[test]
            fn periodic_shift(a in -20.0f64..20.0, d in 0.0f64..10.0) {
                for p in profiles() {
                    if let Some(tau) = p.period() {
                        let lhs = p.integral(a + tau, a + d + tau);
                        prop_assert!((lhs - p.integral(a, a + d)).abs() < 1e-12);
                    }
                }
            }
        }

        #[test]
        fn average_matches_period_integral() {
            for p in profiles() {
                if let Some(tau) = p.period() {
                    assert!((p.average() - p.integral(0.0, tau) / tau).abs() < 1e-12);
                }
            }
        }
    }
}
