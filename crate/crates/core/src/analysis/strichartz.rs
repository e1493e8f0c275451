use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::integrator::Frame;
use crate::spectral::SpectralWorkspace;

/// Exponents with `2/q + 2/r = 1`, `q ∈ (2, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissiblePair {
    q: f64,
    r: f64,
}

impl AdmissiblePair {
    pub fn new(q: f64) -> Result<Self> {
        if q.is_nan() || q <= 2.0 {
            return Err(Error::InvalidParams(format!("admissible q must exceed 2, got {q}")));
        }
        let r = if q.is_infinite() { 2.0 } else { 2.0 * q / (q - 2.0) };
        Ok(AdmissiblePair { q, r })
    }

    pub fn endpoint() -> Self {
        AdmissiblePair { q: f64::INFINITY, r: 2.0 }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Column label such as `q4_r4` or `qinf_r2`.
    pub fn label(&self) -> String {
        format!("q{}_r{}", fmt_exp(self.q), fmt_exp(self.r))
    }
}

fn fmt_exp(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else if v.fract() == 0.0 {
        format!("{}", v as i64)
    } else {
        format!("{v:.4}").trim_end_matches('0').to_string()
    }
}

impl fmt::Display for AdmissiblePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", fmt_exp(self.q), fmt_exp(self.r))
    }
}

/// Serialized as `q` alone: a number, or the string `"inf"`.
impl Serialize for AdmissiblePair {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.q.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.q)
        }
    }
}

impl<'de> Deserialize<'de> for AdmissiblePair {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Q {
            Num(f64),
            Str(String),
        }
        let q = match Q::deserialize(d)? {
            Q::Num(q) => q,
            Q::Str(s) if s == "inf" => f64::INFINITY,
            Q::Str(s) => return Err(serde::de::Error::custom(format!("bad exponent {s:?}"))),
        };
        AdmissiblePair::new(q).map_err(serde::de::Error::custom)
    }
}

/// `(∫ v(t)^q dt)^{1/q}` by the composite trapezoid rule on possibly uneven
/// `times`; `max v` for `q = ∞`.
pub fn lq_in_time(times: &[f64], values: &[f64], q: f64) -> Result<f64> {
    assert_eq!(times.len(), values.len());
    if q.is_infinite() {
        if values.is_empty() {
            return Err(Error::InsufficientFrames { needed: 1, got: 0 });
        }
        return Ok(values.iter().copied().fold(0.0, f64::max));
    }
    if values.len() < 2 {
        return Err(Error::InsufficientFrames {
            needed: 2,
            got: values.len(),
        });
    }
    let integral: f64 = times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0].powf(q) + v[1].powf(q)))
        .sum();
    Ok(integral.powf(1.0 / q))
}

/// Spatial norm used inside a space-time norm.
pub fn spatial_norm(
    ws: &mut SpectralWorkspace,
    field: &crate::ComplexField,
    r: f64,
    with_derivatives: bool,
) -> f64 {
    if with_derivatives {
        ws.norm_w1r(field, r)
    } else {
        field.norm_lp(r)
    }
}

/// `‖u‖_{L^q_t X}` over saved frames, `X = W^{1,r}` or `L^r`.
pub fn time_space_norm(
    ws: &mut SpectralWorkspace,
    frames: &[Frame],
    pair: AdmissiblePair,
    with_derivatives: bool,
) -> Result<f64> {
    let times: Vec<f64> = frames.iter().map(|f| f.time).collect();
    let values: Vec<f64> = frames
        .iter()
        .map(|f| spatial_norm(ws, &f.field, pair.r, with_derivatives))
        .collect();
    lq_in_time(&times, &values, pair.q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Complex64, ComplexField, GridSpec};

    #[test]
    fn pairs_satisfy_scaling() {
        for q in [4.0, 6.0, 8.0, f64::INFINITY] {
            let p = AdmissiblePair::new(q).unwrap();
            assert_eq!(2.0 / p.q() + 2.0 / p.r(), 1.0, "q = {q}");
        }
        assert_eq!(AdmissiblePair::new(4.0).unwrap().r(), 4.0);
        assert_eq!(AdmissiblePair::new(f64::INFINITY).unwrap(), AdmissiblePair::endpoint());
        assert!(AdmissiblePair::new(2.0).is_err());
        assert!(AdmissiblePair::new(f64::NAN).is_err());
    }

    #[test]
    fn labels_and_json() {
        assert_eq!(AdmissiblePair::new(4.0).unwrap().label(), "q4_r4");
        assert_eq!(AdmissiblePair::endpoint().label(), "qinf_r2");
        assert_eq!(AdmissiblePair::new(6.0).unwrap().label(), "q6_r3");
        let v: Vec<AdmissiblePair> = serde_json::from_str(r#"[4, "inf", 6]"#).unwrap();
        assert_eq!(v[1], AdmissiblePair::endpoint());
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"[4.0,"inf",6.0]"#);
        assert!(serde_json::from_str::<AdmissiblePair>("1.5").is_err());
        assert!(serde_json::from_str::<AdmissiblePair>(r#""infinity""#).is_err());
    }

    fn frames(n: usize, t_end: f64, mut f: impl FnMut(f64) -> ComplexField) -> Vec<Frame> {
        (0..n)
            .map(|k| {
                let t = t_end * k as f64 / (n - 1) as f64;
                Frame { time: t, field: f(t) }
            })
            .collect()
    }

    #[test]
    fn trivial_cases() {
        let g = GridSpec::square(16, 2.0).unwrap();
        let c = ComplexField::from_fn(g, |_, _| Complex64::new(1.5, 0.0));
        let mut ws = SpectralWorkspace::new(g);
        let one = vec![Frame { time: 0.0, field: c.clone() }];
        let inf = AdmissiblePair::endpoint();
        let n = time_space_norm(&mut ws, &one, inf, false).unwrap();
        assert!((n - c.norm_l2()).abs() < 1e-14);
        let p4 = AdmissiblePair::new(4.0).unwrap();
        assert!(matches!(
            time_space_norm(&mut ws, &one, p4, false),
            Err(Error::InsufficientFrames { needed: 2, got: 1 })
        ));
        let many = frames(11, 2.0, |_| c.clone());
        let n = time_space_norm(&mut ws, &many, p4, true).unwrap();
        let expected = 2f64.powf(0.25) * ws.norm_w14(&c);
        assert!((n - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn free_gaussian_frame_sampling_converges() {
        let g = GridSpec::square(64, 16.0).unwrap();
        let u0 = ComplexField::from_fn(g, |x, y| Complex64::new((-(x * x + y * y) / 2.0).exp(), 0.0));
        let mut ws = SpectralWorkspace::new(g);
        let p4 = AdmissiblePair::new(4.0).unwrap();
        let mut run = |n: usize| {
            let mut prop = SpectralWorkspace::new(g);
            let fr = frames(n, 1.0, |t| prop.free_propagator(&u0, t));
            time_space_norm(&mut ws, &fr, p4, true).unwrap()
        };
        let coarse = run(65);
        let dense = run(641);
        assert!((coarse - dense).abs() / dense < 1e-4, "{coarse} vs {dense}");
    }
}
