use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    log_estimate_min_constant, moser_sequence, moser_trudinger_ratio, moser_trudinger_ratio_h1,
};
use crate::error::Result;
use crate::experiments::config::{ExperimentConfig, Family, InequalityConfig, InitialData};
use crate::experiments::initial::sample;
use crate::grid::{ComplexField, GridSpec};
use crate::spectral::SpectralWorkspace;
use crate::Complex64;

pub const MT_CSV: &str = "moser_trudinger.csv";
pub const MT_PROBE_CSV: &str = "moser_trudinger_probe.csv";
pub const MT_H1_CSV: &str = "moser_trudinger_h1.csv";
pub const LOG_CSV: &str = "log_estimate.csv";
pub const INEQUALITY_SUMMARY: &str = "inequalities_summary.json";

const GRADIENT_TARGETS: [f64; 6] = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
const MT_SIGMAS: [f64; 3] = [0.25, 0.35, 0.5];
const MT_RADII: [f64; 3] = [0.6, 1.0, 1.5];
const MOSER_TARGETS: [f64; 2] = [0.5, 1.0];
const LOG_SIGMAS: [f64; 3] = [0.5, 1.0, 2.0];
const LOG_RADII: [f64; 3] = [1.0, 2.0, 4.0];
/// Log-estimate boxes, in widths. The Hölder stencil spans a fixed number of
/// cells, so the box must be wide enough for it to reach the profile's worst
/// difference quotient (about 2σ for a Gaussian, under R/2 for a bump) on the
/// finest grid while the coarsest grid still resolves the profile.
const LOG_BOX_GAUSSIAN: f64 = 96.0;
const LOG_BOX_BUMP: f64 = 32.0;

/// One evaluated case. `value` is NaN when `error` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRow {
    pub family_member: String,
    pub alpha_or_lambda: f64,
    pub ratio_or_min_constant: f64,
    pub grid_size: usize,
    #[serde(default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    /// Trudinger–Moser ratios under `‖∇u‖ ≤ 1`.
    pub moser_trudinger: Vec<CaseRow>,
    /// Ratios along the Moser sequence above the sharp exponent.
    pub probe: Vec<CaseRow>,
    /// Ratios at `α = 4π` under `‖u‖_{H¹} ≤ 1`.
    pub h1_variant: Vec<CaseRow>,
    /// Minimal constants of the logarithmic `L^∞` estimate.
    pub log_estimate: Vec<CaseRow>,
}

impl InequalityReport {
    /// Largest successful value per grid size, in ascending grid order.
    pub fn max_by_grid(rows: &[CaseRow]) -> Vec<(usize, f64)> {
        let mut sizes: Vec<usize> = rows.iter().map(|r| r.grid_size).collect();
        sizes.sort_unstable();
        sizes.dedup();
        sizes
            .into_iter()
            .map(|n| {
                let m = rows
                    .iter()
                    .filter(|r| r.grid_size == n && r.error.is_none())
                    .map(|r| r.ratio_or_min_constant)
                    .fold(f64::NEG_INFINITY, f64::max);
                (n, m)
            })
            .collect()
    }

    pub fn failures(&self) -> usize {
        [&self.moser_trudinger, &self.probe, &self.h1_variant, &self.log_estimate]
            .iter()
            .flat_map(|v| v.iter())
            .filter(|r| r.error.is_some())
            .count()
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (name, rows) in [
            (MT_CSV, &self.moser_trudinger),
            (MT_PROBE_CSV, &self.probe),
            (MT_H1_CSV, &self.h1_variant),
            (LOG_CSV, &self.log_estimate),
        ] {
            write_rows(&dir.join(name), rows)?;
        }
        fs::write(dir.join(INEQUALITY_SUMMARY), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

fn write_rows(path: &Path, rows: &[CaseRow]) -> Result<()> {
    let mut wr = csv::Writer::from_path(path)?;
    wr.write_record(["family_member", "alpha_or_lambda", "ratio_or_min_constant", "grid_size", "error"])?;
    for r in rows {
        wr.write_record([
            r.family_member.clone(),
            r.alpha_or_lambda.to_string(),
            r.ratio_or_min_constant.to_string(),
            r.grid_size.to_string(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

fn case(member: &str, param: f64, n: usize, value: Result<f64>) -> CaseRow {
    let (v, error) = match value {
        Ok(v) => (v, None),
        Err(e) => (f64::NAN, Some(e.to_string())),
    };
    CaseRow {
        family_member: member.to_string(),
        alpha_or_lambda: param,
        ratio_or_min_constant: v,
        grid_size: n,
        error,
    }
}

/// Unnormalized member shape, named.
struct Member {
    name: String,
    build: Box<dyn Fn(GridSpec) -> Result<ComplexField>>,
    /// Gradient norms the shape is rescaled to.
    targets: Vec<f64>,
}

fn descriptor(d: InitialData) -> Box<dyn Fn(GridSpec) -> Result<ComplexField>> {
    Box::new(move |g| sample(&d, g))
}

fn mt_members(cfg: &InequalityConfig, seed: u64) -> Vec<Member> {
    let mut out = Vec::new();
    for family in &cfg.families {
        match family {
            Family::Gaussian => out.extend(MT_SIGMAS.iter().map(|&sigma| Member {
                name: format!("gaussian_s{sigma}"),
                build: descriptor(InitialData::Gaussian { amplitude: 1.0, sigma, center: [0.0, 0.0] }),
                targets: GRADIENT_TARGETS.to_vec(),
            })),
            Family::Bump => out.extend(MT_RADII.iter().map(|&radius| Member {
                name: format!("bump_r{radius}"),
                build: descriptor(InitialData::Bump { amplitude: 1.0, radius, center: [0.0, 0.0] }),
                targets: GRADIENT_TARGETS.to_vec(),
            })),
            Family::Moser => out.extend((2..=8).map(|n| Member {
                name: format!("moser_n{n}"),
                build: descriptor(InitialData::Moser { n, scale: 1.0 }),
                targets: MOSER_TARGETS.to_vec(),
            })),
            Family::Random => {}
        }
    }
    if cfg.families.contains(&Family::Random) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 0..cfg.random_members {
            let bumps: Vec<(f64, f64, f64, f64, f64)> = (0..3)
                .map(|_| {
                    (
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(0.25..0.6),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    )
                })
                .collect();
            let target = rng.gen_range(0.5..=1.0);
            out.push(Member {
                name: format!("random_{k}"),
                build: Box::new(move |g| {
                    Ok(ComplexField::from_fn(g, |x, y| {
                        bumps
                            .iter()
                            .map(|&(cx, cy, s, re, im)| {
                                let r2 = (x - cx).powi(2) + (y - cy).powi(2);
                                Complex64::new(re, im) * (-r2 / (2.0 * s * s)).exp()
                            })
                            .sum()
                    }))
                }),
                targets: vec![target],
            });
        }
    }
    out
}

fn rescaled(field: &ComplexField, current: f64, target: f64) -> ComplexField {
    field.scaled(Complex64::new(target / current, 0.0))
}

/// Trudinger–Moser family, its `H¹` variant and the Moser-sequence probe, then
/// minimal log-estimate constants over Gaussians and bumps, on every configured
/// grid size. Case failures are recorded in the rows.
pub fn run_inequality_suite(config: &ExperimentConfig) -> Result<InequalityReport> {
    let report = inequality_report(&config.inequalities, config.seed);
    report.save(&config.output_dir)?;
    Ok(report)
}

pub fn inequality_report(cfg: &InequalityConfig, seed: u64) -> InequalityReport {
    let mut report = InequalityReport::default();
    let members = mt_members(cfg, seed);
    for &n in &cfg.grid_sizes {
        let grid = match GridSpec::square(n, cfg.mt_box) {
            Ok(g) => g,
            Err(e) => {
                report.moser_trudinger.push(case("grid", cfg.alpha, n, Err(e)));
                continue;
            }
        };
        let mut ws = SpectralWorkspace::new(grid);
        for m in &members {
            let shape = match (m.build)(grid) {
                Ok(s) => s,
                Err(e) => {
                    report.moser_trudinger.push(case(&m.name, cfg.alpha, n, Err(e)));
                    continue;
                }
            };
            let grad = ws.grad_l2(&shape);
            for &target in &m.targets {
                let u = rescaled(&shape, grad, target);
                let name = format!("{}_g{target}", m.name);
                let ratio = moser_trudinger_ratio(&mut ws, &u, cfg.alpha);
                report.moser_trudinger.push(case(&name, cfg.alpha, n, ratio));
            }
            let h1 = ws.norm_h1(&shape);
            let u = rescaled(&shape, h1, 1.0);
            let ratio = moser_trudinger_ratio_h1(&mut ws, &u, 4.0 * PI);
            report.h1_variant.push(case(&m.name, 4.0 * PI, n, ratio));
        }
        if cfg.families.contains(&Family::Moser) {
            for &k in &cfg.probe_n {
                let ratio = moser_sequence(k, grid).and_then(|s| {
                    let g = ws.grad_l2(&s);
                    moser_trudinger_ratio(&mut ws, &rescaled(&s, g, 1.0), cfg.alpha_probe)
                });
                report.probe.push(case(&format!("moser_n{k}"), cfg.alpha_probe, n, ratio));
            }
        }
    }

    let mut log_members: Vec<(String, f64, InitialData)> = Vec::new();
    if cfg.families.contains(&Family::Gaussian) {
        log_members.extend(LOG_SIGMAS.iter().map(|&sigma| {
            (format!("gaussian_s{sigma}"), LOG_BOX_GAUSSIAN * sigma, InitialData::Gaussian { amplitude: 1.0, sigma, center: [0.0, 0.0] })
        }));
    }
    if cfg.families.contains(&Family::Bump) {
        log_members.extend(LOG_RADII.iter().map(|&radius| {
            (format!("bump_r{radius}"), LOG_BOX_BUMP * radius, InitialData::Bump { amplitude: 1.0, radius, center: [0.0, 0.0] })
        }));
    }
    for &n in &cfg.grid_sizes {
        for (name, side, d) in &log_members {
            let value = GridSpec::square(n, *side).and_then(|g| {
                let u = sample(d, g)?;
                let mut ws = SpectralWorkspace::new(g);
                log_estimate_min_constant(&mut ws, &u, cfg.lambda, cfg.mu, cfg.beta)
            });
            report.log_estimate.push(case(name, cfg.lambda, n, value));
        }
    }
    report
}
