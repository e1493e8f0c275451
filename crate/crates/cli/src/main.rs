use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use osnls::experiments::{
    emit_plot_scripts, run_conservation_check, run_convergence_sweep, run_duhamel_experiment,
    run_inequality_suite, run_simulation, threads_from_env, ExperimentConfig, InequalityReport,
};
use osnls::{Error, RunStatus};

#[derive(Parser)]
#[command(name = "osnls", version, about = "Oscillating-coefficient exponential NLS experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single run: diagnostics CSV, trace summary and final checkpoint.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Frequency sweep against the averaged equation; writes convergence.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Trudinger–Moser and logarithmic L∞ inequality suites.
    VerifyInequalities {
        #[arg(long)]
        config: PathBuf,
    },
    /// Averaging gap of the Duhamel term; writes duhamel_gap.csv.
    DuhamelGap {
        #[arg(long)]
        config: PathBuf,
    },
    /// Mass and Hamiltonian drift table; writes conservation.csv.
    CheckConservation {
        #[arg(long)]
        config: PathBuf,
    },
    /// Emit gnuplot scripts for a report CSV or a sweep output directory.
    Plots {
        #[arg(long)]
        report: PathBuf,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_IO: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Csv(_) | Error::MissingReport(_) | Error::Checkpoint(_) => EXIT_IO,
        Error::NonFinite | Error::Overflow { .. } | Error::NumericalFailure(_) => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, Error> {
    let text = std::fs::read_to_string(path)?;
    ExperimentConfig::from_json(&text)
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = load(&config)?;
            let out = out.unwrap_or_else(|| cfg.output_dir.clone());
            let s = run_simulation(&cfg, &out)?;
            println!(
                "status {} frames {} H(u0) {} mass drift {:e} hamiltonian drift {:e} sup grad {}",
                s.status.label(),
                s.saved_frames,
                s.initial.hamiltonian,
                s.max_relative_mass_drift,
                s.max_hamiltonian_drift,
                s.sup_grad
            );
            if matches!(s.status, RunStatus::BlownUp { .. }) {
                return Ok(EXIT_NUMERICAL);
            }
        }
        Command::Sweep { config } => {
            let cfg = load(&config)?;
            let report = run_convergence_sweep(&cfg, threads_from_env())?;
            for r in &report.rows {
                println!(
                    "omega {} sup_h1_gap {} sup_grad {} {}",
                    r.omega,
                    r.sup_h1_gap,
                    r.sup_grad,
                    r.status.label()
                );
            }
            match report.fitted_rate {
                Some(rate) => println!("fitted rate {rate}"),
                None => println!("fitted rate unavailable"),
            }
            if report.all_failed() {
                eprintln!("every frequency run failed");
                return Ok(EXIT_NUMERICAL);
            }
        }
        Command::VerifyInequalities { config } => {
            let cfg = load(&config)?;
            let rep = run_inequality_suite(&cfg)?;
            for (label, rows) in [
                ("moser-trudinger", &rep.moser_trudinger),
                ("moser-trudinger h1", &rep.h1_variant),
                ("log estimate", &rep.log_estimate),
            ] {
                for (n, max) in InequalityReport::max_by_grid(rows) {
                    println!("{label} grid {n}: max {max}");
                }
            }
            for r in &rep.probe {
                println!("probe {} grid {}: {}", r.family_member, r.grid_size, r.ratio_or_min_constant);
            }
            println!("{} case failures", rep.failures());
        }
        Command::DuhamelGap { config } => {
            let cfg = load(&config)?;
            for r in run_duhamel_experiment(&cfg)? {
                println!("omega {} pair {} gap {}", r.omega, r.pair, r.gap);
            }
        }
        Command::CheckConservation { config } => {
            let cfg = load(&config)?;
            for r in run_conservation_check(&cfg, threads_from_env())? {
                println!(
                    "{} mass drift {:e} hamiltonian drift {:e} {}",
                    r.label,
                    r.max_rel_mass_drift,
                    r.max_hamiltonian_drift,
                    r.status.label()
                );
            }
        }
        Command::Plots { report } => {
            for p in emit_plot_scripts(&report)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
