//! Configuration, the frequency sweep, inequality and averaging experiments,
//! and report emission.

pub mod config;
pub mod inequality_suite;
pub mod initial;
pub mod plots;
pub mod runs;
pub mod sweep;

pub use config::{DuhamelConfig, ExperimentConfig, Family, InequalityConfig, InitialData};
pub use inequality_suite::{run_inequality_suite, CaseRow, InequalityReport};
pub use initial::{build_initial_data, InitialField};
pub use plots::emit_plot_scripts;
pub use runs::{run_conservation_check, run_duhamel_experiment, run_simulation, ConservationRow, DuhamelRow, TraceSummary};
pub use sweep::{run_convergence_sweep, threads_from_env, ConvergenceReport, ConvergenceRow};
