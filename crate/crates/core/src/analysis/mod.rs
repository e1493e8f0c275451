//! Space-time norms, inequality checks, the averaging gap of the Duhamel term,
//! criticality of initial data, and two elementary real-variable lemmas.

pub mod criticality;
pub mod duhamel;
pub mod inequalities;
pub mod lemmas;
pub mod strichartz;

pub use criticality::{criticality_classify, Criticality, CriticalityClass};
pub use duhamel::{duhamel_gap, SampledSource};
pub use inequalities::{
    log_estimate_deficit, log_estimate_min_constant, moser_sequence, moser_trudinger_ratio,
    moser_trudinger_ratio_h1,
};
pub use lemmas::{continuity_bound, partition_interval, PartitionResult};
pub use strichartz::{time_space_norm, AdmissiblePair};
