//! Experiment harness: runs method matrices over instance sets, records
//! lower-bound trajectories and turns them into gap-closed profiles and
//! summary tables.

pub mod certify;
pub mod config;
pub mod error;
pub mod experiment;
pub mod profile;
pub mod report;

pub use config::{desk_suite, parse_method_name, ExperimentConfig, InstanceSource, MethodSpec};
pub use error::{BenchError, Result};
pub use experiment::{run_experiment, Manifest, Results, RunRecord};
pub use profile::{gap_closed_profile, rho_at, LabeledTrajectory, ProfilePoint};
pub use report::{emit_profiles, emit_report};
