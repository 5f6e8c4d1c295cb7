use lagbatch_milp::MilpError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("malformed instance: {0}")]
    Malformed(String),
    #[error("scenario index {index} out of range ({count} scenarios)")]
    ScenarioIndex { index: usize, count: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("second stage of scenario {scenario} is infeasible at the given first-stage point")]
    SubproblemInfeasible { scenario: usize },
    #[error("second stage of scenario {scenario} is unbounded")]
    SubproblemUnbounded { scenario: usize },
    #[error("dual vector is outside the dual polyhedron of scenario {scenario}: {reason}")]
    DualInfeasible { scenario: usize, reason: String },
    #[error("feasible set of scenario {scenario} is empty")]
    ScenarioInfeasible { scenario: usize },
    #[error("relaxed master problem is {0}")]
    Master(String),
    #[error("scenario {scenario} has no Benders cut to span a restricted subspace; run the Benders phase first")]
    EmptyPool { scenario: usize },
    #[error("separation domain is empty: {0}")]
    EmptyDomain(String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("averaging needs cuts with pi0 = 1, found pi0 = {0}")]
    MixedPi0(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("instance exceeds the {0}")]
    ScaleGuard(String),
    #[error("solver reported {0}")]
    SolverStatus(String),
    #[error(transparent)]
    Solver(#[from] MilpError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error in {path} at line {line}, column {column}: {message}")]
    Schema {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, CoreError>;
