use lagbatch_core::CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error("cannot load instance {name}")]
    Instance {
        name: String,
        #[source]
        source: CoreError,
    },
    #[error("i/o error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("nothing to report: {0}")]
    Empty(&'static str),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl BenchError {
    /// Errors the user fixes by editing the configuration.
    pub fn is_config(&self) -> bool {
        matches!(self, BenchError::Config(_) | BenchError::Instance { .. })
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// The error and all of its causes on one line.
pub fn error_chain(err: &dyn std::error::Error) -> String {
    let mut out = err.to_string();
    let mut cur = err.source();
    while let Some(e) = cur {
        out.push_str(": ");
        out.push_str(&e.to_string());
        cur = e.source();
    }
    out
}

pub type Result<T> = std::result::Result<T, BenchError>;
