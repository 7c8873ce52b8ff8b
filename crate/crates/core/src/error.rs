use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown activation `{0}`")]
    UnknownActivation(String),

    #[error("quadrature order {0} is below the minimum of {min}", min = crate::activation::MIN_QUAD_ORDER)]
    QuadOrder(usize),

    #[error("activation violates the monotone/non-trivial assumptions: {0}")]
    DegenerateActivation(String),

    #[error("correlation {0} is outside [-1, 1]")]
    CorrelationOutOfRange(f64),

    #[error("patch index {index} out of range for {k} patches")]
    PatchIndex { index: usize, k: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("xi must be positive, got {0}")]
    NonPositiveXi(f64),

    #[error("normalization of the first-layer update is degenerate (norm {0})")]
    DegenerateNormalization(f64),

    #[error("all moment vectors vanish; direction estimate is degenerate")]
    DegenerateEstimate,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("least-squares fit needs at least two finite points, got {0}")]
    Fit(usize),

    #[error("nothing to plot")]
    EmptyPlot,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: malformed CSV: {msg}")]
    CsvFormat { path: PathBuf, msg: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
