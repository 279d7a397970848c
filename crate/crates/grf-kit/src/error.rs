use thiserror::Error;

/// Errors produced by graph construction, kernel evaluation, estimation and
/// the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid generator parameters: {0}")]
    InvalidGeneratorSpec(String),

    #[error("edge-list parse error at line {line}: {message}")]
    EdgeListParse { line: usize, message: String },

    #[error("generation gave up after {attempts} attempts: {reason}")]
    GenerationExhausted { attempts: usize, reason: String },

    #[error("graph is disconnected: no path between vertices {0} and {1}")]
    Disconnected(usize, usize),

    #[error("matrix is not symmetric: max |A - A^T| = {0:.3e}")]
    NotSymmetric(f64),

    #[error("eigendecomposition failed to converge")]
    EigenFailed,

    #[error("invalid kernel parameters: {0}")]
    InvalidKernelSpec(String),

    #[error("kernel family {0} has no power-series form; use an estimable family")]
    UnsupportedSeriesFamily(String),

    #[error("modulation error: {0}")]
    Modulation(String),

    #[error("invalid walk configuration: {0}")]
    InvalidWalkConfig(String),

    #[error("invalid experiment spec: {0}")]
    InvalidExperimentSpec(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
