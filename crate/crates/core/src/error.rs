use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("density evaluated at the singular point z = 0")]
    SingularPoint,
    #[error("tabulated density queried at radius {radius} outside table range [{lo}, {hi}]")]
    Extrapolation { radius: f64, lo: f64, hi: f64 },
    #[error("invalid value at `{path}`: {message}")]
    Validation { path: String, message: String },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("first moment diverges on B_{r}: {detail}")]
    DivergingMoment { r: f64, detail: String },
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("density is not of bounded variation on the requested annulus: {0}")]
    UnboundedVariation(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("radius search failed: {0}")]
    SearchFailure(String),
    #[error("radii sequence exhausted: {0}")]
    NeedsMoreRadii(String),
    #[error("unsupported kernel: {0}")]
    Unsupported(String),
    #[error("assembly failed for basis pair ({i}, {j}): {message}")]
    Assembly { i: usize, j: usize, message: String },
    #[error("linear system is singular or near resonance: {0}")]
    NearResonance(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation { path: path.into(), message: message.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
