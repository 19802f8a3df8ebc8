use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model space: {0}")]
    InvalidSpace(String),

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("ambiguous geodesic between {p:?} and {q:?}")]
    AmbiguousGeodesic { p: Vec<f64>, q: Vec<f64> },

    #[error("radius {r} exceeds the injectivity guard {guard}")]
    RadiusTooLarge { r: f64, guard: f64 },

    #[error("degenerate quadruple: {0}")]
    DegenerateQuadruple(String),

    #[error("quadruple cannot be embedded in the K-plane: {0}")]
    Unembeddable(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("zero-length curve cannot be reparametrized")]
    ZeroLength,

    #[error("partition too coarse: replaced chord of length {length} exceeds rho = {rho}")]
    PartitionTooCoarse { length: f64, rho: f64 },

    #[error("curve is not in the piecewise-geodesic class: {0}")]
    NotInLambda(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable tag, used in the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSpace(_) => "invalid-space",
            Error::InvalidPoint(_) => "invalid-point",
            Error::AmbiguousGeodesic { .. } => "ambiguous-geodesic",
            Error::RadiusTooLarge { .. } => "radius-too-large",
            Error::DegenerateQuadruple(_) => "degenerate-quadruple",
            Error::Unembeddable(_) => "unembeddable",
            Error::InvalidCurve(_) => "invalid-curve",
            Error::ZeroLength => "zero-length",
            Error::PartitionTooCoarse { .. } => "partition-too-coarse",
            Error::NotInLambda(_) => "not-in-lambda",
            Error::Config(_) => "config",
            Error::Numerical(_) => "numerical",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
