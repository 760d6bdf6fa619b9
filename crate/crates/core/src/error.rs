use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("laurent symbol has no coefficients")]
    EmptySymbol,

    #[error("malformed operator: {0}")]
    MalformedOperator(String),

    #[error("cannot evaluate a laurent symbol at beta = 0")]
    ZeroBeta,

    #[error("chain of length {len} is shorter than the hopping range {range}")]
    ChainTooShort { len: usize, range: usize },

    #[error("site {0:?} is not part of the parent geometry")]
    SiteNotInGeometry(Vec<i64>),

    #[error("incompatible operands: {0}")]
    Incompatible(String),

    #[error("eigensolver failed to converge")]
    EigenNonConvergence,

    #[error("singular value decomposition failed to converge")]
    SvdNonConvergence,

    #[error("empty spectrum cloud")]
    EmptyCloud,

    #[error("omega = {omega} collides with an eigenvalue (distance {distance:e})")]
    SingularPotential { omega: Complex64, distance: f64 },

    #[error("omega = {omega} is numerically on the spectrum (condition estimate {condition:e})")]
    NearSpectrum { omega: Complex64, condition: f64 },

    #[error("omega = 0 is a branch point of the square root")]
    BranchPoint,

    #[error("fit window {0}")]
    FitWindow(String),

    #[error("equienergy line at E = {0} has no samples")]
    NoEquienergySolution(Complex64),

    #[error("omega = {omega} lies on the deformed Bloch set (min distance {distance:e})")]
    OnSpectrum { omega: Complex64, distance: f64 },

    #[error("mu = {mu:?} is not a valid deformation certificate: {reason}")]
    InvalidMuCertificate { mu: Vec<f64>, reason: String },

    #[error("time step {dt} exceeds the stability bound {bound}")]
    StepSize { dt: f64, bound: f64 },

    #[error("probe amplitude underflows inside the fit window")]
    AmplitudeUnderflow,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config: {0}")]
    Config(String),

    #[error("scenario {scenario}: {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
