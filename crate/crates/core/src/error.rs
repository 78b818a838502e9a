use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: endpoint {index} out of range for {n} buses")]
    EndpointOutOfRange { line: usize, index: usize, n: usize },

    #[error("line {line}: endpoints must be distinct (both are {index})")]
    SelfLoop { line: usize, index: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("bus {bus}: {what} must be strictly positive, got {value}")]
    NonPositive { bus: usize, what: &'static str, value: f64 },

    #[error("network file must contain exactly one of \"laplacian\" or \"lines\"")]
    LaplacianSource,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("model is not proportional: max relative damping residual {residual:.3e}")]
    NotProportional { residual: f64 },

    #[error("model is not homogeneous: max |r_i - 1| = {deviation:.3e}")]
    NotHomogeneous { deviation: f64 },

    #[error("scaled Laplacian is not positive semidefinite: eigenvalue {0:.6e}")]
    NotPsd(f64),

    #[error("eigenvector matrix is not orthonormal: residual {0:.3e}")]
    NotOrthonormal(f64),

    #[error("worst-case direction vanishes at bus {bus}, t = {t}")]
    ZeroDirection { bus: usize, t: f64 },

    #[error("step {step} s violates the stability guard {guard} s")]
    StepTooLarge { step: f64, guard: f64 },

    #[error("simulation diverged at t = {0}")]
    Diverged(f64),

    #[error("schema: {0}")]
    Schema(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
