use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unsupported number of levels {levels}: expected 2 <= N <= {max}")]
    Dimension { levels: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not traceless (|tr| = {trace:e})")]
    NotTraceless { trace: f64 },

    #[error("matrix does not have the requested symmetry (residual {residual:e})")]
    ConventionMismatch { residual: f64 },

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("coherence vector is not a state: minimum eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("invalid basis label: {0}")]
    InvalidLabel(String),

    #[error("orbit has {chi} diagonal points, above the enumeration cap of {cap}")]
    TooLarge { chi: u64, cap: u64 },

    #[error("step too large: dt * |A + uB| = {value:e} exceeds 1 at t = {time}")]
    Step { value: f64, time: f64 },

    #[error("Lie closure did not stabilise after {iterations} rounds")]
    NoConvergence { iterations: usize },

    #[error("drift Hamiltonian is not strongly regular")]
    NotStronglyRegular,

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
