use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension {0}: a truncated mode needs at least 2 levels")]
    InvalidDimension(usize),

    #[error("layout mismatch: {0}")]
    Layout(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("no unique steady state: {0}")]
    NoUniqueSteadyState(String),

    #[error("steady state did not converge: residual {residual:.3e} exceeds {tolerance:.1e}")]
    Convergence { residual: f64, tolerance: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("integration unstable: trace drift {drift:.3e} at t = {time}; try a smaller dt")]
    Integration { drift: f64, time: f64 },

    #[error("g2 undefined: mean photon number is {0:e}")]
    UndefinedCorrelation(f64),

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("singular amplitude system: {0}")]
    Singular(String),

    #[error("closed-form singularity: {0} vanishes")]
    ClosedFormSingularity(&'static str),

    #[error("invalid sweep: {0}")]
    InvalidSpec(String),

    #[error("sweep failed at {failed} of {total} grid points")]
    SweepFailed { failed: usize, total: usize },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("linear algebra backend: {0}")]
    Backend(String),
}
