use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigensolver did not converge")]
    EigenFailure,

    #[error("principal-value quadrature did not converge at omega = {omega}: {detail}")]
    QuadratureNonConvergence { omega: f64, detail: String },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("integrator exceeded {max_steps} steps before t = {t}")]
    TooManySteps { t: f64, max_steps: usize },

    #[error("non-finite state encountered at t = {t}")]
    NonFinite { t: f64 },

    #[error("steady state is not unique: generator kernel has dimension {kernel_dim}")]
    DegenerateSteadyState { kernel_dim: usize },

    #[error("finite-difference derivative did not converge (last relative change {rel_change:e})")]
    DerivativeNonConvergence { rel_change: f64 },

    #[error("local master equation requires k <= {bound}, got k = {k}; use the global builder")]
    LocalFormInvalid { k: f64, bound: f64 },

    #[error("degenerate dressed spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
