use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("density is not integrable: weighted inverse unbounded near {points:?}")]
    NonIntegrableDensity { points: Vec<f64> },

    #[error("quadrature did not converge: {what} changed by {change:.3e} under panel doubling (tolerance {tolerance:.1e})")]
    QuadratureNonConvergence {
        what: String,
        change: f64,
        tolerance: f64,
    },

    #[error("Fourier table covers lags 0..={available} but {needed} are required")]
    InsufficientFourierRange { needed: usize, available: usize },

    #[error("operator {which} is singular or ill-conditioned (condition number {condition:.3e}, bound {bound:.1e})")]
    SingularOperator {
        which: String,
        condition: f64,
        bound: f64,
    },

    #[error("coupled system residual {residual:.3e} exceeds bound {bound:.3e}")]
    ResidualFailure { residual: f64, bound: f64 },

    #[error("index {index} out of range 0..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("time weights leak into the forbidden band: {leakage:.3e} > {tolerance:.3e}")]
    SupportLeakage { leakage: f64, tolerance: f64 },

    #[error("positivity violated at lambda = {lambda:.6} (value {value:.3e}): {context}")]
    PositivityViolation {
        lambda: f64,
        value: f64,
        context: String,
    },

    #[error("polynomial root finding failed: {0}")]
    RootFinding(String),

    #[error("no convergence after {iterations} iterations (last residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("covariance factorization failed: {0}")]
    Factorization(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
