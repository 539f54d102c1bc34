use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("covector normalization violated: {constraint}")]
    Normalization { constraint: String },

    #[error("step size underflow at t = {t:e} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("step budget of {steps} exhausted at t = {t:e}")]
    StepBudget { t: f64, steps: usize },

    #[error("riccati solution blew up at t = {t:e}; last valid t = {last_valid:e}")]
    RiccatiBlowUp { t: f64, last_valid: f64 },

    #[error("U(t0) is numerically singular at t0 = {t0:e}")]
    SingularSeed { t0: f64 },

    #[error("evaluation at or near a pole: {0}")]
    Pole(String),

    #[error("root finder did not converge: {0}")]
    NoConvergence(String),

    #[error("conjugate time indeterminate near t = {t:e}: {reason}")]
    Indeterminate { t: f64, reason: String },

    #[error("quadrature did not reach tolerance: estimate {estimate:e}, error {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
}

pub type Result<T> = std::result::Result<T, Error>;
