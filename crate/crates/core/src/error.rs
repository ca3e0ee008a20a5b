use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("one-sided jumps: rho = {rho} is at or beyond the admissible boundary for alpha = {alpha}")]
    OneSidedJumps { alpha: f64, rho: f64 },

    #[error("alpha = 1 is restricted to the symmetric Cauchy case, got rho = {0}")]
    CauchyAsymmetric(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("operation not defined in this parameter regime: {0}")]
    Scope(String),

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("green function evaluation within {0:.3e} of the diagonal is unreliable for alpha <= 1")]
    NearDiagonal(f64),

    #[error("closest reach of a killed path lies inside the interval")]
    KilledPath,

    #[error("insufficient acceptance: {accepted} accepted samples, floor is {floor}")]
    InsufficientAcceptance { accepted: usize, floor: usize },

    #[error("doob chain grid failure: {0}")]
    GridFailure(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
