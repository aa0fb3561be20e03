use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("tridiagonal solve hit a non-positive pivot {pivot:e} at row {row}")]
    NonPositivePivot { row: usize, pivot: f64 },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("no zero of the Emden profile before r = {r_max} (exponent {exponent})")]
    NoZeroFound { r_max: f64, exponent: f64 },

    #[error("ODE integrator failed at r = {r}: {reason}")]
    Integrator { r: f64, reason: String },

    #[error("Newton diverged at lambda = {lambda}: residual {residual:e} after {iterations} iterations")]
    NewtonDiverged {
        lambda: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("continuation failed at lambda = {lambda} (last good lambda = {last_good})")]
    ContinuationFailed { lambda: f64, last_good: f64 },

    #[error("eigensolver did not converge in sector {sector}: Ritz residual {residual:e} after {sweeps} sweeps")]
    EigenNotConverged {
        sector: usize,
        residual: f64,
        sweeps: usize,
    },

    #[error("degenerate deflation: potential mass {mass:e}")]
    DegenerateDeflation { mass: f64 },

    #[error("sector minima not monotone for l >= 1: {0:?}")]
    SectorOrder(Vec<f64>),

    #[error("minimization did not converge: {0}")]
    NotConverged(String),

    #[error("cross-check mismatch: {0}")]
    Mismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
