use alloc::string::String;
use thiserror::Error;

/// Failures reported by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("mode {mode} detuning {detuning:e} rad/s is inside the resonance floor {floor:e} rad/s")]
    Resonance { mode: usize, detuning: f64, floor: f64 },

    #[error("transverse Hessian is not positive definite (eigenvalue {eigenvalue:e}); chain is near the zigzag instability")]
    UnstableChain { eigenvalue: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} = {value} exceeds the configured cap {cap}")]
    CapExceeded {
        what: &'static str,
        value: usize,
        cap: usize,
    },

    #[error("infeasible sector: {0}")]
    InfeasibleSector(String),

    #[error("integrator step {step:e} fell below the minimum at t = {time:e}")]
    Stiffness { time: f64, step: f64 },

    #[error("quadrature error estimate {estimate:e} above tolerance {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("degenerate fit window: {0}")]
    DegenerateWindow(String),

    #[error("unidentifiable parameters: {0}")]
    Unidentifiable(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
