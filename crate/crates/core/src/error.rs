//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by parameter validation, profile integration, scaling
/// evaluation, and residual assembly.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// The profile ODE denominator D(f) fell below its floor; the equation
    /// is ill-posed there and continuing would fabricate a solution.
    #[error("degenerate profile denominator at z = {z:.6e}, f = {f:.6e}")]
    DegenerateDenominator { z: f64, f: f64 },

    /// Step-size underflow in the adaptive integrator. Carries the last
    /// accepted state so the caller can inspect where the run died.
    #[error("integrator step size underflow at x = {x:.6e} (state {state:?})")]
    StiffnessFailure { x: f64, state: Vec<f64> },

    /// Evaluation requested at or past the blowup time of the scaling factor.
    #[error("scaling factor evaluated at t = {t:.6e}, at or past blowup time T = {blowup_time:.6e}")]
    BlowupReached { t: f64, blowup_time: f64 },

    /// The scaling factor is non-positive at the requested time.
    #[error("scaling factor non-positive at t = {t:.6e}")]
    ScaleDomain { t: f64 },

    /// A precondition on an operation argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Physical parameters failed validation for the requested case.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// The integrator exceeded its step budget.
    #[error("maximum number of integration steps exceeded at x = {x:.6e}")]
    MaxSteps { x: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
