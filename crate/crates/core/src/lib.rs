//! Analytical self-similar collapse and expansion solutions of the
//! N-dimensional self-gravitating compressible flow equations with
//! density-dependent viscosity and polytropic pressure, in radial symmetry.
//!
//! The solution family separates into a spatial profile f(z) on the
//! self-similar variable z = r/a(t) and a temporal scaling factor a(t):
//! ρ = f(r/a)/a^N, V = (ȧ/a)·r. This crate integrates the profile
//! equations ([`profile`]), evaluates the scaling factors ([`scaling`]),
//! reproduces the prior-generation Emden-type profiles ([`legacy`]), and
//! verifies that the assembled space-time fields satisfy the governing
//! system pointwise ([`verify`]).
//!
//! All public types are immutable after construction and safe to share
//! across threads; independent integrations can run concurrently.

// Validation guards are written `!(x > 0.0)` on purpose: the negated form
// rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod legacy;
pub mod model;
pub mod ode;
pub mod profile;
pub mod quad;
pub mod scaling;
pub mod verify;

pub use error::{Error, Result};
pub use legacy::{emden_residual, integrate_emden, EmdenKind, EmdenProfile};
pub use model::{
    alpha_const, exponents_for, unit_ball_volume, validate, PhysicalParams, SolutionCase,
    ValidationReport,
};
pub use ode::IntegratorStats;
pub use profile::{
    first_zero, integrate_profile, integrate_profile_opts, ode_rhs, profile_residual,
    series_start, ProfileOdeForm, ProfileOptions, ProfileSolution, ResidualSample, SupportKind,
};
pub use scaling::{blowup_time, emden_scaling_integrate, EmdenScaling, ScalingFunction};
pub use verify::{
    verify_solution, verify_solution_opts, DerivativeMode, GridSample, RadialSolution,
    ResidualReport, WorstOffender,
};
