//! Quasi-exact bound states of the radial Schrödinger equation with the
//! potential `U = -alpha/r + beta r + k r^2`.
//!
//! The radial function is written as `R = r^l exp(-beta r / 2K^2) exp(-K^2 r^2 / 2) H(K r)`
//! with `K = k^(1/4)`, which turns the radial equation into a bi-confluent Heun
//! equation for `H`. Its power series obeys a three-term recurrence; forcing
//! two consecutive coefficients to vanish truncates `H` to a polynomial of
//! degree `n`, fixes the energy, and ties `beta` to a root of a degree-`n+1`
//! polynomial. An independent finite-difference eigensolver checks every
//! result.

// `!(x > 0.0)` is used on purpose so NaN falls into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod heun;
pub mod model;
pub mod oracle;
pub mod poly;
pub mod quantize;
pub mod verify;

pub use error::{Error, Result};
pub use heun::{
    coefficient_sequence, eval_series, ode_residual, to_heun_params, CoefficientSequence,
    HeunParameters, SeriesControl,
};
pub use model::{
    effective_momentum_squared, turning_points, vieta_residuals, PhysicalSystem, TurningPointSet,
};
