//! Delayed and anticipatory ACC dynamics under cut-in maneuvers.
//!
//! The follower's state relative to its leader obeys a linear delay
//! differential equation. [`dde`] solves it analytically with the matrix
//! Lambert W function ([`lambert`]) and checks the result against a
//! method-of-steps integrator. On top of that sit the cut-in timeline
//! ([`scenario`]), stability classification ([`stability`]), time-to-collision
//! statistics over parameter populations ([`safety`], [`params`]) and the
//! command-line entry points ([`commands`]).

// `!(x < y)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod dde;
pub mod error;
pub mod lambert;
pub mod linalg;
pub mod params;
pub mod safety;
pub mod scenario;
pub mod stability;

pub use error::{Error, Result};
