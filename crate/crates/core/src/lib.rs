//! Finite-difference valuation of one- and two-asset American options.
//!
//! The semidiscrete complementarity problem `U >= U0, U' >= AU,
//! (U - U0)^T (U' - AU) = 0` is built on a sinh-stretched mesh with the
//! strike placed midway between nodes ([`mesh`], [`payoff`], [`operator`]),
//! and advanced in time by explicit-payoff, Ikonen-Toivanen, Peaceman-Rachford,
//! penalty, and ADI-IT steppers ([`steppers`]). The [`harness`] module runs
//! temporal convergence studies against high-resolution reference solutions.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod harness;
pub mod linsolve;
pub mod mesh;
pub mod operator;
pub mod payoff;
pub mod sparse;
pub mod steppers;

pub use error::{Error, Result};
pub use mesh::{Grid, Grid2D, Mesh1D, MeshParams};
pub use operator::{FinancialParams, Part, SpatialOperator};
pub use payoff::Payoff;
pub use steppers::{Method, MethodConfig, StepMode, StepperState, TimeGrid};
