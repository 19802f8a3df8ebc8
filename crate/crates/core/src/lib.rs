//! Birkhoff curve shortening and width sweepouts on constant-curvature model
//! surfaces, plus a brute-force lab for the comparison inequalities behind them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod birkhoff;
pub mod cli;
pub mod comparison;
pub mod curves;
pub mod error;
pub mod geometry;
pub mod sweepout;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{ModelSpace, Point, SafeRadius, SpaceKind};
