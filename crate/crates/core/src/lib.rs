//! Solver and certifier for time-dependent generalized Nash equilibrium
//! problems, with a dynamic abstract economy built on top.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod economy;
pub mod error;
pub mod exec;
pub mod fnspace;
pub mod gnep;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Execution;
pub use fnspace::{combine, TimeGrid, Trajectory};
