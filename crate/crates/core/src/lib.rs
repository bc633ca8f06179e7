//! Discretization of continuous multiterminal models and evaluation of their
//! achievable rate regions on the resulting finite pmfs.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod numeric;
pub mod gaussian;
pub mod grid;
pub mod prob;
pub mod converge;
pub mod md;
pub mod regions;

pub use error::{Error, Result};
