//! Closed forms and optimizers for the Gaussian examples; also the analytic
//! oracle for the discretization tests.

mod ic;
mod mac;
mod md;
mod spec;
mod thu;

pub use ic::*;
pub use mac::*;
pub use md::*;
pub use spec::*;
pub use thu::*;
