//! Single-letter rate regions as linear inequality systems.

mod evaluators;
mod model;
mod system;

pub use evaluators::*;
pub use model::{Functional, LabeledModel, MARKOV_TOL};
pub use system::{HalfspaceSystem, Row, Sense, CONTAINS_SLACK, MERGE_TOL};
