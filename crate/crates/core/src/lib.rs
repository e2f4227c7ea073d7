//! Contextual reward machines for staged dexterous grasping, trained with
//! a stage-aware PPO in a quasi-static hand simulator.

// `!(x > 0.0)` is used on purpose so NaN fails validation too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod approx;
pub mod crm;
pub mod env;
pub mod error;
pub mod harness;
pub mod taxonomy;

pub use error::{Error, Result};
