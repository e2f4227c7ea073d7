//! Small dense function approximators: MLPs, a Gaussian policy head, Adam,
//! and parameter checkpoints.

pub mod checkpoint;
pub mod mlp;
pub mod optim;
pub mod policy;

pub use checkpoint::{Checkpoint, NamedNet};
pub use mlp::{Mlp, Trace};
pub use optim::OptimState;
pub use policy::GaussianPolicyOutput;

/// Default hidden architecture for policy and value networks.
pub const DEFAULT_HIDDEN: [usize; 2] = [64, 64];
