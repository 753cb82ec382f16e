pub mod cli;
pub mod error;
pub mod factors;
pub mod graph;
pub mod io;
pub mod liegroups;
pub mod loss;
pub mod manifold;
pub mod optimizer;
pub mod sparse;
pub mod synthetic;

pub use error::{Error, Result};
pub use factors::{BetweenFactor, Factor, PriorFactor};
pub use graph::{key, FactorGraph, Key, Ordering, Variables};
pub use liegroups::{LieGroup, Pose2, Pose3, Rot2, Rot3};
pub use loss::{LossFunction, RobustKernel};
pub use manifold::{Manifold, VectorValue};
pub use optimizer::{optimize, OptimizationResult, OptimizationStatus, OptimizerParams};
