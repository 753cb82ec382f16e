//! Keys, variable containers, and the factor graph.

mod factor_graph;
mod key;
mod ordering;
mod variables;

pub use factor_graph::{default_ordering, FactorGraph};
pub(crate) use factor_graph::checked_error;
pub use key::{key, Key};
pub use ordering::Ordering;
pub use variables::Variables;
