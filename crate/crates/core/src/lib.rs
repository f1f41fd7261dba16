//! Sum-product functions over commutative semirings.

pub mod apps;
pub mod bench;
pub mod cli;
pub mod engine;
pub mod error;
pub mod graph;
pub mod learn;
pub mod optimize;
pub mod summation;
pub mod semiring;
pub mod translate;
pub mod treelike;

#[cfg(test)]
mod properties;

pub use error::{Result, SpfError};
pub use graph::{Assignment, Domain, GraphBuilder, Node, NodeId, SpfGraph, VarId, VarValue, VariableTable};
pub use semiring::{Semiring, Value};
