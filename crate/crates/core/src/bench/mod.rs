//! The pairwise Rastrigin benchmark.

mod rastrigin;
mod run;

pub use rastrigin::*;
pub use run::*;
