//! SAT, model counting, MAX-SAT, constraint satisfaction, SPN inference, integration and minimization.

mod cnf;
mod continuous;
mod csp;
mod spn;

pub use cnf::{cnf_to_spf, max_sat, model_count, parse_dimacs, sat, sat_number_spf, Cnf, SatNumberResult, SatResult};
pub use continuous::{integrate, minimize_msf, MsfMinimum};
pub use csp::{csp_to_spf, not_equal, solve_csp, Constraint, CspInstance, CspResult};
pub use spn::{augment_selective, mpe, partition_function, probability_of_evidence, AugmentedSpn, MpeResult};
