//! MAX-SAT on an unsatisfiable formula.

use sumprod::apps::{max_sat, parse_dimacs};
use sumprod::engine::EngineConfig;

fn main() -> sumprod::Result<()> {
    let cnf = parse_dimacs("p cnf 2 4\n1 2 0\n-1 2 0\n1 -2 0\n-1 -2 0\n")?;
    let r = max_sat(&cnf, &EngineConfig::default())?;
    println!("{} of {} clauses satisfiable", r.value, cnf.clauses.len());
    Ok(())
}
