//! Satisfiability and exact model counting of a small CNF.

use sumprod::apps::{model_count, parse_dimacs, sat};
use sumprod::engine::EngineConfig;

fn main() -> sumprod::Result<()> {
    let cnf = parse_dimacs("p cnf 4 3\n1 2 0\n-1 3 0\n-2 -3 4 0\n")?;
    let cfg = EngineConfig::default();
    let s = sat(&cnf, &cfg)?;
    println!("satisfiable: {}", s.satisfiable);
    if let Some(w) = &s.witness {
        let bits: Vec<String> = (0..cnf.num_vars).map(|i| w.index(sumprod::VarId(i)).unwrap_or(0).to_string()).collect();
        println!("witness: {}", bits.join(" "));
    }
    println!("models: {}", model_count(&cnf, &cfg)?);
    Ok(())
}
