//! Summing a non-decomposable graph by Shannon expansion.

use sumprod::apps::{cnf_to_spf, parse_dimacs};
use sumprod::engine::{make_deterministic_decomposable, sum_spf, EngineConfig};
use sumprod::graph::DEFAULT_ENUMERATION_LIMIT;

fn main() -> sumprod::Result<()> {
    let cnf = parse_dimacs("p cnf 3 3\n1 2 0\n-1 2 0\n2 3 0\n")?;
    let g = cnf_to_spf(&cnf)?;
    println!("input size {}, decomposable {}", g.size(), g.is_decomposable());
    let out = sum_spf(&g, &EngineConfig::default())?;
    println!("value {} after {} decompositions, output size {}", out.value, out.stats.decompositions, out.graph.size());
    let dd = make_deterministic_decomposable(&g, &EngineConfig::default())?;
    println!(
        "deterministic form: {} nodes, deterministic {}, decomposable {}",
        dd.node_count(),
        dd.is_deterministic(DEFAULT_ENUMERATION_LIMIT)?,
        dd.is_decomposable()
    );
    Ok(())
}
