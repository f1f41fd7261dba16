//! A chain junction tree compiled into a tree-like graph.

use sumprod::graph::json::graph_to_json;
use sumprod::summation::sum_decomposable;
use sumprod::treelike::{build_treelike, counted_size_bound, partition_function, size_bound, JunctionTree};
use sumprod::{Semiring, Value, VarId, VariableTable};

fn main() -> sumprod::Result<()> {
    let vars = VariableTable::binary(3);
    let mut jt = JunctionTree::new();
    let a = jt.push(vec![VarId(0), VarId(1)], None);
    jt.push(vec![VarId(1), VarId(2)], Some(a));
    let psi = vec![
        [1.0, 2.0, 3.0, 4.0].map(Value::Real).to_vec(),
        [0.5, 1.5, 2.5, 3.5].map(Value::Real).to_vec(),
    ];
    let g = build_treelike(&jt, &psi, Semiring::SumProduct, &vars)?;
    println!("decomposable: {}", g.is_decomposable());
    println!("sum = {}, brute force = {}", sum_decomposable(&g)?.value, partition_function(&jt, &psi, Semiring::SumProduct, &vars)?);
    println!("size {} (formula bound {}, counted bound {})", g.size(), size_bound(&jt, 2)?, counted_size_bound(&jt, 2)?);
    println!("{} nodes in JSON", graph_to_json(&g)["nodes"].as_array().map_or(0, Vec::len));
    Ok(())
}
