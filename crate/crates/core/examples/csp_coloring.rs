//! Three-coloring a wheel graph as a constraint satisfaction problem.

use sumprod::apps::{not_equal, solve_csp, CspInstance};
use sumprod::engine::EngineConfig;
use sumprod::{VarId, VariableTable};

fn main() -> sumprod::Result<()> {
    let rim = 5;
    let mut cons = Vec::new();
    for i in 0..rim {
        cons.push(not_equal(VarId(i), VarId((i + 1) % rim), 3));
        cons.push(not_equal(VarId(i), VarId(rim), 3));
    }
    let csp = CspInstance::new(VariableTable::finite(rim + 1, 3), cons.clone())?;
    match solve_csp(&csp, &EngineConfig::default())?.solution {
        Some(s) => println!("3 colors: {:?}", (0..=rim).map(|i| s.index(VarId(i)).unwrap()).collect::<Vec<_>>()),
        None => println!("3 colors: impossible"),
    }
    let csp4 = CspInstance::new(VariableTable::finite(rim + 1, 4), (0..rim).flat_map(|i| [not_equal(VarId(i), VarId((i + 1) % rim), 4), not_equal(VarId(i), VarId(rim), 4)]).collect())?;
    let s = solve_csp(&csp4, &EngineConfig::default())?.solution.expect("four colors suffice");
    println!("4 colors: {:?}", (0..=rim).map(|i| s.index(VarId(i)).unwrap()).collect::<Vec<_>>());
    Ok(())
}
