//! Global minimization of a decomposable min-sum function with multimodal leaves.

use sumprod::apps::minimize_msf;
use sumprod::bench::{C0, C1};
use sumprod::summation::SumOptions;
use sumprod::{GraphBuilder, Semiring, VarId, VarValue, VariableTable};

fn main() -> sumprod::Result<()> {
    let mut vars = VariableTable::new();
    for i in 0..4 {
        vars.add_interval(&format!("y{i}"), -5.12, 5.12)?;
    }
    let mut b = GraphBuilder::new(Semiring::MinSum, vars);
    let f = b.registered("rastrigin-pair", &[VarId(0), VarId(1)], vec![0.4, 0.5, C0, C1])?;
    let h = b.registered("rastrigin-pair", &[VarId(2), VarId(3)], vec![-0.7, -0.6, C0, C1])?;
    let root = b.product(vec![f, h]);
    let g = b.build(root)?;
    let m = minimize_msf(
        &g,
        &SumOptions {
            restarts: 64,
            ..SumOptions::default()
        },
    )?;
    let y: Vec<f64> = (0..4)
        .map(|i| match m.argmin.get(VarId(i)) {
            Some(VarValue::Real(v)) => v,
            _ => f64::NAN,
        })
        .collect();
    println!("min {:.2e} at {:.4?} after {} starts", m.value, y, m.restarts_used);
    Ok(())
}
