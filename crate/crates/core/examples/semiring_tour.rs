//! One graph, summed in every semiring.

use sumprod::graph::enumerate_assignments;
use sumprod::summation::sum_decomposable;
use sumprod::{Assignment, GraphBuilder, Semiring, VarId, VariableTable};

fn main() -> sumprod::Result<()> {
    for s in Semiring::ALL {
        let mut b = GraphBuilder::new(s, VariableTable::binary(2));
        let x = b.table_f64(&[VarId(0)], &[0.0, 1.0])?;
        let y = b.table_f64(&[VarId(1)], &[1.0, 1.0])?;
        let z = b.table_f64(&[VarId(1)], &[0.0, 1.0])?;
        let p = b.product(vec![x, y]);
        let q = b.product(vec![x, z]);
        let root = b.sum(vec![p, q]);
        let g = b.build(root)?;
        let r = sum_decomposable(&g)?;
        let mut brute = s.zero();
        let scope: Vec<VarId> = g.vars().ids().collect();
        enumerate_assignments(g.vars(), &scope, &Assignment::empty(2), 1 << 10, |a| {
            brute = s.add(&brute, &g.evaluate(a)?)?;
            Ok(true)
        })?;
        println!("{:<14} sum = {:<8} enumeration = {:<8} ops = {}", s.name(), r.value, brute, r.op_counts.adds + r.op_counts.muls);
    }
    Ok(())
}
