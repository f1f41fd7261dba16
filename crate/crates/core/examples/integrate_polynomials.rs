//! Closed-form integration of a mixture of separable polynomials on the unit square.

use sumprod::apps::integrate;
use sumprod::graph::registry::PiecewisePolynomial;
use sumprod::{GraphBuilder, Semiring, VarId, VariableTable};

fn main() -> sumprod::Result<()> {
    let mut vars = VariableTable::new();
    vars.add_interval("u", 0.0, 1.0)?;
    vars.add_interval("v", 0.0, 1.0)?;
    let mut b = GraphBuilder::new(Semiring::SumProduct, vars);
    let u2 = b.registered("polynomial", &[VarId(0)], vec![0.0, 0.0, 3.0])?;
    let v1 = b.registered("polynomial", &[VarId(1)], vec![1.0, 1.0])?;
    let step = b.registered(
        "piecewise-polynomial",
        &[VarId(0)],
        PiecewisePolynomial::params(&[0.0, 0.5, 1.0], &[vec![0.0], vec![2.0]]),
    )?;
    let v0 = b.registered("polynomial", &[VarId(1)], vec![1.0])?;
    let p = b.product(vec![u2, v1]);
    let q = b.product(vec![step, v0]);
    let root = b.sum(vec![p, q]);
    let g = b.build(root)?;
    println!("integral = {} (expected 2.5)", integrate(&g)?);
    Ok(())
}
