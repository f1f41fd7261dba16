//! Evidence and most probable explanation in a two-component mixture.

use sumprod::apps::{mpe, partition_function, probability_of_evidence};
use sumprod::{Assignment, GraphBuilder, Semiring, Value, VarId, VariableTable};

fn main() -> sumprod::Result<()> {
    let mut b = GraphBuilder::new(Semiring::SumProduct, VariableTable::binary(2));
    let a1 = b.table_f64(&[VarId(0)], &[0.9, 0.1])?;
    let b1 = b.table_f64(&[VarId(1)], &[0.8, 0.2])?;
    let a2 = b.table_f64(&[VarId(0)], &[0.2, 0.8])?;
    let b2 = b.table_f64(&[VarId(1)], &[0.4, 0.6])?;
    let w1 = b.constant(Value::Real(0.3));
    let w2 = b.constant(Value::Real(0.7));
    let p1 = b.product(vec![w1, a1, b1]);
    let p2 = b.product(vec![w2, a2, b2]);
    let root = b.sum(vec![p1, p2]);
    let spn = b.build(root)?;

    println!("Z = {}", partition_function(&spn)?);
    let e = Assignment::parse("x2=1", spn.vars())?;
    println!("P(x2=1) = {:.4}", probability_of_evidence(&spn, &e)?);
    let m = mpe(&spn, &e)?;
    println!("mpe value {:.4} with x1={}", m.value, m.state.index(VarId(0)).unwrap());
    Ok(())
}
