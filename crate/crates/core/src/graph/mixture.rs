use super::{GraphBuilder, SpfGraph, VarId, VariableTable};
use crate::error::{Result, SpfError};
use crate::semiring::{Semiring, Value};

/// `⊕_j ⊗_i ψ_ji(X_i)`: a sum of `r` products of `n` univariate leaves.
///
/// `tables[j][i]` is the table of `ψ_ji` over variable `i` of `vars`.
pub fn build_flat_mixture(
    semiring: Semiring,
    vars: VariableTable,
    r: usize,
    n: usize,
    tables: &[Vec<Vec<Value>>],
) -> Result<SpfGraph> {
    if r == 0 || n == 0 {
        return Err(SpfError::Precondition("flat mixture needs r >= 1 and n >= 1".into()));
    }
    if vars.len() != n {
        return Err(SpfError::Precondition(format!(
            "flat mixture over {n} variables given a table of {}",
            vars.len()
        )));
    }
    if tables.len() != r || tables.iter().any(|row| row.len() != n) {
        return Err(SpfError::Precondition(format!("expected {r}x{n} tables")));
    }
    let mut b = GraphBuilder::new(semiring, vars);
    let mut products = Vec::with_capacity(r);
    for row in tables {
        let leaves = row
            .iter()
            .enumerate()
            .map(|(i, t)| b.table(&[VarId(i)], t.clone()))
            .collect();
        products.push(b.product(leaves));
    }
    let root = b.sum(products);
    b.build(root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Assignment;

    fn ones(s: Semiring, r: usize, n: usize, d: usize) -> SpfGraph {
        let t = vec![vec![vec![s.one(); d]; n]; r];
        build_flat_mixture(s, VariableTable::finite(n, d), r, n, &t).unwrap()
    }

    #[test]
    fn sizes() {
        assert_eq!(ones(Semiring::Counting, 2, 3, 2).size(), 8);
        assert_eq!(ones(Semiring::Counting, 1, 1, 2).size(), 2);
    }

    #[test]
    fn all_ones_counting_evaluates_to_r() {
        let g = ones(Semiring::Counting, 2, 2, 2);
        for x in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            assert_eq!(g.evaluate(&Assignment::from_indices(&x)).unwrap(), Value::nat(2));
        }
        assert!(g.is_decomposable());
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let t = vec![vec![vec![Value::nat(1); 2]; 2]; 1];
        assert!(build_flat_mixture(Semiring::Counting, VariableTable::binary(2), 2, 2, &t).is_err());
    }
}
