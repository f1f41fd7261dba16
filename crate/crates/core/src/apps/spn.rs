use crate::error::{Result, SpfError};
use crate::graph::{Assignment, GraphBuilder, Node, NodeId, SpfGraph, VarId, VariableTable};
use crate::semiring::{Semiring, Value};
use crate::summation::{extract_argument, set_evidence, sum_decomposable, sum_decomposable_with, SumOptions};
use crate::translate::{translate, TranslateOptions, ValueMap};

fn require_spn(spn: &SpfGraph) -> Result<()> {
    if spn.semiring() != Semiring::SumProduct {
        return Err(SpfError::Precondition(format!(
            "expected a sum-product graph, got {}",
            spn.semiring()
        )));
    }
    spn.require_decomposable()
}

/// Unnormalized probability of evidence: the sum over every completion of `e`.
pub fn probability_of_evidence(spn: &SpfGraph, e: &Assignment) -> Result<f64> {
    require_spn(spn)?;
    let g = set_evidence(spn, e)?;
    let opts = SumOptions {
        fixed: e.assigned().map(|(v, _)| v).collect(),
        ..SumOptions::default()
    };
    Ok(sum_decomposable_with(&g, &opts)?.value.to_f64())
}

/// The sum over all assignments; the normalizer of [`probability_of_evidence`].
pub fn partition_function(spn: &SpfGraph) -> Result<f64> {
    probability_of_evidence(spn, &Assignment::empty(spn.vars().len()))
}

/// An SPN whose sums are made selective by one hidden variable each.
#[derive(Clone, Debug)]
pub struct AugmentedSpn {
    /// Sum-product graph over the original variables followed by the hidden ones.
    pub graph: SpfGraph,
    /// Hidden variable of each sum node of the input, in node order.
    pub hidden: Vec<(NodeId, VarId)>,
}

fn fresh_name(vars: &VariableTable, base: String) -> String {
    let mut name = base.clone();
    let mut k = 1;
    while vars.lookup(&name).is_some() {
        name = format!("{base}_{k}");
        k += 1;
    }
    name
}

/// Multiplies child `k` of every sum node `v` by `[Y_v = k]` for a fresh variable `Y_v`.
pub fn augment_selective(spn: &SpfGraph) -> Result<AugmentedSpn> {
    let mut vars = spn.vars().clone();
    let mut hidden = Vec::new();
    for id in spn.ids() {
        if let Node::Sum(ch) = spn.node(id) {
            let name = fresh_name(&vars, format!("y{}", id.0));
            let y = match ch.len() {
                1 => vars.add_unary(&name)?,
                k => vars.add_finite(&name, k)?,
            };
            hidden.push((id, y));
        }
    }
    let mut b = GraphBuilder::new(spn.semiring(), vars);
    let mut map: Vec<NodeId> = Vec::with_capacity(spn.node_count());
    let mut next_hidden = hidden.iter();
    for node in spn.nodes() {
        let id = match node {
            Node::Sum(ch) => {
                let (_, y) = next_hidden.next().expect("one hidden variable per sum");
                let guarded = ch
                    .iter()
                    .enumerate()
                    .map(|(k, c)| {
                        let ind = b.indicator(*y, k);
                        b.product(vec![map[c.0], ind])
                    })
                    .collect();
                b.sum(guarded)
            }
            Node::Product(ch) => b.product(ch.iter().map(|c| map[c.0]).collect()),
            other => b.push(other.clone()),
        };
        map.push(id);
    }
    let root = map[spn.root().0];
    Ok(AugmentedSpn {
        graph: b.build(root)?,
        hidden,
    })
}

#[derive(Clone, Debug)]
pub struct MpeResult {
    /// A full state over the original and hidden variables, agreeing with the evidence.
    pub state: Assignment,
    pub value: f64,
    /// The augmented graph relabeled into max-product.
    pub max_product: SpfGraph,
    pub hidden: Vec<(NodeId, VarId)>,
}

/// Most probable explanation of `e` over the observed and hidden variables.
pub fn mpe(spn: &SpfGraph, e: &Assignment) -> Result<MpeResult> {
    require_spn(spn)?;
    e.validate(spn.vars())?;
    let aug = augment_selective(spn)?;
    let n = aug.graph.vars().len();
    let mut evidence = Assignment::empty(n);
    for (v, x) in e.assigned() {
        evidence.set(v, x);
    }
    let opts = TranslateOptions {
        value_map: ValueMap::Numeric,
        ..TranslateOptions::unchecked()
    };
    let max_product = translate(&aug.graph, Semiring::MaxProduct, &opts)?;
    let evidenced = set_evidence(&max_product, &evidence)?;
    let r = sum_decomposable(&evidenced)?;
    let value = r.value.to_f64();
    let state = extract_argument(&evidenced, &r)?.merged(&evidence);
    let check = max_product.evaluate(&state)?;
    if !check.approx_eq(&Value::Real(value)) {
        return Err(SpfError::Internal(format!(
            "state evaluates to {check}, expected {value}"
        )));
    }
    Ok(MpeResult {
        state,
        value,
        max_product,
        hidden: aug.hidden,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::VarValue;

    fn uniform2() -> SpfGraph {
        let mut b = GraphBuilder::new(Semiring::SumProduct, VariableTable::binary(2));
        let a = b.table_f64(&[VarId(0)], &[0.5, 0.5]).unwrap();
        let c = b.table_f64(&[VarId(1)], &[0.5, 0.5]).unwrap();
        let p = b.product(vec![a, c]);
        b.build(p).unwrap()
    }

    fn mixture() -> SpfGraph {
        let mut b = GraphBuilder::new(Semiring::SumProduct, VariableTable::binary(2));
        let a1 = b.table_f64(&[VarId(0)], &[0.9, 0.1]).unwrap();
        let b1 = b.table_f64(&[VarId(1)], &[0.8, 0.2]).unwrap();
        let a2 = b.table_f64(&[VarId(0)], &[0.2, 0.8]).unwrap();
        let b2 = b.table_f64(&[VarId(1)], &[0.4, 0.6]).unwrap();
        let w1 = b.constant(Value::Real(0.3));
        let w2 = b.constant(Value::Real(0.7));
        let p1 = b.product(vec![w1, a1, b1]);
        let p2 = b.product(vec![w2, a2, b2]);
        let s = b.sum(vec![p1, p2]);
        b.build(s).unwrap()
    }

    #[test]
    fn evidence_examples() {
        let g = uniform2();
        let z = partition_function(&g).unwrap();
        assert!((z - 1.0).abs() < 1e-12);
        let e = Assignment::parse("x1=1", g.vars()).unwrap();
        assert!((probability_of_evidence(&g, &e).unwrap() - 0.5 * z).abs() < 1e-12);
        let full = Assignment::from_indices(&[1, 0]);
        assert_eq!(
            Value::Real(probability_of_evidence(&g, &full).unwrap()),
            g.evaluate(&full).unwrap()
        );
    }

    #[test]
    fn mpe_picks_heavier_component() {
        let g = mixture();
        let r = mpe(&g, &Assignment::empty(2)).unwrap();
        assert_eq!(r.state.index(VarId(0)), Some(1));
        assert_eq!(r.state.index(VarId(1)), Some(1));
        assert_eq!(r.state.index(r.hidden[0].1), Some(1));
        assert!((r.value - 0.7 * 0.8 * 0.6).abs() < 1e-12);
        assert!(g.evaluate(&r.state).unwrap().to_f64() >= r.value);
    }

    #[test]
    fn mpe_with_full_evidence() {
        let g = mixture();
        let e = Assignment::from_indices(&[0, 0]);
        let r = mpe(&g, &e).unwrap();
        assert_eq!(r.state.get(VarId(0)), Some(VarValue::Index(0)));
        assert_eq!(r.state.index(r.hidden[0].1), Some(0));
        assert!((r.value - 0.3 * 0.9 * 0.8).abs() < 1e-12);
    }

    #[test]
    fn augmentation_keeps_decomposability() {
        let aug = augment_selective(&mixture()).unwrap();
        assert!(aug.graph.is_decomposable());
        assert_eq!(aug.graph.vars().len(), 3);
    }
}
