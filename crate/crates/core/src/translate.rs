//! Relabeling a graph into another semiring.

use std::fmt;
use std::sync::Arc;

use crate::error::{Result, SpfError};
use crate::graph::{first_nondeterministic_sum, GraphBuilder, Leaf, LeafBody, Node, SpfGraph, DEFAULT_ENUMERATION_LIMIT};
use crate::semiring::{Semiring, Value};

/// How leaf and constant values move between carriers.
#[derive(Clone, Default)]
pub enum ValueMap {
    /// Only the source's zero and one are allowed; they map to the target's zero and one.
    #[default]
    ZeroOne,
    /// Zero and one map to zero and one; other values keep their numeric value.
    Numeric,
    Custom(Arc<dyn Fn(&Value) -> Result<Value> + Send + Sync>),
}

impl fmt::Debug for ValueMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueMap::ZeroOne => f.write_str("ZeroOne"),
            ValueMap::Numeric => f.write_str("Numeric"),
            ValueMap::Custom(_) => f.write_str("Custom"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TranslateOptions {
    pub value_map: ValueMap,
    /// Verify determinism when the two semirings differ in idempotence.
    pub check_determinism: bool,
    pub enumeration_limit: u64,
}

impl Default for TranslateOptions {
    fn default() -> Self {
        Self {
            value_map: ValueMap::ZeroOne,
            check_determinism: true,
            enumeration_limit: DEFAULT_ENUMERATION_LIMIT,
        }
    }
}

impl TranslateOptions {
    pub fn unchecked() -> Self {
        Self {
            check_determinism: false,
            ..Self::default()
        }
    }
}

fn map_value(source: Semiring, target: Semiring, map: &ValueMap, v: &Value) -> Result<Value> {
    if let ValueMap::Custom(f) = map {
        let out = f(v)?;
        target.check(&out)?;
        return Ok(out);
    }
    if source.is_zero(v) {
        return Ok(target.zero());
    }
    if source.is_one(v) {
        return Ok(target.one());
    }
    match map {
        ValueMap::ZeroOne => Err(SpfError::Precondition(format!(
            "value {v} is neither zero nor one of {source}; pass a value map"
        ))),
        _ => target.from_f64(v.to_f64()),
    }
}

/// Replaces `⊕, ⊗` by the target's operations and maps every value; structure is unchanged.
///
/// Moving between semirings of different idempotence is only sound for deterministic graphs,
/// which is checked by enumeration unless disabled.
pub fn translate(g: &SpfGraph, target: Semiring, opts: &TranslateOptions) -> Result<SpfGraph> {
    let source = g.semiring();
    if opts.check_determinism && source.is_idempotent() != target.is_idempotent() {
        if let Some(node) = first_nondeterministic_sum(g, opts.enumeration_limit)? {
            return Err(SpfError::NotDeterministic(node.0));
        }
    }
    let mut b = GraphBuilder::new(target, g.vars_arc());
    for node in g.nodes() {
        let mapped = match node {
            Node::Const(v) => Node::Const(map_value(source, target, &opts.value_map, v)?),
            Node::Leaf(leaf) => Node::Leaf(Leaf {
                scope: leaf.scope.clone(),
                body: match &leaf.body {
                    LeafBody::Table(t) => LeafBody::Table(
                        t.iter()
                            .map(|v| map_value(source, target, &opts.value_map, v))
                            .collect::<Result<_>>()?,
                    ),
                    LeafBody::Registered(f) => LeafBody::Registered(f.clone()),
                },
            }),
            other => other.clone(),
        };
        b.push(mapped);
    }
    b.build(g.root())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{VarId, VariableTable};
    use crate::summation::sum_decomposable;

    #[test]
    fn boolean_one_to_counting() {
        let mut b = GraphBuilder::new(Semiring::Boolean, VariableTable::new());
        let c = b.one();
        let g = b.build(c).unwrap();
        let t = translate(&g, Semiring::Counting, &TranslateOptions::default()).unwrap();
        assert_eq!(sum_decomposable(&t).unwrap().value, Value::nat(1));
    }

    #[test]
    fn non_deterministic_clause_is_rejected() {
        let mut b = GraphBuilder::new(Semiring::Boolean, VariableTable::binary(2));
        let x1 = b.indicator(VarId(0), 1);
        let x2 = b.indicator(VarId(1), 1);
        let s = b.sum(vec![x1, x2]);
        let g = b.build(s).unwrap();
        assert!(matches!(
            translate(&g, Semiring::Counting, &TranslateOptions::default()),
            Err(SpfError::NotDeterministic(_))
        ));
        let forced = translate(&g, Semiring::Counting, &TranslateOptions::unchecked()).unwrap();
        assert_eq!(sum_decomposable(&forced).unwrap().value, Value::nat(4));
        assert_eq!(forced.size(), g.size());
    }

    #[test]
    fn numeric_map_keeps_weights() {
        let mut b = GraphBuilder::new(Semiring::SumProduct, VariableTable::binary(1));
        let l = b.table_f64(&[VarId(0)], &[0.3, 0.7]).unwrap();
        let g = b.build(l).unwrap();
        assert!(translate(&g, Semiring::MaxProduct, &TranslateOptions::default()).is_err());
        let opts = TranslateOptions {
            value_map: ValueMap::Numeric,
            ..TranslateOptions::default()
        };
        let t = translate(&g, Semiring::MaxProduct, &opts).unwrap();
        assert_eq!(sum_decomposable(&t).unwrap().value, Value::Real(0.7));
    }
}
