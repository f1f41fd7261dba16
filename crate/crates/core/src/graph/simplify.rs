use super::{Assignment, GraphBuilder, Leaf, LeafBody, Node, NodeId, SpfGraph, VarValue, VariableTable};
use crate::error::{Result, SpfError};
use crate::semiring::{Semiring, Value};

/// A leaf after fixing some of its variables.
pub(crate) enum Restricted {
    Unchanged,
    Const(Value),
    Leaf(Leaf),
}

/// Fixes the assigned variables of a leaf: full assignments give constants, partial ones curry tables.
pub(crate) fn restrict_leaf(
    leaf: &Leaf,
    semiring: Semiring,
    vars: &VariableTable,
    partial: &Assignment,
) -> Result<Restricted> {
    let fixed = leaf.scope.iter().filter(|v| partial.is_set(**v)).count();
    if fixed == 0 {
        return Ok(Restricted::Unchanged);
    }
    if fixed == leaf.scope.len() {
        return Ok(Restricted::Const(leaf.eval(semiring, vars, partial)?));
    }
    let LeafBody::Table(values) = &leaf.body else {
        return Err(SpfError::Unsupported(
            "partially assigned registered leaf cannot be curried".to_string(),
        ));
    };
    let cards: Vec<usize> = leaf
        .scope
        .iter()
        .map(|v| vars.domain(*v).cardinality().unwrap_or(1))
        .collect();
    for v in &leaf.scope {
        if let Some(x) = partial.get(*v) {
            match x {
                VarValue::Index(i) if i < vars.domain(*v).cardinality().unwrap_or(0) => {}
                _ => {
                    return Err(SpfError::InvalidAssignment(format!(
                        "value {x} outside the domain of `{}`",
                        vars.name(*v)
                    )))
                }
            }
        }
    }
    let free: Vec<usize> = (0..leaf.scope.len())
        .filter(|&k| !partial.is_set(leaf.scope[k]))
        .collect();
    let out_size: usize = free.iter().map(|&k| cards[k]).product();
    let mut out = Vec::with_capacity(out_size);
    let mut idx: Vec<usize> = leaf
        .scope
        .iter()
        .map(|v| partial.index(*v).unwrap_or(0))
        .collect();
    for _ in 0..out_size {
        let mut flat = 0;
        for (k, &i) in idx.iter().enumerate() {
            flat = flat * cards[k] + i;
        }
        out.push(values[flat].clone());
        for &k in free.iter().rev() {
            idx[k] += 1;
            if idx[k] < cards[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(Restricted::Leaf(Leaf {
        scope: free.iter().map(|&k| leaf.scope[k]).collect(),
        body: LeafBody::Table(out),
    }))
}

/// A simplified node: either a folded constant or a node in the new graph.
#[derive(Clone)]
pub(crate) enum Folded {
    Const(Value),
    Node(NodeId),
}

/// Builds `⊕ children` with constants folded, zeros dropped and single children inlined.
pub(crate) fn fold_sum(b: &mut GraphBuilder, children: &[Folded]) -> Result<Folded> {
    let s = b.semiring();
    let mut constant: Option<Value> = None;
    let mut nodes = Vec::new();
    for c in children {
        match c {
            Folded::Const(v) if s.is_zero(v) => {}
            Folded::Const(v) => {
                constant = Some(match constant {
                    None => v.clone(),
                    Some(acc) => s.add(&acc, v)?,
                });
            }
            Folded::Node(n) => nodes.push(*n),
        }
    }
    if let Some(c) = &constant {
        if s.is_add_absorbing(c) {
            return Ok(Folded::Const(c.clone()));
        }
    }
    match (constant, nodes.len()) {
        (None, 0) => Ok(Folded::Const(s.zero())),
        (Some(c), 0) => Ok(Folded::Const(c)),
        (None, 1) => Ok(Folded::Node(nodes[0])),
        (c, _) => {
            if let Some(c) = c {
                let id = b.constant(c);
                nodes.push(id);
            }
            Ok(Folded::Node(b.sum(nodes)))
        }
    }
}

/// Builds `⊗ children` with constants folded, ones dropped and zero absorbing.
pub(crate) fn fold_product(b: &mut GraphBuilder, children: &[Folded]) -> Result<Folded> {
    let s = b.semiring();
    let mut constant = s.one();
    let mut nodes = Vec::new();
    for c in children {
        match c {
            Folded::Const(v) => {
                if s.is_zero(v) {
                    return Ok(Folded::Const(s.zero()));
                }
                constant = s.mul(&constant, v)?;
            }
            Folded::Node(n) => nodes.push(*n),
        }
    }
    if s.is_zero(&constant) {
        return Ok(Folded::Const(constant));
    }
    let trivial = s.is_one(&constant);
    match (trivial, nodes.len()) {
        (_, 0) => Ok(Folded::Const(constant)),
        (true, 1) => Ok(Folded::Node(nodes[0])),
        _ => {
            if !trivial {
                let id = b.constant(constant);
                nodes.insert(0, id);
            }
            Ok(Folded::Node(b.product(nodes)))
        }
    }
}

pub(super) fn simplify(g: &SpfGraph, partial: &Assignment) -> Result<SpfGraph> {
    partial.validate(g.vars())?;
    let s = g.semiring();
    let mut b = GraphBuilder::new(s, g.vars_arc());
    let mut map: Vec<Folded> = Vec::with_capacity(g.node_count());
    for node in g.nodes() {
        let folded = match node {
            Node::Const(v) => Folded::Const(v.clone()),
            Node::Leaf(leaf) => match restrict_leaf(leaf, s, g.vars(), partial)? {
                Restricted::Unchanged => Folded::Node(b.push(Node::Leaf(leaf.clone()))),
                Restricted::Const(v) => Folded::Const(v),
                Restricted::Leaf(l) => Folded::Node(b.push(Node::Leaf(l))),
            },
            Node::Sum(ch) => {
                let kids: Vec<Folded> = ch.iter().map(|c| map[c.0].clone()).collect();
                fold_sum(&mut b, &kids)?
            }
            Node::Product(ch) => {
                let kids: Vec<Folded> = ch.iter().map(|c| map[c.0].clone()).collect();
                fold_product(&mut b, &kids)?
            }
        };
        map.push(folded);
    }
    let root = match &map[g.root().0] {
        Folded::Node(n) => *n,
        Folded::Const(v) => b.constant(v.clone()),
    };
    b.build(root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{compatible, VarId, DEFAULT_ENUMERATION_LIMIT};

    fn clause() -> SpfGraph {
        let mut b = GraphBuilder::new(Semiring::Boolean, VariableTable::binary(2));
        let x1 = b.indicator(VarId(0), 1);
        let x2 = b.indicator(VarId(1), 1);
        let s = b.sum(vec![x1, x2]);
        b.build(s).unwrap()
    }

    #[test]
    fn satisfied_clause_becomes_one() {
        let mut a = Assignment::empty(2);
        a.set(VarId(0), VarValue::Index(1));
        let g = clause().simplify(&a).unwrap();
        assert_eq!(g.node(g.root()), &Node::Const(Value::Bool(true)));
    }

    #[test]
    fn falsified_literal_is_dropped() {
        let mut a = Assignment::empty(2);
        a.set(VarId(0), VarValue::Index(0));
        let g = clause().simplify(&a).unwrap();
        assert_eq!(g.node_count(), 1);
        assert!(matches!(g.node(g.root()), Node::Leaf(l) if l.scope == vec![VarId(1)]));
    }

    #[test]
    fn min_sum_product_keeps_constant() {
        let mut b = GraphBuilder::new(Semiring::MinSum, VariableTable::finite(2, 3));
        let t1 = b.table_f64(&[VarId(0)], &[4.0, 1.0, 2.5]).unwrap();
        let t2 = b.table_f64(&[VarId(1)], &[0.5, 3.0, 7.0]).unwrap();
        let p = b.product(vec![t1, t2]);
        let g = b.build(p).unwrap();
        let mut a = Assignment::empty(2);
        a.set(VarId(0), VarValue::Index(2));
        let h = g.simplify(&a).unwrap();
        assert!(matches!(h.node(h.root()), Node::Product(ch) if ch.len() == 2));
        for x2 in 0..3 {
            let full = Assignment::from_indices(&[2, x2]);
            assert_eq!(h.evaluate(&full).unwrap(), g.evaluate(&full).unwrap());
        }
    }

    #[test]
    fn empty_assignment_is_compatible() {
        let g = clause();
        let h = g.simplify(&Assignment::empty(2)).unwrap();
        assert!(compatible(&g, &h, DEFAULT_ENUMERATION_LIMIT).unwrap());
    }

    #[test]
    fn currying_a_table() {
        let mut b = GraphBuilder::new(Semiring::Counting, VariableTable::finite(2, 3));
        let vals: Vec<Value> = (0..9).map(Value::nat).collect();
        let t = b.table(&[VarId(0), VarId(1)], vals);
        let g = b.build(t).unwrap();
        let mut a = Assignment::empty(2);
        a.set(VarId(1), VarValue::Index(2));
        let h = g.simplify(&a).unwrap();
        for x1 in 0..3 {
            let full = Assignment::from_indices(&[x1, 2]);
            assert_eq!(h.evaluate(&full).unwrap(), Value::nat(3 * x1 as u64 + 2));
        }
    }
}
