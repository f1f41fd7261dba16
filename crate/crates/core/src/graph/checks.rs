use num_bigint::BigUint;
use num_traits::ToPrimitive;

use super::{first_shared, Assignment, Node, NodeId, SpfGraph, VarId, VarValue, VariableTable};
use crate::error::{Result, SpfError};

/// Default cap on joint assignments enumerated by brute-force checks.
pub const DEFAULT_ENUMERATION_LIMIT: u64 = 1 << 20;

/// A product node whose children share a variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecomposabilityWitness {
    pub node: NodeId,
    pub variable: VarId,
}

pub(super) fn decomposability_witness(g: &SpfGraph) -> Option<DecomposabilityWitness> {
    for id in g.ids() {
        if let Node::Product(ch) = g.node(id) {
            if let Some(variable) = shared_variable(g, ch) {
                return Some(DecomposabilityWitness { node: id, variable });
            }
        }
    }
    None
}

/// Smallest variable appearing in the scopes of two different children.
pub(crate) fn shared_variable(g: &SpfGraph, children: &[NodeId]) -> Option<VarId> {
    let mut best: Option<VarId> = None;
    for (i, a) in children.iter().enumerate() {
        for b in &children[i + 1..] {
            if let Some(v) = first_shared(g.scope(*a), g.scope(*b)) {
                best = Some(best.map_or(v, |w| w.min(v)));
            }
        }
    }
    best
}

/// Number of joint assignments of `scope`, failing on continuous variables or when above `limit`.
pub(crate) fn joint_size(vars: &VariableTable, scope: &[VarId], limit: u64) -> Result<u64> {
    let mut total = BigUint::from(1u8);
    for v in scope {
        match vars.domain(*v).cardinality() {
            Some(d) => total *= d,
            None => return Err(SpfError::ContinuousDomain(vars.name(*v).to_string())),
        }
    }
    match total.to_u64() {
        Some(n) if n <= limit => Ok(n),
        _ => Err(SpfError::EnumerationLimit {
            needed: total.to_string(),
            limit,
        }),
    }
}

/// Calls `f` on every joint assignment of the finite variables in `scope`, extending `base`.
pub fn enumerate_assignments(
    vars: &VariableTable,
    scope: &[VarId],
    base: &Assignment,
    limit: u64,
    mut f: impl FnMut(&Assignment) -> Result<bool>,
) -> Result<()> {
    joint_size(vars, scope, limit)?;
    let cards: Vec<usize> = scope
        .iter()
        .map(|v| vars.domain(*v).cardinality().unwrap_or(1))
        .collect();
    let mut a = base.clone();
    let mut idx = vec![0usize; scope.len()];
    for v in scope {
        a.set(*v, VarValue::Index(0));
    }
    loop {
        if !f(&a)? {
            return Ok(());
        }
        let mut k = scope.len();
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < cards[k] {
                a.set(scope[k], VarValue::Index(idx[k]));
                break;
            }
            idx[k] = 0;
            a.set(scope[k], VarValue::Index(0));
        }
    }
}

fn filler(vars: &VariableTable) -> Assignment {
    let mut a = Assignment::empty(vars.len());
    for (v, var) in vars.iter() {
        a.set(v, var.domain.first());
    }
    a
}

pub(super) fn is_deterministic(g: &SpfGraph, limit: u64) -> Result<bool> {
    Ok(first_nondeterministic_sum(g, limit)?.is_none())
}

/// The first sum node (in topological order) with two children nonzero on a common assignment.
pub fn first_nondeterministic_sum(g: &SpfGraph, limit: u64) -> Result<Option<NodeId>> {
    let sums: Vec<NodeId> = g
        .ids()
        .filter(|id| matches!(g.node(*id), Node::Sum(ch) if ch.len() > 1))
        .collect();
    if sums.is_empty() {
        return Ok(None);
    }
    let mut union = Vec::new();
    for s in &sums {
        super::union_into(&mut union, g.scope(*s));
    }
    for s in &sums {
        joint_size(g.vars(), g.scope(*s), limit)?;
    }
    let semiring = g.semiring();
    let base = filler(g.vars());
    let overlaps = |values: &[super::Value], s: NodeId| {
        g.node(s)
            .children()
            .iter()
            .filter(|c| !semiring.is_zero(&values[c.0]))
            .count()
            > 1
    };
    if joint_size(g.vars(), &union, limit).is_ok() {
        let mut bad = None;
        enumerate_assignments(g.vars(), &union, &base, limit, |a| {
            let values = g.evaluate_all(a)?;
            bad = sums.iter().copied().find(|s| overlaps(&values, *s));
            Ok(bad.is_none())
        })?;
        if bad.is_some() {
            // smallest offending sum
            for s in &sums {
                if !single_sum_deterministic(g, *s, &base, limit)? {
                    return Ok(Some(*s));
                }
            }
        }
        return Ok(bad);
    }
    for s in &sums {
        if !single_sum_deterministic(g, *s, &base, limit)? {
            return Ok(Some(*s));
        }
    }
    Ok(None)
}

fn single_sum_deterministic(g: &SpfGraph, s: NodeId, base: &Assignment, limit: u64) -> Result<bool> {
    let semiring = g.semiring();
    let mut ok = true;
    enumerate_assignments(g.vars(), g.scope(s), base, limit, |a| {
        let mut nonzero = 0;
        for c in g.node(s).children() {
            if !semiring.is_zero(&g.evaluate_node(*c, a)?) {
                nonzero += 1;
            }
        }
        ok = nonzero <= 1;
        Ok(ok)
    })?;
    Ok(ok)
}

/// True when both graphs compute the same mapping, checked on every joint assignment.
pub fn compatible(g1: &SpfGraph, g2: &SpfGraph, limit: u64) -> Result<bool> {
    if g1.semiring() != g2.semiring() {
        return Err(SpfError::Precondition(
            "compatible requires graphs over the same semiring".to_string(),
        ));
    }
    if g1.vars() != g2.vars() {
        return Err(SpfError::Precondition(
            "compatible requires graphs over the same variable table".to_string(),
        ));
    }
    let all: Vec<VarId> = g1.vars().ids().collect();
    let mut same = true;
    enumerate_assignments(g1.vars(), &all, &Assignment::empty(all.len()), limit, |a| {
        same = g1.evaluate(a)?.approx_eq(&g2.evaluate(a)?);
        Ok(same)
    })?;
    Ok(same)
}
