//! Linear-time summation of decomposable graphs, evidence, argument extraction and the cost model.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SpfError};
use crate::graph::{Assignment, Domain, GraphBuilder, Leaf, LeafBody, Node, NodeId, SpfGraph, VarId, VarValue, VariableTable};
use crate::optimize::{multistart_descent, DescentConfig, Objective};
use crate::semiring::{Semiring, Value};

/// How registered leaves are summed and which variables stay outside the root correction.
#[derive(Clone, Debug)]
pub struct SumOptions {
    /// Local descent settings for leaves summed by minimization or maximization.
    pub descent: DescentConfig,
    /// Random starts per optimized leaf.
    pub restarts: usize,
    pub seed: u64,
    /// Wall-clock budget shared by all leaf optimizations; every leaf still gets one start.
    pub budget: Option<Duration>,
    /// Variables fixed by evidence; they are not summed at the root.
    pub fixed: Vec<VarId>,
}

impl Default for SumOptions {
    fn default() -> Self {
        Self {
            descent: DescentConfig::default(),
            restarts: 16,
            seed: 0,
            budget: None,
            fixed: Vec::new(),
        }
    }
}

/// Instrumented operation counts of one summation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounts {
    /// All `⊕` operations: one per sum edge and one per folded leaf entry.
    pub adds: u64,
    /// All `⊗` operations: one per product edge and one per correction.
    pub muls: u64,
    /// Leaf function evaluations (table lookups, closed forms or optimizer starts).
    pub leaf_evals: u64,
    /// Folds at internal nodes, one per edge.
    pub edge_ops: u64,
    /// Folds over leaf domains.
    pub leaf_adds: u64,
    /// Multiplications by a sum of ones at sum nodes.
    pub correction_muls: u64,
    /// `|X_v \ X_c|·d` summed over corrected children; the cost of forming the sums of ones.
    pub identity_adds: u64,
}

#[derive(Clone, Debug)]
pub struct SummationResult {
    /// Sum over every variable of the table except the fixed ones.
    pub value: Value,
    /// Sum over the root's own scope.
    pub root_value: Value,
    /// Per-node sums over each node's own scope.
    pub memo: Vec<Value>,
    pub op_counts: OpCounts,
    /// Optimizer restarts used across all leaves.
    pub restarts_used: usize,
    leaf_args: HashMap<usize, Vec<f64>>,
}

impl SummationResult {
    /// Optimal point recorded for a registered leaf summed by optimization.
    pub fn leaf_argument(&self, node: NodeId) -> Option<&[f64]> {
        self.leaf_args.get(&node.0).map(Vec::as_slice)
    }
}

/// The product of the cardinalities of `vars`, or a typed error for continuous variables in
/// non-idempotent semirings.
pub(crate) fn ones_over(
    semiring: Semiring,
    table: &VariableTable,
    vars: impl IntoIterator<Item = VarId>,
) -> Result<Option<Value>> {
    let mut k = BigUint::from(1u8);
    let mut any = false;
    for v in vars {
        any = true;
        match table.domain(v) {
            Domain::Finite(d) => k *= d,
            Domain::Interval(..) if semiring.is_idempotent() => {}
            Domain::Interval(..) => {
                return Err(SpfError::ContinuousSum {
                    semiring,
                    variable: table.name(v).to_string(),
                })
            }
        }
    }
    if !any || semiring.is_idempotent() {
        return Ok(None);
    }
    Ok(Some(semiring.sum_of_ones(&k)?))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent seed for stream `index` of `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix(seed ^ splitmix(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

struct LeafObjective<'a> {
    leaf: &'a Leaf,
    params: &'a [f64],
    sign: f64,
}

impl Objective for LeafObjective<'_> {
    fn dim(&self) -> usize {
        self.leaf.scope.len()
    }

    fn value(&self, y: &[f64]) -> f64 {
        let LeafBody::Registered(f) = &self.leaf.body else { unreachable!() };
        self.sign * f.family().eval(self.params, y)
    }

    fn value_grad(&self, y: &[f64], grad: &mut [f64]) -> f64 {
        let LeafBody::Registered(f) = &self.leaf.body else { unreachable!() };
        let v = f
            .family()
            .gradient(self.params, y, grad)
            .expect("gradient availability checked");
        for g in grad.iter_mut() {
            *g *= self.sign;
        }
        self.sign * v
    }
}

pub(crate) struct LeafSum {
    pub value: Value,
    pub evals: u64,
    pub adds: u64,
    pub argument: Option<Vec<f64>>,
    pub restarts: usize,
}

/// `⊕` of a leaf over its scope.
pub(crate) fn sum_leaf(
    semiring: Semiring,
    vars: &VariableTable,
    leaf: &Leaf,
    node: usize,
    opts: &SumOptions,
    deadline: Option<Instant>,
) -> Result<LeafSum> {
    match &leaf.body {
        LeafBody::Table(values) => {
            let mut acc = semiring.zero();
            for v in values {
                acc = semiring.add(&acc, v)?;
            }
            Ok(LeafSum {
                value: acc,
                evals: values.len() as u64,
                adds: values.len() as u64,
                argument: None,
                restarts: 0,
            })
        }
        LeafBody::Registered(f) => {
            let bounds: Vec<(f64, f64)> = leaf
                .scope
                .iter()
                .map(|v| match vars.domain(*v) {
                    Domain::Interval(lo, hi) => (lo, hi),
                    Domain::Finite(d) => (0.0, d as f64 - 1.0),
                })
                .collect();
            let not_summable = |detail: &str| SpfError::NotSummable {
                node,
                detail: format!("`{}` {detail} in {semiring}", f.name),
            };
            let sign = match semiring {
                Semiring::SumProduct => {
                    let total = f
                        .family()
                        .integral(&f.params, &bounds)
                        .ok_or_else(|| not_summable("has no closed-form integral"))?;
                    return Ok(LeafSum {
                        value: semiring.from_f64(total)?,
                        evals: 1,
                        adds: 0,
                        argument: None,
                        restarts: 0,
                    });
                }
                Semiring::MinSum | Semiring::WeightedCsp => 1.0,
                Semiring::MaxSum | Semiring::MaxProduct | Semiring::Fuzzy => -1.0,
                _ => return Err(not_summable("cannot be summed")),
            };
            let mut probe = vec![0.0; bounds.len()];
            let mid: Vec<f64> = bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
            if f.family().gradient(&f.params, &mid, &mut probe).is_none() {
                return Err(not_summable("has no gradient"));
            }
            let obj = LeafObjective {
                leaf,
                params: &f.params,
                sign,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, node as u64));
            let budget = deadline.map(|d| d.saturating_duration_since(Instant::now()));
            let best = multistart_descent(&obj, &bounds, opts.restarts.max(1), budget, &opts.descent, &mut rng);
            Ok(LeafSum {
                value: semiring.from_f64(sign * best.value)?,
                evals: best.restarts_used as u64,
                adds: 0,
                argument: Some(best.y),
                restarts: best.restarts_used,
            })
        }
    }
}

/// Sums a decomposable graph in one bottom-up pass with default options.
pub fn sum_decomposable(g: &SpfGraph) -> Result<SummationResult> {
    sum_decomposable_with(g, &SumOptions::default())
}

pub fn sum_decomposable_with(g: &SpfGraph, opts: &SumOptions) -> Result<SummationResult> {
    g.require_decomposable()?;
    let s = g.semiring();
    let vars = g.vars();
    let deadline = opts.budget.map(|b| Instant::now() + b);
    let mut memo: Vec<Value> = Vec::with_capacity(g.node_count());
    let mut ops = OpCounts::default();
    let mut leaf_args = HashMap::new();
    let mut restarts_used = 0;
    for id in g.ids() {
        let z = match g.node(id) {
            Node::Const(v) => v.clone(),
            Node::Leaf(leaf) => {
                let r = sum_leaf(s, vars, leaf, id.0, opts, deadline)?;
                ops.leaf_evals += r.evals;
                ops.leaf_adds += r.adds;
                ops.adds += r.adds;
                restarts_used += r.restarts;
                if let Some(arg) = r.argument {
                    leaf_args.insert(id.0, arg);
                }
                r.value
            }
            Node::Product(ch) => {
                let mut acc = s.one();
                for c in ch {
                    acc = s.mul(&acc, &memo[c.0])?;
                    ops.muls += 1;
                    ops.edge_ops += 1;
                }
                acc
            }
            Node::Sum(ch) => {
                let scope = g.scope(id);
                let mut acc = s.zero();
                for c in ch {
                    let missing = crate::graph::difference(scope, g.scope(*c));
                    let term = match ones_over(s, vars, missing.iter().copied())? {
                        None => memo[c.0].clone(),
                        Some(ones) => {
                            ops.muls += 1;
                            ops.correction_muls += 1;
                            ops.identity_adds += missing
                                .iter()
                                .map(|v| vars.domain(*v).cardinality().unwrap_or(0) as u64)
                                .sum::<u64>();
                            s.mul(&memo[c.0], &ones)?
                        }
                    };
                    acc = s.add(&acc, &term)?;
                    ops.adds += 1;
                    ops.edge_ops += 1;
                }
                acc
            }
        };
        memo.push(z);
    }
    let root_value = memo[g.root().0].clone();
    let root_scope = g.scope(g.root());
    let outside = vars
        .ids()
        .filter(|v| root_scope.binary_search(v).is_err() && !opts.fixed.contains(v));
    let value = match ones_over(s, vars, outside)? {
        None => root_value.clone(),
        Some(ones) => s.mul(&root_value, &ones)?,
    };
    Ok(SummationResult {
        value,
        root_value,
        memo,
        op_counts: ops,
        restarts_used,
        leaf_args,
    })
}

/// Replaces every evidenced leaf by its value, currying partially evidenced tables.
///
/// Node ids and structure are preserved.
pub fn set_evidence(g: &SpfGraph, e: &Assignment) -> Result<SpfGraph> {
    use crate::graph::{restrict_leaf, Restricted};
    e.validate(g.vars())?;
    let mut b = GraphBuilder::new(g.semiring(), g.vars_arc());
    for node in g.nodes() {
        let node = match node {
            Node::Leaf(leaf) => match restrict_leaf(leaf, g.semiring(), g.vars(), e)? {
                Restricted::Unchanged => Node::Leaf(leaf.clone()),
                Restricted::Const(v) => Node::Const(v),
                Restricted::Leaf(l) => Node::Leaf(l),
            },
            other => other.clone(),
        };
        b.push(node);
    }
    b.build(g.root())
}

/// Downward pass recovering an assignment that attains `result.value`.
///
/// Sums select their first child whose value equals the node's value, products select all
/// children, leaves pick the first domain value attaining their sum. Variables left free
/// take their domain's first value.
pub fn extract_argument(g: &SpfGraph, result: &SummationResult) -> Result<Assignment> {
    let s = g.semiring();
    if !s.is_idempotent() {
        return Err(SpfError::NotIdempotent(s));
    }
    if s == Semiring::Boolean && s.is_zero(&result.root_value) {
        return Err(SpfError::NoWitness);
    }
    let vars = g.vars();
    let mut a = Assignment::empty(vars.len());
    let mut seen = vec![false; g.node_count()];
    let mut stack = vec![g.root()];
    seen[g.root().0] = true;
    while let Some(id) = stack.pop() {
        let target = &result.memo[id.0];
        match g.node(id) {
            Node::Const(_) => {}
            Node::Product(ch) => {
                for c in ch {
                    if !seen[c.0] {
                        seen[c.0] = true;
                        stack.push(*c);
                    }
                }
            }
            Node::Sum(ch) => {
                let pick = ch
                    .iter()
                    .find(|c| result.memo[c.0] == *target)
                    .or_else(|| ch.iter().find(|c| result.memo[c.0].approx_eq(target)))
                    .ok_or_else(|| SpfError::Internal(format!("sum node {id} has no active child")))?;
                if !seen[pick.0] {
                    seen[pick.0] = true;
                    stack.push(*pick);
                }
            }
            Node::Leaf(leaf) => match &leaf.body {
                LeafBody::Table(values) => {
                    let pos = values
                        .iter()
                        .position(|v| v == target)
                        .or_else(|| values.iter().position(|v| v.approx_eq(target)))
                        .ok_or_else(|| SpfError::Internal(format!("leaf {id} misses its sum")))?;
                    let mut rest = pos;
                    for v in leaf.scope.iter().rev() {
                        let d = vars.domain(*v).cardinality().unwrap_or(1);
                        if !a.is_set(*v) {
                            a.set(*v, VarValue::Index(rest % d));
                        }
                        rest /= d;
                    }
                }
                LeafBody::Registered(_) => {
                    let y = result.leaf_argument(id).ok_or_else(|| {
                        SpfError::Unsupported(format!("leaf {id} was not summed by optimization"))
                    })?;
                    for (v, x) in leaf.scope.iter().zip(y) {
                        if !a.is_set(*v) {
                            a.set(*v, VarValue::Real(*x));
                        }
                    }
                }
            },
        }
    }
    for (v, var) in vars.iter() {
        if !a.is_set(v) {
            a.set(v, var.domain.first());
        }
    }
    Ok(a)
}

/// The worst-case summation cost `|S|·c + |S_leaf|·d(e+c) + |S_sum|·(c + k·d·c)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostEstimate {
    pub total: f64,
    /// `|S|·c`
    pub edges: f64,
    /// `|S_leaf|·d·(e+c)`
    pub leaves: f64,
    /// `|S_sum|·(c + k·d·c)`, zero for idempotent semirings.
    pub sums: f64,
    /// Largest `|X_v \ X_c|` over sum nodes `v` and children `c`.
    pub k: usize,
    /// Uniform cardinality.
    pub d: usize,
}

pub fn estimate_cost(g: &SpfGraph, c: f64, e: f64) -> Result<CostEstimate> {
    let vars = g.vars();
    let mut d = None;
    for (_, var) in vars.iter() {
        match var.domain {
            Domain::Finite(x) => match d {
                None => d = Some(x),
                Some(y) if y != x => return Err(SpfError::MixedCardinality),
                _ => {}
            },
            Domain::Interval(..) => return Err(SpfError::ContinuousDomain(var.name.clone())),
        }
    }
    let d = d.unwrap_or(1);
    let mut k = 0;
    for id in g.ids() {
        if let Node::Sum(ch) = g.node(id) {
            for child in ch {
                k = k.max(crate::graph::difference(g.scope(id), g.scope(*child)).len());
            }
        }
    }
    let df = d as f64;
    let edges = g.size() as f64 * c;
    let leaves = g.leaf_count() as f64 * df * (e + c);
    let sums = if g.semiring().is_idempotent() {
        0.0
    } else {
        g.sum_count() as f64 * (c + k as f64 * df * c)
    };
    Ok(CostEstimate {
        total: edges + leaves + sums,
        edges,
        leaves,
        sums,
        k,
        d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_flat_mixture;

    #[test]
    fn constant_graph() {
        let mut b = GraphBuilder::new(Semiring::Counting, VariableTable::new());
        let c = b.constant(Value::nat(7));
        let g = b.build(c).unwrap();
        assert_eq!(sum_decomposable(&g).unwrap().value, Value::nat(7));
    }

    #[test]
    fn boolean_clause() {
        let mut b = GraphBuilder::new(Semiring::Boolean, VariableTable::binary(2));
        let x1 = b.indicator(VarId(0), 1);
        let x2 = b.indicator(VarId(1), 1);
        let s = b.sum(vec![x1, x2]);
        let g = b.build(s).unwrap();
        let r = sum_decomposable(&g).unwrap();
        assert_eq!(r.value, Value::Bool(true));
        let a = extract_argument(&g, &r).unwrap();
        assert_eq!(g.evaluate(&a).unwrap(), Value::Bool(true));
    }

    #[test]
    fn counting_flat_mixture() {
        let s = Semiring::Counting;
        let t = vec![vec![vec![s.one(); 2]; 2]; 2];
        let g = build_flat_mixture(s, VariableTable::binary(2), 2, 2, &t).unwrap();
        assert_eq!(sum_decomposable(&g).unwrap().value, Value::nat(8));
    }

    #[test]
    fn non_decomposable_is_rejected() {
        let mut b = GraphBuilder::new(Semiring::Boolean, VariableTable::binary(1));
        let a = b.indicator(VarId(0), 1);
        let c = b.indicator(VarId(0), 0);
        let p = b.product(vec![a, c]);
        let g = b.build(p).unwrap();
        assert!(matches!(sum_decomposable(&g), Err(SpfError::NotDecomposable { .. })));
    }

    #[test]
    fn continuous_correction_is_rejected() {
        let mut vars = VariableTable::new();
        let y = vars.add_interval("y", 0.0, 1.0).unwrap();
        let z = vars.add_interval("z", 0.0, 1.0).unwrap();
        let mut b = GraphBuilder::new(Semiring::SumProduct, vars);
        let f = b.registered("polynomial", &[y], vec![1.0]).unwrap();
        let h = b.registered("polynomial", &[z], vec![1.0]).unwrap();
        let s = b.sum(vec![f, h]);
        let g = b.build(s).unwrap();
        assert!(matches!(sum_decomposable(&g), Err(SpfError::ContinuousSum { .. })));
    }

    #[test]
    fn min_sum_product_argument() {
        let mut b = GraphBuilder::new(Semiring::MinSum, VariableTable::finite(2, 3));
        let t1 = b.table_f64(&[VarId(0)], &[4.0, 1.0, 2.5]).unwrap();
        let t2 = b.table_f64(&[VarId(1)], &[0.5, 3.0, 0.2]).unwrap();
        let p = b.product(vec![t1, t2]);
        let g = b.build(p).unwrap();
        let r = sum_decomposable(&g).unwrap();
        assert!(r.value.approx_eq(&Value::Real(1.2)));
        let a = extract_argument(&g, &r).unwrap();
        assert_eq!(a, Assignment::from_indices(&[1, 2]));
    }

    #[test]
    fn cost_examples() {
        let mut b = GraphBuilder::new(Semiring::Counting, VariableTable::binary(1));
        let l = b.table(&[VarId(0)], vec![Value::nat(1), Value::nat(2)]);
        let g = b.build(l).unwrap();
        let est = estimate_cost(&g, 1.0, 1.0).unwrap();
        assert_eq!(est.total, 4.0);

        let s = Semiring::Counting;
        let t = vec![vec![vec![s.one(); 2]; 2]; 2];
        let g = build_flat_mixture(s, VariableTable::binary(2), 2, 2, &t).unwrap();
        let est = estimate_cost(&g, 1.0, 1.0).unwrap();
        assert_eq!((est.edges, est.leaves, est.sums, est.k), (6.0, 16.0, 1.0, 0));
        assert_eq!(est.total, 23.0);

        let mut vars = VariableTable::binary(1);
        vars.add_finite("t", 3).unwrap();
        let mut b = GraphBuilder::new(Semiring::MinSum, vars);
        let l = b.indicator(VarId(1), 0);
        let g = b.build(l).unwrap();
        assert!(matches!(estimate_cost(&g, 1.0, 1.0), Err(SpfError::MixedCardinality)));
    }

    #[test]
    fn evidence_keeps_structure() {
        let mut b = GraphBuilder::new(Semiring::SumProduct, VariableTable::binary(2));
        let i0 = b.indicator(VarId(0), 0);
        let i1 = b.indicator(VarId(0), 1);
        let y = b.table_f64(&[VarId(1)], &[0.25, 0.75]).unwrap();
        let p0 = b.product(vec![i0, y]);
        let p1 = b.product(vec![i1, y]);
        let s = b.sum(vec![p0, p1]);
        let g = b.build(s).unwrap();
        let mut e = Assignment::empty(2);
        e.set(VarId(0), VarValue::Index(1));
        let h = set_evidence(&g, &e).unwrap();
        assert_eq!(h.node_count(), g.node_count());
        assert_eq!(h.node(NodeId(0)), &Node::Const(Value::Real(0.0)));
        assert_eq!(h.node(NodeId(1)), &Node::Const(Value::Real(1.0)));
    }
}
