//! Summation of arbitrary graphs by recursive conditioning.
//!
//! Non-decomposable products are replaced by a sum over the values of a shared variable `X`,
//! each branch being the product conditioned on `X = x` times the indicator `[X = x]`.
//! Nodes live in a hash-consed arena, so identical residual sub-functions share one node and
//! one cached sum.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Result, SpfError};
use crate::graph::{
    first_shared, indicator_leaf, restrict_leaf, union_into, Assignment, Domain, GraphBuilder, Node, NodeId,
    Restricted, SpfGraph, VarId, VarSet, VarValue, VariableTable,
};
use crate::semiring::{Semiring, Value};
use crate::summation::{ones_over, sum_decomposable, sum_leaf, SumOptions};
use crate::translate::{translate, TranslateOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum VariableHeuristic {
    /// The variable in the most children's scopes, ties to the smallest index.
    #[default]
    MostShared,
    /// The smallest shared variable.
    FirstIndex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ChildOrder {
    /// Constants, then leaves, then sums, then products, smaller scopes first.
    #[default]
    AbsorbingFirst,
    Declaration,
}

#[derive(Clone, Debug)]
pub struct EngineConfig {
    pub variable_heuristic: VariableHeuristic,
    pub child_order: ChildOrder,
    /// Also Shannon-expand sums that are not known to be deterministic.
    pub enforce_determinism: bool,
    /// Maximum number of nodes the engine may create.
    pub node_budget: usize,
    /// Translate the final graph into this semiring before summing it.
    pub target: Option<Semiring>,
    /// Options for summing registered leaves.
    pub sum: SumOptions,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            variable_heuristic: VariableHeuristic::MostShared,
            child_order: ChildOrder::AbsorbingFirst,
            enforce_determinism: false,
            node_budget: 1_000_000,
            target: None,
            sum: SumOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub cache_hits: u64,
    pub nodes_created: usize,
    /// Shannon expansions of products and of sums.
    pub decompositions: u64,
    pub early_exits: u64,
    /// Branches built across all expansions, before empty ones are dropped.
    pub branches: u64,
}

#[derive(Clone, Debug)]
pub struct EngineOutcome {
    pub value: Value,
    pub stats: EngineStats,
    /// A decomposable graph computing the input's mapping; deterministic when enforced.
    pub graph: SpfGraph,
}

struct Arena {
    semiring: Semiring,
    vars: Arc<VariableTable>,
    nodes: Vec<Node>,
    scopes: Vec<VarSet>,
    det: Vec<bool>,
    intern: HashMap<Node, usize>,
    loaded: usize,
    budget: usize,
}

impl Arena {
    fn new(g: &SpfGraph, budget: usize) -> (Self, Vec<usize>) {
        let mut a = Arena {
            semiring: g.semiring(),
            vars: g.vars_arc(),
            nodes: Vec::new(),
            scopes: Vec::new(),
            det: Vec::new(),
            intern: HashMap::new(),
            loaded: 0,
            budget,
        };
        let mut map = Vec::with_capacity(g.node_count());
        for node in g.nodes() {
            let n = match node {
                Node::Sum(ch) => Node::Sum(ch.iter().map(|c| NodeId(map[c.0])).collect()),
                Node::Product(ch) => Node::Product(ch.iter().map(|c| NodeId(map[c.0])).collect()),
                other => other.clone(),
            };
            let id = a.insert(n);
            map.push(id);
        }
        a.loaded = a.nodes.len();
        (a, map)
    }

    fn created(&self) -> usize {
        self.nodes.len() - self.loaded
    }

    fn insert(&mut self, node: Node) -> usize {
        if let Some(&id) = self.intern.get(&node) {
            return id;
        }
        let scope = match &node {
            Node::Const(_) => Vec::new(),
            Node::Leaf(l) => {
                let mut s = l.scope.clone();
                s.sort();
                s
            }
            Node::Sum(ch) | Node::Product(ch) => {
                let mut s = Vec::new();
                for c in ch {
                    union_into(&mut s, &self.scopes[c.0]);
                }
                s
            }
        };
        let id = self.nodes.len();
        self.nodes.push(node.clone());
        self.scopes.push(scope);
        self.det.push(false);
        self.intern.insert(node, id);
        id
    }

    fn intern(&mut self, node: Node) -> Result<usize> {
        let id = self.insert(node);
        if self.created() > self.budget {
            return Err(SpfError::BudgetExceeded {
                budget: self.budget,
                created: self.created(),
            });
        }
        Ok(id)
    }

    fn constant(&mut self, v: Value) -> Result<usize> {
        self.intern(Node::Const(v))
    }

    fn const_value(&self, id: usize) -> Option<&Value> {
        match &self.nodes[id] {
            Node::Const(v) => Some(v),
            _ => None,
        }
    }

    fn is_zero(&self, id: usize) -> bool {
        self.const_value(id).is_some_and(|v| self.semiring.is_zero(v))
    }

    fn mk_sum(&mut self, children: Vec<usize>, det: bool) -> Result<usize> {
        let s = self.semiring;
        let mut constant: Option<Value> = None;
        let mut nodes = Vec::new();
        for c in children {
            match self.const_value(c) {
                Some(v) if s.is_zero(v) => {}
                Some(v) => {
                    constant = Some(match constant {
                        None => v.clone(),
                        Some(acc) => s.add(&acc, v)?,
                    })
                }
                None => nodes.push(c),
            }
        }
        if let Some(c) = &constant {
            if s.is_add_absorbing(c) {
                return self.constant(c.clone());
            }
        }
        let id = match (constant, nodes.len()) {
            (None, 0) => return self.constant(s.zero()),
            (Some(c), 0) => return self.constant(c),
            (None, 1) => return Ok(nodes[0]),
            (c, _) => {
                if let Some(c) = c {
                    nodes.push(self.constant(c)?);
                }
                self.intern(Node::Sum(nodes.into_iter().map(NodeId).collect()))?
            }
        };
        self.det[id] |= det;
        Ok(id)
    }

    fn mk_product(&mut self, children: Vec<usize>) -> Result<usize> {
        let s = self.semiring;
        let mut constant = s.one();
        let mut nodes = Vec::new();
        for c in children {
            match self.const_value(c) {
                Some(v) if s.is_zero(v) => return self.constant(s.zero()),
                Some(v) => constant = s.mul(&constant, v)?,
                None => nodes.push(c),
            }
        }
        if s.is_zero(&constant) || nodes.is_empty() {
            return self.constant(constant);
        }
        let trivial = s.is_one(&constant);
        if trivial && nodes.len() == 1 {
            return Ok(nodes[0]);
        }
        if !trivial {
            nodes.insert(0, self.constant(constant)?);
        }
        self.intern(Node::Product(nodes.into_iter().map(NodeId).collect()))
    }

    fn children(&self, id: usize) -> Vec<usize> {
        self.nodes[id].children().iter().map(|c| c.0).collect()
    }

    /// Smallest variable shared by two children, and its multiplicity under the heuristic.
    fn pick_shared(&self, children: &[usize], heuristic: VariableHeuristic) -> Option<VarId> {
        let mut counts: HashMap<VarId, usize> = HashMap::new();
        for c in children {
            for v in &self.scopes[*c] {
                *counts.entry(*v).or_default() += 1;
            }
        }
        let finite = |v: &VarId| self.vars.domain(*v).is_finite();
        let candidates = counts.iter().filter(|(v, n)| **n >= 2 && finite(v));
        match heuristic {
            VariableHeuristic::MostShared => candidates
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(v, _)| *v),
            VariableHeuristic::FirstIndex => candidates.map(|(v, _)| *v).min(),
        }
    }

    fn is_decomposable(&self, children: &[usize]) -> bool {
        let mut seen: VarSet = Vec::new();
        for c in children {
            if first_shared(&seen, &self.scopes[*c]).is_some() {
                return false;
            }
            union_into(&mut seen, &self.scopes[*c]);
        }
        true
    }

    /// Groups children into connected components of the shares-a-variable relation.
    fn components(&self, children: &[usize]) -> Vec<Vec<usize>> {
        let n = children.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        let mut owner: HashMap<VarId, usize> = HashMap::new();
        for (i, c) in children.iter().enumerate() {
            for v in &self.scopes[*c] {
                match owner.get(v) {
                    Some(&j) => {
                        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                        if a != b {
                            parent[a.max(b)] = a.min(b);
                        }
                    }
                    None => {
                        owner.insert(*v, i);
                    }
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut index: HashMap<usize, usize> = HashMap::new();
        for (i, c) in children.iter().enumerate() {
            let r = find(&mut parent, i);
            let g = *index.entry(r).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[g].push(*c);
        }
        groups
    }

    fn indicator_guards(&self, id: usize) -> Vec<(VarId, usize)> {
        let s = self.semiring;
        match &self.nodes[id] {
            Node::Leaf(l) => l.indicator_of(s).into_iter().collect(),
            Node::Product(ch) => ch
                .iter()
                .filter_map(|c| match &self.nodes[c.0] {
                    Node::Leaf(l) => l.indicator_of(s),
                    _ => None,
                })
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Children guarded by indicators of one variable at pairwise distinct values.
    fn guarded_deterministic(&self, children: &[usize]) -> bool {
        let guards: Vec<Vec<(VarId, usize)>> = children.iter().map(|c| self.indicator_guards(*c)).collect();
        let Some(first) = guards.first() else {
            return true;
        };
        first.iter().any(|(var, _)| {
            let mut values = Vec::with_capacity(guards.len());
            for g in &guards {
                match g.iter().find(|(v, _)| v == var) {
                    Some((_, t)) => values.push(*t),
                    None => return false,
                }
            }
            values.sort();
            values.windows(2).all(|w| w[0] != w[1])
        })
    }

    fn eval(&self, id: usize, a: &Assignment, memo: &mut HashMap<usize, Value>) -> Result<Value> {
        if let Some(v) = memo.get(&id) {
            return Ok(v.clone());
        }
        let s = self.semiring;
        let v = match &self.nodes[id] {
            Node::Const(v) => v.clone(),
            Node::Leaf(l) => l.eval(s, &self.vars, a)?,
            Node::Sum(ch) => {
                let mut acc = s.zero();
                for c in ch {
                    let x = self.eval(c.0, a, memo)?;
                    acc = s.add(&acc, &x)?;
                }
                acc
            }
            Node::Product(ch) => {
                let mut acc = s.one();
                for c in ch {
                    let x = self.eval(c.0, a, memo)?;
                    acc = s.mul(&acc, &x)?;
                }
                acc
            }
        };
        memo.insert(id, v.clone());
        Ok(v)
    }

    /// Brute-force determinism of a small sum node.
    fn enumerated_deterministic(&self, id: usize, children: &[usize]) -> Result<Option<bool>> {
        const LIMIT: u64 = 256;
        let scope = self.scopes[id].clone();
        if scope.iter().any(|v| !self.vars.domain(*v).is_finite()) {
            return Ok(None);
        }
        let mut det = true;
        let r = crate::graph::enumerate_assignments(&self.vars, &scope, &Assignment::empty(self.vars.len()), LIMIT, |a| {
            let mut memo = HashMap::new();
            let mut nonzero = 0;
            for c in children {
                if !self.semiring.is_zero(&self.eval(*c, a, &mut memo)?) {
                    nonzero += 1;
                }
            }
            det = nonzero <= 1;
            Ok(det)
        });
        match r {
            Ok(()) => Ok(Some(det)),
            Err(SpfError::EnumerationLimit { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

struct Engine<'c> {
    arena: Arena,
    config: &'c EngineConfig,
    stats: EngineStats,
    cache: HashMap<usize, Value>,
    replaced: HashMap<usize, usize>,
    conditioned: HashMap<(usize, VarId, usize), usize>,
}

impl<'c> Engine<'c> {
    fn new(g: &SpfGraph, config: &'c EngineConfig) -> Result<(Self, Vec<usize>)> {
        if config.node_budget == 0 {
            return Err(SpfError::Precondition("node_budget must be positive".into()));
        }
        let (arena, map) = Arena::new(g, config.node_budget);
        Ok((
            Engine {
                arena,
                config,
                stats: EngineStats::default(),
                cache: HashMap::new(),
                replaced: HashMap::new(),
                conditioned: HashMap::new(),
            },
            map,
        ))
    }

    fn condition(&mut self, id: usize, var: VarId, x: usize) -> Result<usize> {
        if self.arena.scopes[id].binary_search(&var).is_err() {
            return Ok(id);
        }
        if let Some(&c) = self.conditioned.get(&(id, var, x)) {
            return Ok(c);
        }
        let out = match self.arena.nodes[id].clone() {
            Node::Const(_) => id,
            Node::Leaf(leaf) => {
                let mut a = Assignment::empty(self.arena.vars.len());
                a.set(var, VarValue::Index(x));
                match restrict_leaf(&leaf, self.arena.semiring, &self.arena.vars, &a)? {
                    Restricted::Unchanged => id,
                    Restricted::Const(v) => self.arena.constant(v)?,
                    Restricted::Leaf(l) => self.arena.intern(Node::Leaf(l))?,
                }
            }
            Node::Sum(ch) => {
                let mut kids = Vec::with_capacity(ch.len());
                for c in ch {
                    kids.push(self.condition(c.0, var, x)?);
                }
                let det = self.arena.det[id];
                self.arena.mk_sum(kids, det)?
            }
            Node::Product(ch) => {
                let mut kids = Vec::with_capacity(ch.len());
                for c in ch {
                    let k = self.condition(c.0, var, x)?;
                    if self.arena.is_zero(k) {
                        kids = vec![k];
                        break;
                    }
                    kids.push(k);
                }
                self.arena.mk_product(kids)?
            }
        };
        self.conditioned.insert((id, var, x), out);
        Ok(out)
    }

    /// Shannon expansion of `id` on `var`: `⊕_x (id | var = x) ⊗ [var = x]`.
    fn expand(&mut self, id: usize, var: VarId) -> Result<usize> {
        let d = match self.arena.vars.domain(var) {
            Domain::Finite(d) => d,
            Domain::Interval(..) => {
                return Err(SpfError::ContinuousDomain(self.arena.vars.name(var).to_string()))
            }
        };
        let mut branches = Vec::with_capacity(d);
        for x in 0..d {
            self.stats.branches += 1;
            let body = match self.arena.nodes[id].clone() {
                Node::Product(ch) => {
                    let mut kids = Vec::with_capacity(ch.len() + 1);
                    let mut zero = false;
                    for c in ch {
                        let k = self.condition(c.0, var, x)?;
                        zero |= self.arena.is_zero(k);
                        kids.push(k);
                        if zero {
                            break;
                        }
                    }
                    if zero {
                        continue;
                    }
                    kids
                }
                _ => {
                    let k = self.condition(id, var, x)?;
                    if self.arena.is_zero(k) {
                        continue;
                    }
                    vec![k]
                }
            };
            let ind = indicator_leaf(self.arena.semiring, &self.arena.vars, var, x);
            let ind = self.arena.intern(Node::Leaf(ind))?;
            let mut kids = body;
            kids.push(ind);
            let b = self.arena.mk_product(kids)?;
            if !self.arena.is_zero(b) {
                branches.push(b);
            }
        }
        self.stats.decompositions += 1;
        self.arena.mk_sum(branches, true)
    }

    fn decompose_product(&mut self, id: usize) -> Result<usize> {
        let ch = self.arena.children(id);
        let var = self
            .arena
            .pick_shared(&ch, self.config.variable_heuristic)
            .ok_or_else(|| {
                SpfError::Unsupported(format!(
                    "product {id} shares only continuous variables and cannot be decomposed"
                ))
            })?;
        self.expand(id, var)
    }

    fn sum_is_deterministic(&mut self, id: usize) -> Result<bool> {
        let ch = self.arena.children(id);
        if ch.len() <= 1 || self.arena.det[id] || self.arena.guarded_deterministic(&ch) {
            return Ok(true);
        }
        let det = self.arena.enumerated_deterministic(id, &ch)? == Some(true);
        self.arena.det[id] |= det;
        Ok(det)
    }

    fn expand_sum(&mut self, id: usize) -> Result<usize> {
        let ch = self.arena.children(id);
        let var = match self.config.variable_heuristic {
            VariableHeuristic::MostShared => {
                let mut counts: HashMap<VarId, usize> = HashMap::new();
                for c in &ch {
                    for v in &self.arena.scopes[*c] {
                        *counts.entry(*v).or_default() += 1;
                    }
                }
                counts
                    .into_iter()
                    .filter(|(v, _)| self.arena.vars.domain(*v).is_finite())
                    .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
                    .map(|(v, _)| v)
            }
            VariableHeuristic::FirstIndex => self.arena.scopes[id]
                .iter()
                .copied()
                .find(|v| self.arena.vars.domain(*v).is_finite()),
        }
        .ok_or_else(|| SpfError::Unsupported(format!("sum {id} has no finite variable to expand")))?;
        self.expand(id, var)
    }

    fn order(&self, children: &mut [usize]) {
        if self.config.child_order == ChildOrder::AbsorbingFirst {
            children.sort_by_key(|c| {
                let rank = match self.arena.nodes[*c] {
                    Node::Const(_) => 0,
                    Node::Leaf(_) => 1,
                    Node::Sum(_) => 2,
                    Node::Product(_) => 3,
                };
                (rank, self.arena.scopes[*c].len(), *c)
            });
        }
    }

    fn correction(&self, parent: &[VarId], child: &[VarId]) -> Result<Option<Value>> {
        let missing = crate::graph::difference(parent, child);
        ones_over(self.arena.semiring, &self.arena.vars, missing)
    }

    fn sum(&mut self, id: usize) -> Result<Value> {
        if let Some(v) = self.cache.get(&id) {
            self.stats.cache_hits += 1;
            return Ok(v.clone());
        }
        let s = self.arena.semiring;
        let z = match self.arena.nodes[id].clone() {
            Node::Const(v) => v,
            Node::Leaf(leaf) => sum_leaf(s, &self.arena.vars, &leaf, id, &self.config.sum, None)?.value,
            Node::Sum(ch) => {
                if self.config.enforce_determinism && !self.sum_is_deterministic(id)? {
                    let r = self.expand_sum(id)?;
                    self.redirect(id, r)?
                } else {
                    let scope = self.arena.scopes[id].clone();
                    let mut acc = s.zero();
                    for c in ch {
                        let zc = self.sum(c.0)?;
                        let child_scope = self.arena.scopes[c.0].clone();
                        let term = match self.correction(&scope, &child_scope)? {
                            None => zc,
                            Some(ones) => s.mul(&zc, &ones)?,
                        };
                        acc = s.add(&acc, &term)?;
                    }
                    acc
                }
            }
            Node::Product(_) => {
                let mut ch = self.arena.children(id);
                if self.arena.is_decomposable(&ch) {
                    self.order(&mut ch);
                    let mut acc = s.one();
                    for c in ch {
                        let zc = self.sum(c)?;
                        if s.is_zero(&zc) {
                            self.stats.early_exits += 1;
                            acc = zc;
                            break;
                        }
                        acc = s.mul(&acc, &zc)?;
                    }
                    acc
                } else {
                    let groups = self.arena.components(&ch);
                    let r = if groups.len() > 1 {
                        let mut parts = Vec::with_capacity(groups.len());
                        for g in groups {
                            parts.push(self.arena.mk_product(g)?);
                        }
                        self.arena.mk_product(parts)?
                    } else {
                        self.decompose_product(id)?
                    };
                    self.redirect(id, r)?
                }
            }
        };
        self.stats.nodes_created = self.arena.created();
        self.cache.insert(id, z.clone());
        Ok(z)
    }

    /// Records that `id` is computed by `r` and returns `id`'s sum.
    fn redirect(&mut self, id: usize, r: usize) -> Result<Value> {
        self.replaced.insert(id, r);
        let zr = self.sum(r)?;
        let scope = self.arena.scopes[id].clone();
        let rscope = self.arena.scopes[r].clone();
        Ok(match self.correction(&scope, &rscope)? {
            None => zr,
            Some(ones) => self.arena.semiring.mul(&zr, &ones)?,
        })
    }

    /// Writes the graph reachable from `root` with replacements applied.
    fn export(&self, root: usize, fold_zeros: bool) -> Result<(SpfGraph, HashMap<usize, NodeId>)> {
        let s = self.arena.semiring;
        let mut b = GraphBuilder::new(s, self.arena.vars.clone());
        let mut map: HashMap<usize, NodeId> = HashMap::new();
        let mut zero: Option<NodeId> = None;
        let mut stack = vec![(root, false)];
        while let Some((id, expanded)) = stack.pop() {
            if map.contains_key(&id) {
                continue;
            }
            if fold_zeros && self.cache.get(&id).is_some_and(|z| s.is_zero(z)) {
                let z = *zero.get_or_insert_with(|| b.zero());
                map.insert(id, z);
                continue;
            }
            if let Some(&r) = self.replaced.get(&id) {
                if let Some(&n) = map.get(&r) {
                    map.insert(id, n);
                } else if expanded {
                    return Err(SpfError::Internal("replacement cycle".into()));
                } else {
                    stack.push((id, true));
                    stack.push((r, false));
                }
                continue;
            }
            let node = &self.arena.nodes[id];
            let ch = node.children();
            let pending: Vec<usize> = ch.iter().map(|c| c.0).filter(|c| !map.contains_key(c)).collect();
            if !pending.is_empty() {
                if expanded {
                    return Err(SpfError::Internal("export cycle".into()));
                }
                stack.push((id, true));
                for c in pending.into_iter().rev() {
                    stack.push((c, false));
                }
                continue;
            }
            let n = match node {
                Node::Sum(ch) => b.push(Node::Sum(ch.iter().map(|c| map[&c.0]).collect())),
                Node::Product(ch) => b.push(Node::Product(ch.iter().map(|c| map[&c.0]).collect())),
                other => b.push(other.clone()),
            };
            map.insert(id, n);
        }
        let r = map[&root];
        let g = b.build(r)?;
        Ok((g, map))
    }
}

/// Sums any graph over finite shared variables.
pub fn sum_spf(g: &SpfGraph, config: &EngineConfig) -> Result<EngineOutcome> {
    let (mut engine, map) = Engine::new(g, config)?;
    let root = map[g.root().0];
    let z = engine.sum(root)?;
    let s = g.semiring();
    let root_scope = engine.arena.scopes[root].clone();
    let outside = g.vars().ids().filter(|v| root_scope.binary_search(v).is_err());
    let mut value = match ones_over(s, g.vars(), outside)? {
        None => z,
        Some(ones) => s.mul(&z, &ones)?,
    };
    engine.stats.nodes_created = engine.arena.created();
    let (exported, _) = engine.export(root, true)?;
    let graph = exported.simplify(&Assignment::empty(g.vars().len()))?;
    if let Some(target) = config.target {
        if target != s {
            let translated = translate(&graph, target, &TranslateOptions::unchecked())?;
            value = sum_decomposable(&translated)?.value;
            return Ok(EngineOutcome {
                value,
                stats: engine.stats,
                graph: translated,
            });
        }
    }
    Ok(EngineOutcome {
        value,
        stats: engine.stats,
        graph,
    })
}

/// Replaces the non-decomposable product `v` by a sum over the values of a shared variable.
///
/// Returns the new node's id in the returned graph. Sub-graphs not mentioning the split
/// variable are shared between branches.
pub fn decompose(g: &SpfGraph, v: NodeId, config: &EngineConfig) -> Result<(NodeId, SpfGraph, EngineStats)> {
    let Node::Product(ch) = g.node(v) else {
        return Err(SpfError::Precondition(format!("node {v} is not a product")));
    };
    if crate::graph::shared_variable(g, ch).is_none() {
        return Err(SpfError::Precondition(format!("product {v} is already decomposable")));
    }
    let (mut engine, map) = Engine::new(g, config)?;
    let target = map[v.0];
    let s = engine.decompose_product(target)?;
    engine.replaced.insert(target, s);
    engine.stats.nodes_created = engine.arena.created();
    let (out, ids) = engine.export(map[g.root().0], false)?;
    let new_id = ids.get(&s).copied().unwrap_or(out.root());
    Ok((new_id, out, engine.stats))
}

/// Compiles a boolean graph into an equivalent decomposable graph whose sums are deterministic.
pub fn make_deterministic_decomposable(g: &SpfGraph, config: &EngineConfig) -> Result<SpfGraph> {
    if g.semiring() != Semiring::Boolean {
        return Err(SpfError::Precondition(format!(
            "determinism enforcement needs a boolean graph, got {}",
            g.semiring()
        )));
    }
    let config = EngineConfig {
        enforce_determinism: true,
        target: None,
        ..config.clone()
    };
    Ok(sum_spf(g, &config)?.graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{compatible, DEFAULT_ENUMERATION_LIMIT};

    fn lit(b: &mut GraphBuilder, v: usize, positive: bool) -> NodeId {
        b.indicator(VarId(v), usize::from(positive))
    }

    fn two_clauses() -> SpfGraph {
        let mut b = GraphBuilder::new(Semiring::Boolean, VariableTable::binary(2));
        let x1 = lit(&mut b, 0, true);
        let nx1 = lit(&mut b, 0, false);
        let x2 = lit(&mut b, 1, true);
        let c1 = b.sum(vec![x1, x2]);
        let c2 = b.sum(vec![nx1, x2]);
        let p = b.product(vec![c1, c2]);
        b.build(p).unwrap()
    }

    #[test]
    fn decomposable_input_needs_no_decomposition() {
        let mut b = GraphBuilder::new(Semiring::Counting, VariableTable::binary(2));
        let a = b.table(&[VarId(0)], vec![Value::nat(1), Value::nat(2)]);
        let c = b.table(&[VarId(1)], vec![Value::nat(3), Value::nat(4)]);
        let p = b.product(vec![a, c]);
        let g = b.build(p).unwrap();
        let out = sum_spf(&g, &EngineConfig::default()).unwrap();
        assert_eq!(out.value, sum_decomposable(&g).unwrap().value);
        assert_eq!(out.stats.decompositions, 0);
    }

    #[test]
    fn satisfiable_cnf() {
        let g = two_clauses();
        let out = sum_spf(&g, &EngineConfig::default()).unwrap();
        assert_eq!(out.value, Value::Bool(true));
        assert!(out.graph.is_decomposable());
        assert!(compatible(&g, &out.graph, DEFAULT_ENUMERATION_LIMIT).unwrap());
    }

    #[test]
    fn counting_models_with_determinism() {
        let g = two_clauses();
        let config = EngineConfig {
            enforce_determinism: true,
            target: Some(Semiring::Counting),
            ..EngineConfig::default()
        };
        assert_eq!(sum_spf(&g, &config).unwrap().value, Value::nat(2));
    }

    #[test]
    fn decompose_repeated_literal() {
        let mut b = GraphBuilder::new(Semiring::Boolean, VariableTable::binary(1));
        let x = lit(&mut b, 0, true);
        let y = lit(&mut b, 0, true);
        let p = b.product(vec![x, y]);
        let g = b.build(p).unwrap();
        let (_, h, stats) = decompose(&g, g.root(), &EngineConfig::default()).unwrap();
        assert_eq!(stats.branches, 2);
        assert!(compatible(&g, &h, DEFAULT_ENUMERATION_LIMIT).unwrap());
    }

    #[test]
    fn decompose_shares_untouched_children() {
        let mut b = GraphBuilder::new(Semiring::Boolean, VariableTable::binary(3));
        let x1 = lit(&mut b, 0, true);
        let nx1 = lit(&mut b, 0, false);
        let x2 = lit(&mut b, 1, true);
        let x3 = lit(&mut b, 2, true);
        let nx3 = lit(&mut b, 2, false);
        let c1 = b.sum(vec![x1, x2]);
        let c2 = b.sum(vec![nx1, x2]);
        let c3 = b.sum(vec![x3, nx3]);
        let p = b.product(vec![c1, c2, c3]);
        let g = b.build(p).unwrap();
        let (s, h, _) = decompose(&g, g.root(), &EngineConfig::default()).unwrap();
        assert!(compatible(&g, &h, DEFAULT_ENUMERATION_LIMIT).unwrap());
        let branches = h.node(s).children().to_vec();
        assert_eq!(branches.len(), 2);
        let shared = |n: NodeId| {
            h.node(n)
                .children()
                .iter()
                .copied()
                .filter(|c| h.scope(*c) == [VarId(2)])
                .collect::<Vec<_>>()
        };
        assert_eq!(shared(branches[0]), shared(branches[1]));
        assert_eq!(shared(branches[0]).len(), 1);
    }

    #[test]
    fn clause_is_made_deterministic() {
        let mut b = GraphBuilder::new(Semiring::Boolean, VariableTable::binary(2));
        let x1 = lit(&mut b, 0, true);
        let x2 = lit(&mut b, 1, true);
        let s = b.sum(vec![x1, x2]);
        let g = b.build(s).unwrap();
        let h = make_deterministic_decomposable(&g, &EngineConfig::default()).unwrap();
        assert!(h.is_decomposable());
        assert!(h.is_deterministic(DEFAULT_ENUMERATION_LIMIT).unwrap());
        assert!(compatible(&g, &h, DEFAULT_ENUMERATION_LIMIT).unwrap());
        assert_eq!(h.sum_count(), 1);
        assert_eq!(h.product_count(), 1);
    }

    #[test]
    fn deterministic_input_is_unchanged() {
        let mut b = GraphBuilder::new(Semiring::Boolean, VariableTable::binary(2));
        let x1 = lit(&mut b, 0, true);
        let nx1 = lit(&mut b, 0, false);
        let x2 = lit(&mut b, 1, true);
        let p = b.product(vec![nx1, x2]);
        let s = b.sum(vec![x1, p]);
        let g = b.build(s).unwrap();
        let h = make_deterministic_decomposable(&g, &EngineConfig::default()).unwrap();
        assert_eq!(h.nodes(), g.nodes());
    }

    #[test]
    fn contradiction_becomes_zero() {
        let mut b = GraphBuilder::new(Semiring::Boolean, VariableTable::binary(1));
        let x = lit(&mut b, 0, true);
        let nx = lit(&mut b, 0, false);
        let p = b.product(vec![x, nx]);
        let g = b.build(p).unwrap();
        let h = make_deterministic_decomposable(&g, &EngineConfig::default()).unwrap();
        assert_eq!(h.node(h.root()), &Node::Const(Value::Bool(false)));
    }

    #[test]
    fn budget_is_enforced() {
        let g = two_clauses();
        let config = EngineConfig {
            node_budget: 1,
            ..EngineConfig::default()
        };
        assert!(matches!(sum_spf(&g, &config), Err(SpfError::BudgetExceeded { .. })));
    }
}
