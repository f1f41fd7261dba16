//! Sum-product function DAGs: variables, nodes, assignments, scopes and evaluation.

mod checks;
pub mod json;
mod mixture;
pub mod registry;
mod simplify;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

pub use checks::{
    compatible, enumerate_assignments, first_nondeterministic_sum, DecomposabilityWitness, DEFAULT_ENUMERATION_LIMIT,
};
pub use mixture::build_flat_mixture;
pub(crate) use checks::shared_variable;
pub(crate) use simplify::{restrict_leaf, Restricted};
pub use registry::LeafFamily;

use crate::error::{Result, SpfError};
use crate::semiring::{Semiring, Value};

/// Index of a variable in a [`VariableTable`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// Index of a node in an [`SpfGraph`]; children always have smaller ids than parents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    Finite(usize),
    Interval(f64, f64),
}

impl Domain {
    pub fn is_finite(&self) -> bool {
        matches!(self, Domain::Finite(_))
    }

    pub fn cardinality(&self) -> Option<usize> {
        match self {
            Domain::Finite(d) => Some(*d),
            Domain::Interval(..) => None,
        }
    }

    /// First value of the domain: index 0 or the interval's lower bound.
    pub fn first(&self) -> VarValue {
        match self {
            Domain::Finite(_) => VarValue::Index(0),
            Domain::Interval(lo, _) => VarValue::Real(*lo),
        }
    }

    pub fn contains(&self, v: &VarValue) -> bool {
        match (self, v) {
            (Domain::Finite(d), VarValue::Index(i)) => i < d,
            (Domain::Interval(lo, hi), VarValue::Real(x)) => *lo <= *x && *x <= *hi,
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub domain: Domain,
}

/// Ordered, name-unique list of variables.
#[derive(Clone, Debug, Default)]
pub struct VariableTable {
    vars: Vec<Variable>,
    by_name: HashMap<String, VarId>,
}

impl PartialEq for VariableTable {
    fn eq(&self, other: &Self) -> bool {
        self.vars == other.vars
    }
}

impl VariableTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable; finite domains need at least two values.
    pub fn add(&mut self, name: &str, domain: Domain) -> Result<VarId> {
        if let Domain::Finite(d) = domain {
            if d < 2 {
                return Err(SpfError::InvalidDomain {
                    name: name.to_string(),
                    detail: format!("finite cardinality {d} < 2 (declare unary variables explicitly)"),
                });
            }
        }
        self.push(name, domain)
    }

    /// Adds a variable with a single value.
    pub fn add_unary(&mut self, name: &str) -> Result<VarId> {
        self.push(name, Domain::Finite(1))
    }

    pub fn add_finite(&mut self, name: &str, d: usize) -> Result<VarId> {
        self.add(name, Domain::Finite(d))
    }

    pub fn add_interval(&mut self, name: &str, lo: f64, hi: f64) -> Result<VarId> {
        self.add(name, Domain::Interval(lo, hi))
    }

    fn push(&mut self, name: &str, domain: Domain) -> Result<VarId> {
        if let Domain::Interval(lo, hi) = domain {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(SpfError::InvalidDomain {
                    name: name.to_string(),
                    detail: format!("interval [{lo}, {hi}] needs finite lo < hi"),
                });
            }
        }
        if self.by_name.contains_key(name) {
            return Err(SpfError::DuplicateVariable(name.to_string()));
        }
        let id = VarId(self.vars.len());
        self.vars.push(Variable {
            name: name.to_string(),
            domain,
        });
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    /// `n` binary variables named `x1..xn`.
    pub fn binary(n: usize) -> Self {
        Self::finite(n, 2)
    }

    /// `n` variables of cardinality `d` named `x1..xn`.
    pub fn finite(n: usize, d: usize) -> Self {
        let mut t = Self::new();
        for i in 1..=n {
            t.add_finite(&format!("x{i}"), d).expect("fresh names");
        }
        t
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn get(&self, v: VarId) -> &Variable {
        &self.vars[v.0]
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.vars[v.0].name
    }

    pub fn domain(&self, v: VarId) -> Domain {
        self.vars[v.0].domain
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<VarId> {
        self.lookup(name)
            .ok_or_else(|| SpfError::UnknownVariable(name.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = VarId> {
        (0..self.vars.len()).map(VarId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, &Variable)> {
        self.vars.iter().enumerate().map(|(i, v)| (VarId(i), v))
    }
}

/// The value of one variable: a finite index or a real number.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VarValue {
    Index(usize),
    Real(f64),
}

impl VarValue {
    pub fn index(&self) -> Option<usize> {
        match self {
            VarValue::Index(i) => Some(*i),
            VarValue::Real(_) => None,
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            VarValue::Index(i) => *i as f64,
            VarValue::Real(x) => *x,
        }
    }
}

impl fmt::Display for VarValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarValue::Index(i) => write!(f, "{i}"),
            VarValue::Real(x) => write!(f, "{x}"),
        }
    }
}

/// A possibly partial assignment of values to variables.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Assignment {
    values: Vec<Option<VarValue>>,
}

impl Assignment {
    pub fn empty(n: usize) -> Self {
        Self {
            values: vec![None; n],
        }
    }

    /// Full assignment of finite indices, one per variable.
    pub fn from_indices(indices: &[usize]) -> Self {
        Self {
            values: indices.iter().map(|&i| Some(VarValue::Index(i))).collect(),
        }
    }

    pub fn from_reals(xs: &[f64]) -> Self {
        Self {
            values: xs.iter().map(|&x| Some(VarValue::Real(x))).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.iter().all(Option::is_none)
    }

    pub fn get(&self, v: VarId) -> Option<VarValue> {
        self.values.get(v.0).copied().flatten()
    }

    pub fn is_set(&self, v: VarId) -> bool {
        self.get(v).is_some()
    }

    pub fn set(&mut self, v: VarId, value: VarValue) {
        if self.values.len() <= v.0 {
            self.values.resize(v.0 + 1, None);
        }
        self.values[v.0] = Some(value);
    }

    pub fn unset(&mut self, v: VarId) {
        if v.0 < self.values.len() {
            self.values[v.0] = None;
        }
    }

    pub fn index(&self, v: VarId) -> Option<usize> {
        self.get(v).and_then(|x| x.index())
    }

    pub fn assigned(&self) -> impl Iterator<Item = (VarId, VarValue)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|x| (VarId(i), x)))
    }

    /// Union of two assignments; values in `other` win.
    pub fn merged(&self, other: &Assignment) -> Assignment {
        let mut out = self.clone();
        for (v, x) in other.assigned() {
            out.set(v, x);
        }
        out
    }

    /// Checks that every assigned value lies in its domain.
    pub fn validate(&self, vars: &VariableTable) -> Result<()> {
        if self.values.len() > vars.len() && self.values[vars.len()..].iter().any(Option::is_some) {
            return Err(SpfError::InvalidAssignment(
                "assignment mentions a variable outside the table".to_string(),
            ));
        }
        for (v, x) in self.assigned() {
            let var = vars.get(v);
            if !var.domain.contains(&x) {
                return Err(SpfError::InvalidAssignment(format!(
                    "value {x} outside the domain of `{}`",
                    var.name
                )));
            }
        }
        Ok(())
    }

    /// Parses `name=value` pairs separated by commas.
    pub fn parse(text: &str, vars: &VariableTable) -> Result<Assignment> {
        let mut a = Assignment::empty(vars.len());
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, value) = part.split_once('=').ok_or_else(|| {
                SpfError::InvalidAssignment(format!("expected name=value, got `{part}`"))
            })?;
            let v = vars.require(name.trim())?;
            let value = value.trim();
            let x = match vars.domain(v) {
                Domain::Finite(_) => VarValue::Index(value.parse().map_err(|_| {
                    SpfError::InvalidAssignment(format!("`{value}` is not an index"))
                })?),
                Domain::Interval(..) => VarValue::Real(value.parse().map_err(|_| {
                    SpfError::InvalidAssignment(format!("`{value}` is not a number"))
                })?),
            };
            a.set(v, x);
        }
        a.validate(vars)?;
        Ok(a)
    }
}

/// A sorted set of variables.
pub type VarSet = Vec<VarId>;

pub(crate) fn union_into(acc: &mut VarSet, other: &[VarId]) {
    if other.is_empty() {
        return;
    }
    let mut out = Vec::with_capacity(acc.len() + other.len());
    let (mut i, mut j) = (0, 0);
    while i < acc.len() && j < other.len() {
        match acc[i].cmp(&other[j]) {
            std::cmp::Ordering::Less => {
                out.push(acc[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(other[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(acc[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&acc[i..]);
    out.extend_from_slice(&other[j..]);
    *acc = out;
}

pub(crate) fn difference(a: &[VarId], b: &[VarId]) -> VarSet {
    a.iter().filter(|v| b.binary_search(v).is_err()).copied().collect()
}

pub(crate) fn first_shared(a: &[VarId], b: &[VarId]) -> Option<VarId> {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return Some(a[i]),
        }
    }
    None
}

/// A leaf function backed by the global registry.
#[derive(Clone)]
pub struct RegisteredFn {
    pub name: String,
    pub params: Vec<f64>,
    pub(crate) family: Arc<dyn LeafFamily>,
}

impl RegisteredFn {
    pub fn resolve(name: &str, params: Vec<f64>) -> Result<Self> {
        let family = registry::lookup(name)?;
        Ok(Self {
            name: name.to_string(),
            params,
            family,
        })
    }

    pub fn family(&self) -> &dyn LeafFamily {
        self.family.as_ref()
    }
}

impl Eq for RegisteredFn {}

impl Hash for RegisteredFn {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.name.hash(state);
        for p in &self.params {
            p.to_bits().hash(state);
        }
    }
}

impl fmt::Debug for RegisteredFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RegisteredFn")
            .field("name", &self.name)
            .field("params", &self.params)
            .finish()
    }
}

impl PartialEq for RegisteredFn {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.params.len() == other.params.len()
            && self
                .params
                .iter()
                .zip(&other.params)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum LeafBody {
    /// Row-major values over the scope, first scope variable most significant.
    Table(Vec<Value>),
    Registered(RegisteredFn),
}

/// A leaf function over an ordered scope.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Leaf {
    pub scope: Vec<VarId>,
    pub body: LeafBody,
}

impl Leaf {
    /// Row-major index of a table entry for the given per-scope indices.
    pub fn table_index(&self, vars: &VariableTable, indices: &[usize]) -> usize {
        let mut idx = 0;
        for (v, &i) in self.scope.iter().zip(indices) {
            idx = idx * vars.domain(*v).cardinality().unwrap_or(1) + i;
        }
        idx
    }

    pub fn eval(&self, semiring: Semiring, vars: &VariableTable, a: &Assignment) -> Result<Value> {
        match &self.body {
            LeafBody::Table(values) => {
                let mut idx = 0;
                for v in &self.scope {
                    let d = vars.domain(*v).cardinality().unwrap_or(1);
                    let i = match a.get(*v) {
                        Some(VarValue::Index(i)) if i < d => i,
                        Some(x) => {
                            return Err(SpfError::InvalidAssignment(format!(
                                "value {x} outside the domain of `{}`",
                                vars.name(*v)
                            )))
                        }
                        None => {
                            return Err(SpfError::InvalidAssignment(format!(
                                "missing variable `{}`",
                                vars.name(*v)
                            )))
                        }
                    };
                    idx = idx * d + i;
                }
                Ok(values[idx].clone())
            }
            LeafBody::Registered(f) => {
                let mut y = Vec::with_capacity(self.scope.len());
                for v in &self.scope {
                    match a.get(*v) {
                        Some(x) => y.push(x.as_f64()),
                        None => {
                            return Err(SpfError::InvalidAssignment(format!(
                                "missing variable `{}`",
                                vars.name(*v)
                            )))
                        }
                    }
                }
                let value = semiring.from_f64(f.family.eval(&f.params, &y))?;
                Ok(value)
            }
        }
    }

    /// True for a table leaf over one variable that is `one` at exactly one index and zero elsewhere.
    pub fn indicator_of(&self, semiring: Semiring) -> Option<(VarId, usize)> {
        match &self.body {
            LeafBody::Table(values) if self.scope.len() == 1 => {
                let mut hit = None;
                for (i, v) in values.iter().enumerate() {
                    if semiring.is_one(v) {
                        if hit.is_some() {
                            return None;
                        }
                        hit = Some(i);
                    } else if !semiring.is_zero(v) {
                        return None;
                    }
                }
                hit.map(|i| (self.scope[0], i))
            }
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Sum(Vec<NodeId>),
    Product(Vec<NodeId>),
    Const(Value),
    Leaf(Leaf),
}

impl Node {
    pub fn children(&self) -> &[NodeId] {
        match self {
            Node::Sum(c) | Node::Product(c) => c,
            _ => &[],
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Node::Sum(_) => "sum",
            Node::Product(_) => "product",
            Node::Const(_) => "const",
            Node::Leaf(_) => "leaf",
        }
    }
}

/// An immutable rooted DAG computing a function from variable assignments to semiring values.
#[derive(Clone, Debug)]
pub struct SpfGraph {
    semiring: Semiring,
    vars: Arc<VariableTable>,
    nodes: Vec<Node>,
    scopes: Vec<VarSet>,
    root: NodeId,
}

impl SpfGraph {
    pub fn semiring(&self) -> Semiring {
        self.semiring
    }

    pub fn vars(&self) -> &VariableTable {
        &self.vars
    }

    pub fn vars_arc(&self) -> Arc<VariableTable> {
        self.vars.clone()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    /// Sorted set of variables the node depends on syntactically.
    pub fn scope(&self, id: NodeId) -> &[VarId] {
        &self.scopes[id.0]
    }

    /// Number of edges.
    pub fn size(&self) -> usize {
        self.nodes.iter().map(|n| n.children().len()).sum()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    pub fn sum_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Sum(_))).count()
    }

    pub fn product_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Product(_))).count()
    }

    /// Evaluates the function at a full assignment of the root scope.
    pub fn evaluate(&self, a: &Assignment) -> Result<Value> {
        Ok(self.evaluate_counted(a)?.0)
    }

    /// Like [`evaluate`](Self::evaluate), also returning the number of node visits.
    pub fn evaluate_counted(&self, a: &Assignment) -> Result<(Value, usize)> {
        for v in self.scope(self.root) {
            if !a.is_set(*v) {
                return Err(SpfError::InvalidAssignment(format!(
                    "missing variable `{}`",
                    self.vars.name(*v)
                )));
            }
        }
        let values = self.evaluate_all(a)?;
        let visits = values.len();
        Ok((values[self.root.0].clone(), visits))
    }

    /// Values of every node under `a`, indexed by node id.
    pub fn evaluate_all(&self, a: &Assignment) -> Result<Vec<Value>> {
        let mut values: Vec<Value> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let v = self.eval_node(node, &values, a)?;
            values.push(v);
        }
        Ok(values)
    }

    fn eval_node(&self, node: &Node, values: &[Value], a: &Assignment) -> Result<Value> {
        let s = self.semiring;
        Ok(match node {
            Node::Const(v) => v.clone(),
            Node::Leaf(leaf) => leaf.eval(s, &self.vars, a)?,
            Node::Sum(ch) => {
                let mut acc = values[ch[0].0].clone();
                for c in &ch[1..] {
                    acc = s.add(&acc, &values[c.0])?;
                }
                acc
            }
            Node::Product(ch) => {
                let mut acc = values[ch[0].0].clone();
                for c in &ch[1..] {
                    acc = s.mul(&acc, &values[c.0])?;
                }
                acc
            }
        })
    }

    /// Nodes reachable from `from`, as a membership mask.
    pub fn reachable(&self, from: NodeId) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![from];
        seen[from.0] = true;
        while let Some(n) = stack.pop() {
            for c in self.nodes[n.0].children() {
                if !seen[c.0] {
                    seen[c.0] = true;
                    stack.push(*c);
                }
            }
        }
        seen
    }

    /// Evaluates the sub-function rooted at `node`.
    pub fn evaluate_node(&self, node: NodeId, a: &Assignment) -> Result<Value> {
        let mask = self.reachable(node);
        let mut values: Vec<Value> = Vec::with_capacity(node.0 + 1);
        for (i, n) in self.nodes[..=node.0].iter().enumerate() {
            if mask[i] {
                let v = self.eval_node(n, &values, a)?;
                values.push(v);
            } else {
                values.push(Value::Bool(false));
            }
        }
        Ok(values[node.0].clone())
    }

    /// The first product (in topological order) whose children share a variable, with the smallest shared variable.
    pub fn decomposability_witness(&self) -> Option<DecomposabilityWitness> {
        checks::decomposability_witness(self)
    }

    pub fn is_decomposable(&self) -> bool {
        self.decomposability_witness().is_none()
    }

    pub fn require_decomposable(&self) -> Result<()> {
        match self.decomposability_witness() {
            None => Ok(()),
            Some(w) => Err(SpfError::NotDecomposable {
                node: w.node.0,
                variable: self.vars.name(w.variable).to_string(),
            }),
        }
    }

    /// Brute-force check that every sum node has children with disjoint supports.
    pub fn is_deterministic(&self, enumeration_limit: u64) -> Result<bool> {
        checks::is_deterministic(self, enumeration_limit)
    }

    /// The restriction of this function to a partial assignment, with constants folded and dead nodes pruned.
    pub fn simplify(&self, partial: &Assignment) -> Result<SpfGraph> {
        simplify::simplify(self, partial)
    }

}

/// Incremental constructor for [`SpfGraph`]; nodes may only reference earlier nodes.
#[derive(Clone, Debug)]
pub struct GraphBuilder {
    semiring: Semiring,
    vars: Arc<VariableTable>,
    nodes: Vec<Node>,
}

impl GraphBuilder {
    pub fn new(semiring: Semiring, vars: impl Into<Arc<VariableTable>>) -> Self {
        Self {
            semiring,
            vars: vars.into(),
            nodes: Vec::new(),
        }
    }

    pub fn semiring(&self) -> Semiring {
        self.semiring
    }

    pub fn vars(&self) -> &VariableTable {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn push(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        NodeId(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, v: Value) -> NodeId {
        self.push(Node::Const(v))
    }

    pub fn zero(&mut self) -> NodeId {
        let z = self.semiring.zero();
        self.constant(z)
    }

    pub fn one(&mut self) -> NodeId {
        let o = self.semiring.one();
        self.constant(o)
    }

    pub fn table(&mut self, scope: &[VarId], values: Vec<Value>) -> NodeId {
        self.push(Node::Leaf(Leaf {
            scope: scope.to_vec(),
            body: LeafBody::Table(values),
        }))
    }

    /// Table leaf over reals converted into the builder's semiring.
    pub fn table_f64(&mut self, scope: &[VarId], values: &[f64]) -> Result<NodeId> {
        let vals = values
            .iter()
            .map(|&x| self.semiring.from_f64(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.table(scope, vals))
    }

    /// The indicator `[var = t]`.
    pub fn indicator(&mut self, var: VarId, t: usize) -> NodeId {
        let leaf = indicator_leaf(self.semiring, &self.vars, var, t);
        self.push(Node::Leaf(leaf))
    }

    pub fn registered(&mut self, name: &str, scope: &[VarId], params: Vec<f64>) -> Result<NodeId> {
        let f = RegisteredFn::resolve(name, params)?;
        Ok(self.push(Node::Leaf(Leaf {
            scope: scope.to_vec(),
            body: LeafBody::Registered(f),
        })))
    }

    pub fn sum(&mut self, children: Vec<NodeId>) -> NodeId {
        self.push(Node::Sum(children))
    }

    pub fn product(&mut self, children: Vec<NodeId>) -> NodeId {
        self.push(Node::Product(children))
    }

    /// Validates the nodes reachable from `root`, drops the rest and renumbers.
    pub fn build(self, root: NodeId) -> Result<SpfGraph> {
        let GraphBuilder {
            semiring,
            vars,
            nodes,
        } = self;
        if root.0 >= nodes.len() {
            return Err(SpfError::MissingRoot(root.0 as u64));
        }
        for (i, node) in nodes.iter().enumerate() {
            for c in node.children() {
                if c.0 >= i {
                    return Err(if c.0 == i {
                        SpfError::Cycle(i as u64)
                    } else if c.0 < nodes.len() {
                        SpfError::Cycle(i as u64)
                    } else {
                        SpfError::DanglingChild {
                            node: i as u64,
                            child: c.0 as u64,
                        }
                    });
                }
            }
        }
        let mut keep = vec![false; nodes.len()];
        keep[root.0] = true;
        for i in (0..nodes.len()).rev() {
            if keep[i] {
                for c in nodes[i].children() {
                    keep[c.0] = true;
                }
            }
        }
        let mut remap = vec![usize::MAX; nodes.len()];
        let mut kept = Vec::new();
        for (i, node) in nodes.into_iter().enumerate() {
            if !keep[i] {
                continue;
            }
            remap[i] = kept.len();
            let node = match node {
                Node::Sum(ch) => Node::Sum(ch.iter().map(|c| NodeId(remap[c.0])).collect()),
                Node::Product(ch) => Node::Product(ch.iter().map(|c| NodeId(remap[c.0])).collect()),
                other => other,
            };
            kept.push(node);
        }
        let root = NodeId(remap[root.0]);
        finish(semiring, vars, kept, root)
    }
}

/// The leaf `[var = t]` in `semiring`.
pub fn indicator_leaf(semiring: Semiring, vars: &VariableTable, var: VarId, t: usize) -> Leaf {
    let d = vars.domain(var).cardinality().expect("indicators need finite domains");
    let values = (0..d)
        .map(|i| if i == t { semiring.one() } else { semiring.zero() })
        .collect();
    Leaf {
        scope: vec![var],
        body: LeafBody::Table(values),
    }
}

fn validate_leaf(semiring: Semiring, vars: &VariableTable, id: usize, leaf: &Leaf) -> Result<()> {
    let err = |detail: String| SpfError::InvalidLeaf {
        node: id as u64,
        detail,
    };
    let mut seen = BTreeSet::new();
    for v in &leaf.scope {
        if v.0 >= vars.len() {
            return Err(SpfError::UnknownVariable(format!("#{}", v.0)));
        }
        if !seen.insert(*v) {
            return Err(err(format!("variable `{}` repeated in scope", vars.name(*v))));
        }
    }
    match &leaf.body {
        LeafBody::Table(values) => {
            let mut size = 1usize;
            for v in &leaf.scope {
                let d = vars.domain(*v).cardinality().ok_or_else(|| {
                    err(format!("table over continuous variable `{}`", vars.name(*v)))
                })?;
                size = size
                    .checked_mul(d)
                    .ok_or_else(|| err("table too large".to_string()))?;
            }
            if values.len() != size {
                return Err(err(format!(
                    "table has {} entries, expected {size}",
                    values.len()
                )));
            }
            for v in values {
                semiring.check(v)?;
            }
        }
        LeafBody::Registered(f) => {
            f.family.validate(&f.params, &leaf.scope, vars).map_err(|e| match e {
                SpfError::Precondition(d) => err(d),
                other => other,
            })?;
        }
    }
    Ok(())
}

fn finish(semiring: Semiring, vars: Arc<VariableTable>, nodes: Vec<Node>, root: NodeId) -> Result<SpfGraph> {
    let mut scopes: Vec<VarSet> = Vec::with_capacity(nodes.len());
    for (i, node) in nodes.iter().enumerate() {
        let scope = match node {
            Node::Const(v) => {
                semiring.check(v)?;
                Vec::new()
            }
            Node::Leaf(leaf) => {
                validate_leaf(semiring, &vars, i, leaf)?;
                let mut s = leaf.scope.clone();
                s.sort();
                s
            }
            Node::Sum(ch) | Node::Product(ch) => {
                if ch.is_empty() {
                    return Err(SpfError::EmptyChildren {
                        kind: node.kind(),
                        node: i as u64,
                    });
                }
                let mut s = Vec::new();
                for c in ch {
                    union_into(&mut s, &scopes[c.0]);
                }
                s
            }
        };
        scopes.push(scope);
    }
    Ok(SpfGraph {
        semiring,
        vars,
        nodes,
        scopes,
        root,
    })
}

/// A node with an explicit external id, as read from an interchange file.
#[derive(Clone, Debug)]
pub struct RawNode {
    pub id: u64,
    pub node: RawKind,
}

#[derive(Clone, Debug)]
pub enum RawKind {
    Sum(Vec<u64>),
    Product(Vec<u64>),
    Const(Value),
    Leaf(Leaf),
}

/// Validates an arbitrary node list (any id order) and returns a topologically numbered graph.
pub fn build_graph(semiring: Semiring, vars: VariableTable, nodes: Vec<RawNode>, root: u64) -> Result<SpfGraph> {
    let mut index: HashMap<u64, usize> = HashMap::new();
    for (i, n) in nodes.iter().enumerate() {
        if index.insert(n.id, i).is_some() {
            return Err(SpfError::DuplicateNode(n.id));
        }
    }
    let root_idx = *index.get(&root).ok_or(SpfError::MissingRoot(root))?;
    let children = |i: usize| -> &[u64] {
        match &nodes[i].node {
            RawKind::Sum(c) | RawKind::Product(c) => c,
            _ => &[],
        }
    };
    // Depth-first search from the root for dangling ids and cycles.
    let mut state = vec![0u8; nodes.len()];
    let mut stack: Vec<(usize, usize)> = vec![(root_idx, 0)];
    state[root_idx] = 1;
    while let Some(&mut (n, ref mut k)) = stack.last_mut() {
        let ch = children(n);
        if *k < ch.len() {
            let cid = ch[*k];
            *k += 1;
            let c = *index.get(&cid).ok_or(SpfError::DanglingChild {
                node: nodes[n].id,
                child: cid,
            })?;
            match state[c] {
                0 => {
                    state[c] = 1;
                    stack.push((c, 0));
                }
                1 => return Err(SpfError::Cycle(cid)),
                _ => {}
            }
        } else {
            state[n] = 2;
            stack.pop();
        }
    }
    // Kahn's algorithm over reachable nodes, smallest external id first, for a stable numbering.
    let reachable: Vec<usize> = (0..nodes.len()).filter(|&i| state[i] == 2).collect();
    let mut pending = vec![0usize; nodes.len()];
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for &i in &reachable {
        let mut distinct: Vec<usize> = children(i).iter().map(|c| index[c]).collect();
        distinct.sort();
        distinct.dedup();
        pending[i] = distinct.len();
        for c in distinct {
            parents[c].push(i);
        }
    }
    let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<(u64, usize)>> = reachable
        .iter()
        .filter(|&&i| pending[i] == 0)
        .map(|&i| std::cmp::Reverse((nodes[i].id, i)))
        .collect();
    let mut order = Vec::with_capacity(reachable.len());
    while let Some(std::cmp::Reverse((_, i))) = ready.pop() {
        order.push(i);
        for &p in &parents[i] {
            pending[p] -= 1;
            if pending[p] == 0 {
                ready.push(std::cmp::Reverse((nodes[p].id, p)));
            }
        }
    }
    let mut remap = vec![usize::MAX; nodes.len()];
    for (new, &old) in order.iter().enumerate() {
        remap[old] = new;
    }
    let mut built = Vec::with_capacity(order.len());
    for &old in &order {
        let map = |c: &Vec<u64>| c.iter().map(|id| NodeId(remap[index[id]])).collect();
        built.push(match &nodes[old].node {
            RawKind::Sum(c) => Node::Sum(map(c)),
            RawKind::Product(c) => Node::Product(map(c)),
            RawKind::Const(v) => Node::Const(v.clone()),
            RawKind::Leaf(l) => Node::Leaf(l.clone()),
        });
    }
    finish(semiring, Arc::new(vars), built, NodeId(remap[root_idx])).map_err(|e| match e {
        SpfError::EmptyChildren { kind, node } => SpfError::EmptyChildren {
            kind,
            node: nodes[order[node as usize]].id,
        },
        SpfError::InvalidLeaf { node, detail } => SpfError::InvalidLeaf {
            node: nodes[order[node as usize]].id,
            detail,
        },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(b: &mut GraphBuilder, v: VarId, positive: bool) -> NodeId {
        b.indicator(v, usize::from(positive))
    }

    #[test]
    fn build_examples() {
        let vars = VariableTable::binary(2);
        let mut b = GraphBuilder::new(Semiring::Counting, vars.clone());
        let r = b.one();
        let g = b.build(r).unwrap();
        assert_eq!(g.size(), 0);

        let mut b = GraphBuilder::new(Semiring::Counting, vars.clone());
        let x1 = lit(&mut b, VarId(0), true);
        let x2 = lit(&mut b, VarId(1), true);
        let p = b.product(vec![x1, x2]);
        let g = b.build(p).unwrap();
        assert_eq!(g.size(), 2);
        assert_eq!(g.scope(g.root()), &[VarId(0), VarId(1)]);

        let raw = vec![RawNode {
            id: 7,
            node: RawKind::Sum(vec![7]),
        }];
        assert!(matches!(
            build_graph(Semiring::Boolean, vars, raw, 7),
            Err(SpfError::Cycle(7))
        ));
    }

    #[test]
    fn scopes_and_evaluation() {
        let vars = VariableTable::binary(2);
        let mut b = GraphBuilder::new(Semiring::Boolean, vars);
        let a = lit(&mut b, VarId(0), true);
        let na = lit(&mut b, VarId(0), false);
        let c = b.constant(Value::Bool(true));
        let s = b.sum(vec![a, na]);
        let g = b.clone().build(s).unwrap();
        assert_eq!(g.evaluate(&Assignment::from_indices(&[0, 0])).unwrap(), Value::Bool(true));
        let g2 = b.build(c).unwrap();
        assert!(g2.scope(g2.root()).is_empty());
    }

    #[test]
    fn missing_variable_is_named() {
        let vars = VariableTable::binary(2);
        let mut b = GraphBuilder::new(Semiring::Boolean, vars);
        let a = lit(&mut b, VarId(1), true);
        let g = b.build(a).unwrap();
        let err = g.evaluate(&Assignment::from_indices(&[1])).unwrap_err();
        assert!(err.to_string().contains("x2"));
    }

    #[test]
    fn carrier_violations_are_rejected() {
        let vars = VariableTable::binary(1);
        let mut b = GraphBuilder::new(Semiring::SumProduct, vars);
        let l = b.table(&[VarId(0)], vec![Value::Real(-1.0), Value::Real(1.0)]);
        assert!(matches!(b.build(l), Err(SpfError::Carrier { .. })));
    }

    #[test]
    fn unreachable_nodes_are_pruned() {
        let vars = VariableTable::binary(1);
        let mut b = GraphBuilder::new(Semiring::Boolean, vars);
        let _dead = b.one();
        let l = lit(&mut b, VarId(0), true);
        let g = b.build(l).unwrap();
        assert_eq!(g.node_count(), 1);
    }
}
