//! Junction trees and the tree-like graphs built from them.

use std::collections::HashMap;
use std::fmt;

use serde_json::{json, Map, Value as Json};

use crate::error::{Result, SpfError};
use crate::graph::json::{value_to_json, variables_from_json, variables_to_json};
use crate::graph::{Domain, GraphBuilder, Node, NodeId, SpfGraph, VarId, VariableTable};
use crate::semiring::{Semiring, Value};

#[derive(Clone, Debug, PartialEq)]
pub struct JtVertex {
    pub id: u64,
    pub cluster: Vec<VarId>,
    pub parent: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct JunctionTree {
    pub vertices: Vec<JtVertex>,
}

/// The first way a junction tree fails its definition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Empty,
    DuplicateVertex(u64),
    UnknownParent { vertex: u64, parent: u64 },
    RootCount(usize),
    ParentCycle(u64),
    RepeatedVariable { vertex: u64, variable: String },
    UnknownVariable { vertex: u64, variable: usize },
    Uncovered(String),
    /// `variable` is in the clusters of `i` and `j` but not of `k`, which lies on their path.
    RunningIntersection { i: u64, j: u64, k: u64, variable: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "no vertices"),
            Violation::DuplicateVertex(v) => write!(f, "duplicate vertex {v}"),
            Violation::UnknownParent { vertex, parent } => write!(f, "vertex {vertex} has unknown parent {parent}"),
            Violation::RootCount(n) => write!(f, "expected exactly one root, found {n}"),
            Violation::ParentCycle(v) => write!(f, "parent links through vertex {v} form a cycle"),
            Violation::RepeatedVariable { vertex, variable } => {
                write!(f, "vertex {vertex} lists {variable} twice")
            }
            Violation::UnknownVariable { vertex, variable } => {
                write!(f, "vertex {vertex} names unknown variable #{variable}")
            }
            Violation::Uncovered(v) => write!(f, "variable {v} is in no cluster"),
            Violation::RunningIntersection { i, j, k, variable } => write!(
                f,
                "running intersection fails at vertex {k}: {variable} is in vertices {i} and {j} but not {k}"
            ),
        }
    }
}

impl JunctionTree {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a vertex and returns its id; ids count up from 0.
    pub fn push(&mut self, cluster: Vec<VarId>, parent: Option<u64>) -> u64 {
        let id = self.vertices.len() as u64;
        self.vertices.push(JtVertex { id, cluster, parent });
        id
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Largest cluster size minus one.
    pub fn treewidth(&self) -> usize {
        self.vertices.iter().map(|v| v.cluster.len()).max().unwrap_or(0).saturating_sub(1)
    }

    pub fn validate(&self, vars: &VariableTable) -> std::result::Result<(), Violation> {
        let shape = Shape::of(self)?;
        for v in &self.vertices {
            let mut seen = Vec::with_capacity(v.cluster.len());
            for x in &v.cluster {
                if x.0 >= vars.len() {
                    return Err(Violation::UnknownVariable {
                        vertex: v.id,
                        variable: x.0,
                    });
                }
                if seen.contains(x) {
                    return Err(Violation::RepeatedVariable {
                        vertex: v.id,
                        variable: vars.name(*x).to_string(),
                    });
                }
                seen.push(*x);
            }
        }
        for x in vars.ids() {
            let holders: Vec<usize> = (0..self.len()).filter(|i| self.vertices[*i].cluster.contains(&x)).collect();
            if holders.is_empty() {
                return Err(Violation::Uncovered(vars.name(x).to_string()));
            }
            let tops: Vec<usize> = holders
                .iter()
                .copied()
                .filter(|i| shape.parent[*i].is_none_or(|p| !holders.contains(&p)))
                .collect();
            if tops.len() > 1 {
                let (i, j) = (tops[0], tops[1]);
                let k = shape
                    .path(i, j)
                    .into_iter()
                    .find(|k| !holders.contains(k))
                    .expect("disconnected holders leave a gap on their path");
                return Err(Violation::RunningIntersection {
                    i: self.vertices[i].id,
                    j: self.vertices[j].id,
                    k: self.vertices[k].id,
                    variable: vars.name(x).to_string(),
                });
            }
        }
        Ok(())
    }

    fn require_valid(&self, vars: &VariableTable) -> Result<Shape> {
        self.validate(vars)
            .map_err(|v| SpfError::InvalidJunctionTree(v.to_string()))?;
        Shape::of(self).map_err(|v| SpfError::InvalidJunctionTree(v.to_string()))
    }
}

/// Parent and child links by vertex position.
struct Shape {
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    root: usize,
    depth: Vec<usize>,
}

impl Shape {
    fn of(jt: &JunctionTree) -> std::result::Result<Shape, Violation> {
        if jt.is_empty() {
            return Err(Violation::Empty);
        }
        let mut index = HashMap::new();
        for (i, v) in jt.vertices.iter().enumerate() {
            if index.insert(v.id, i).is_some() {
                return Err(Violation::DuplicateVertex(v.id));
            }
        }
        let mut parent = Vec::with_capacity(jt.len());
        for v in &jt.vertices {
            parent.push(match v.parent {
                None => None,
                Some(p) => Some(*index.get(&p).ok_or(Violation::UnknownParent {
                    vertex: v.id,
                    parent: p,
                })?),
            });
        }
        let roots: Vec<usize> = (0..jt.len()).filter(|i| parent[*i].is_none()).collect();
        if roots.len() != 1 {
            return Err(Violation::RootCount(roots.len()));
        }
        let mut depth = vec![usize::MAX; jt.len()];
        for start in 0..jt.len() {
            let mut chain = Vec::new();
            let mut i = start;
            while depth[i] == usize::MAX {
                if chain.contains(&i) {
                    return Err(Violation::ParentCycle(jt.vertices[i].id));
                }
                chain.push(i);
                match parent[i] {
                    Some(p) => i = p,
                    None => {
                        depth[i] = 0;
                        chain.pop();
                        break;
                    }
                }
            }
            let mut d = depth[i];
            for c in chain.into_iter().rev() {
                d += 1;
                depth[c] = d;
            }
        }
        let mut children = vec![Vec::new(); jt.len()];
        for (i, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(i);
            }
        }
        Ok(Shape {
            parent,
            children,
            root: roots[0],
            depth,
        })
    }

    /// Vertices strictly between `a` and `b` on the tree path.
    fn path(&self, a: usize, b: usize) -> Vec<usize> {
        let (mut left, mut right) = (Vec::new(), Vec::new());
        let (mut x, mut y) = (a, b);
        while x != y {
            if self.depth[x] >= self.depth[y] {
                left.push(x);
                x = self.parent[x].expect("non-root");
            } else {
                right.push(y);
                y = self.parent[y].expect("non-root");
            }
        }
        left.push(x);
        left.extend(right.into_iter().rev());
        left.retain(|v| *v != a && *v != b);
        left
    }

    fn post_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.parent.len());
        let mut stack = vec![(self.root, false)];
        while let Some((v, done)) = stack.pop() {
            if done {
                out.push(v);
            } else {
                stack.push((v, true));
                for c in self.children[v].iter().rev() {
                    stack.push((*c, false));
                }
            }
        }
        out
    }
}

/// A tree-like graph with handles on its separator sums.
#[derive(Clone, Debug)]
pub struct TreelikeSpf {
    pub graph: SpfGraph,
    /// For each non-root vertex, its separator variables (sorted) and one sum per separator
    /// value, indexed row-major.
    pub separators: Vec<Option<(Vec<VarId>, Vec<NodeId>)>>,
}

fn cards(vars: &VariableTable, scope: &[VarId]) -> Result<Vec<usize>> {
    scope
        .iter()
        .map(|v| match vars.domain(*v) {
            Domain::Finite(d) => Ok(d),
            Domain::Interval(..) => Err(SpfError::ContinuousDomain(vars.name(*v).to_string())),
        })
        .collect()
}

/// Row-major decoding of `index` into per-variable values.
fn decode(mut index: usize, cards: &[usize]) -> Vec<usize> {
    let mut out = vec![0; cards.len()];
    for k in (0..cards.len()).rev() {
        out[k] = index % cards[k];
        index /= cards[k];
    }
    out
}

fn encode(values: &[usize], cards: &[usize]) -> usize {
    values.iter().zip(cards).fold(0, |acc, (v, d)| acc * d + v)
}

fn project(cluster: &[VarId], values: &[usize], onto: &[VarId]) -> Vec<usize> {
    onto.iter()
        .map(|v| values[cluster.iter().position(|c| c == v).expect("separator inside cluster")])
        .collect()
}

/// Builds the tree-like graph for `jt` with cluster tables `psi` (one per vertex, row-major over the cluster).
pub fn build_treelike(jt: &JunctionTree, psi: &[Vec<Value>], semiring: Semiring, vars: &VariableTable) -> Result<SpfGraph> {
    Ok(build_treelike_indexed(jt, psi, semiring, vars)?.graph)
}

pub fn build_treelike_indexed(
    jt: &JunctionTree,
    psi: &[Vec<Value>],
    semiring: Semiring,
    vars: &VariableTable,
) -> Result<TreelikeSpf> {
    let shape = jt.require_valid(vars)?;
    if psi.len() != jt.len() {
        return Err(SpfError::InvalidJunctionTree(format!(
            "{} cluster tables for {} vertices",
            psi.len(),
            jt.len()
        )));
    }
    let cluster_cards: Vec<Vec<usize>> = jt
        .vertices
        .iter()
        .map(|v| cards(vars, &v.cluster))
        .collect::<Result<_>>()?;
    for (i, v) in jt.vertices.iter().enumerate() {
        let need: usize = cluster_cards[i].iter().product();
        if psi[i].len() != need {
            return Err(SpfError::InvalidJunctionTree(format!(
                "table of vertex {} has {} entries, cluster needs {need}",
                v.id,
                psi[i].len()
            )));
        }
        for x in &psi[i] {
            semiring.check(x)?;
        }
    }

    let mut b = GraphBuilder::new(semiring, vars.clone());
    let mut indicators: HashMap<(VarId, usize), NodeId> = HashMap::new();
    let mut separators: Vec<Option<(Vec<VarId>, Vec<NodeId>)>> = vec![None; jt.len()];
    let mut root_products = Vec::new();
    for j in shape.post_order() {
        let cluster = &jt.vertices[j].cluster;
        let cc = &cluster_cards[j];
        let introduced: Vec<usize> = (0..cluster.len())
            .filter(|k| shape.parent[j].is_none_or(|p| !jt.vertices[p].cluster.contains(&cluster[*k])))
            .collect();
        let mut products = Vec::with_capacity(psi[j].len());
        for (r, weight) in psi[j].iter().enumerate() {
            let values = decode(r, cc);
            let mut children = Vec::new();
            for &i in &shape.children[j] {
                let (sep, sums) = separators[i].as_ref().expect("children are built first");
                let sv = project(cluster, &values, sep);
                children.push(sums[encode(&sv, &cards(vars, sep)?)]);
            }
            children.push(b.constant(weight.clone()));
            for &k in &introduced {
                let key = (cluster[k], values[k]);
                let id = match indicators.get(&key) {
                    Some(id) => *id,
                    None => {
                        let id = b.indicator(key.0, key.1);
                        indicators.insert(key, id);
                        id
                    }
                };
                children.push(id);
            }
            products.push((values, b.product(children)));
        }
        match shape.parent[j] {
            None => root_products = products.into_iter().map(|(_, p)| p).collect(),
            Some(p) => {
                let mut sep: Vec<VarId> = cluster
                    .iter()
                    .copied()
                    .filter(|v| jt.vertices[p].cluster.contains(v))
                    .collect();
                sep.sort();
                let sc = cards(vars, &sep)?;
                let mut groups = vec![Vec::new(); sc.iter().product()];
                for (values, prod) in products {
                    groups[encode(&project(cluster, &values, &sep), &sc)].push(prod);
                }
                let sums = groups.into_iter().map(|g| b.sum(g)).collect();
                separators[j] = Some((sep, sums));
            }
        }
    }
    let pushed = b.len();
    let root = b.sum(root_products);
    let graph = b.build(root)?;
    debug_assert_eq!(graph.node_count(), pushed + 1);
    Ok(TreelikeSpf { graph, separators })
}

/// The size bound `d^α + Σ_{(j,k)} 2·d^α·(α+1)·|Ch(k)|`, summed over tree edges from child `j` to parent `k`.
pub fn size_bound(jt: &JunctionTree, d: usize) -> Result<u128> {
    let shape = Shape::of(jt).map_err(|v| SpfError::InvalidJunctionTree(v.to_string()))?;
    let alpha = jt.treewidth() as u32 + 1;
    let da = (d as u128).pow(alpha);
    let mut total = da;
    for j in 0..jt.len() {
        if let Some(k) = shape.parent[j] {
            total += 2 * da * (alpha as u128 + 1) * shape.children[k].len() as u128;
        }
    }
    Ok(total)
}

/// An edge-count bound that holds for every tree-like graph with uniform cardinality `d`:
/// `d^α` root edges, at most `d^α·(α + 1 + |Ch(k)|)` edges below the products of each vertex `k`,
/// and `d^α` separator-sum edges per non-root vertex.
pub fn counted_size_bound(jt: &JunctionTree, d: usize) -> Result<u128> {
    let shape = Shape::of(jt).map_err(|v| SpfError::InvalidJunctionTree(v.to_string()))?;
    let alpha = jt.treewidth() as u128 + 1;
    let da = (d as u128).pow(alpha as u32);
    let mut total = da;
    for k in 0..jt.len() {
        total += da * (alpha + 1 + shape.children[k].len() as u128);
        if shape.parent[k].is_some() {
            total += da;
        }
    }
    Ok(total)
}

/// Brute-force `⊕_x ⊗_i ψ_i(x_{C_i})`, for checking.
pub fn partition_function(jt: &JunctionTree, psi: &[Vec<Value>], semiring: Semiring, vars: &VariableTable) -> Result<Value> {
    let all: Vec<VarId> = vars.ids().collect();
    let mut acc = semiring.zero();
    crate::graph::enumerate_assignments(
        vars,
        &all,
        &crate::graph::Assignment::empty(vars.len()),
        crate::graph::DEFAULT_ENUMERATION_LIMIT,
        |a| {
            acc = semiring.add(&acc, &cluster_product(jt, psi, semiring, vars, a)?)?;
            Ok(true)
        },
    )?;
    Ok(acc)
}

/// `⊗_i ψ_i(x_{C_i})` at a full assignment.
pub fn cluster_product(
    jt: &JunctionTree,
    psi: &[Vec<Value>],
    semiring: Semiring,
    vars: &VariableTable,
    a: &crate::graph::Assignment,
) -> Result<Value> {
    let mut acc = semiring.one();
    for (v, table) in jt.vertices.iter().zip(psi) {
        let cc = cards(vars, &v.cluster)?;
        let values: Vec<usize> = v
            .cluster
            .iter()
            .map(|x| a.index(*x).ok_or_else(|| SpfError::InvalidAssignment(format!("{} unset", vars.name(*x)))))
            .collect::<Result<_>>()?;
        acc = semiring.mul(&acc, &table[encode(&values, &cc)])?;
    }
    Ok(acc)
}

/// A junction tree read from JSON, with its tables and, when present, semiring and variables.
#[derive(Clone, Debug)]
pub struct JunctionTreeFile {
    pub semiring: Semiring,
    pub vars: VariableTable,
    pub tree: JunctionTree,
    pub psi: Vec<Vec<Value>>,
}

fn field<'a>(j: &'a Json, key: &str) -> Result<&'a Json> {
    j.get(key)
        .ok_or_else(|| SpfError::InvalidJunctionTree(format!("missing field `{key}`")))
}

/// Parses `{"vertices":[{id, cluster, parent}], "psi":{id: table}}`.
///
/// Without a `variables` field every cluster variable is binary; without `semiring`, `fallback` is used.
pub fn junction_tree_from_json(j: &Json, fallback: Semiring) -> Result<JunctionTreeFile> {
    let semiring = match j.get("semiring").and_then(Json::as_str) {
        Some(s) => s.parse()?,
        None => fallback,
    };
    let raw = field(j, "vertices")?
        .as_array()
        .ok_or_else(|| SpfError::InvalidJunctionTree("`vertices` must be an array".into()))?;
    let mut vars = match j.get("variables") {
        Some(v) => variables_from_json(v)?,
        None => VariableTable::new(),
    };
    let declared = j.get("variables").is_some();
    let mut tree = JunctionTree::new();
    for v in raw {
        let id = field(v, "id")?
            .as_u64()
            .ok_or_else(|| SpfError::InvalidJunctionTree("vertex id must be a natural number".into()))?;
        let parent = match v.get("parent") {
            None | Some(Json::Null) => None,
            Some(p) => Some(
                p.as_u64()
                    .ok_or_else(|| SpfError::InvalidJunctionTree(format!("parent of {id} must be a natural number")))?,
            ),
        };
        let mut cluster = Vec::new();
        for x in field(v, "cluster")?
            .as_array()
            .ok_or_else(|| SpfError::InvalidJunctionTree(format!("cluster of {id} must be an array")))?
        {
            let name = x
                .as_str()
                .ok_or_else(|| SpfError::InvalidJunctionTree(format!("cluster of {id} must list variable names")))?;
            let var = match vars.lookup(name) {
                Some(var) => var,
                None if !declared => vars.add_finite(name, 2)?,
                None => return Err(SpfError::UnknownVariable(name.to_string())),
            };
            cluster.push(var);
        }
        tree.vertices.push(JtVertex { id, cluster, parent });
    }
    let tables = field(j, "psi")?
        .as_object()
        .ok_or_else(|| SpfError::InvalidJunctionTree("`psi` must map vertex ids to tables".into()))?;
    let psi = tree
        .vertices
        .iter()
        .map(|v| {
            let t = tables
                .get(&v.id.to_string())
                .ok_or_else(|| SpfError::InvalidJunctionTree(format!("no table for vertex {}", v.id)))?;
            crate::graph::json::table_from_json(semiring, t)
        })
        .collect::<Result<_>>()?;
    Ok(JunctionTreeFile {
        semiring,
        vars,
        tree,
        psi,
    })
}

pub fn junction_tree_to_json(file: &JunctionTreeFile) -> Json {
    let vertices: Vec<Json> = file
        .tree
        .vertices
        .iter()
        .map(|v| {
            json!({
                "id": v.id,
                "cluster": v.cluster.iter().map(|x| file.vars.name(*x)).collect::<Vec<_>>(),
                "parent": v.parent,
            })
        })
        .collect();
    let mut psi = Map::new();
    for (v, t) in file.tree.vertices.iter().zip(&file.psi) {
        psi.insert(v.id.to_string(), Json::Array(t.iter().map(value_to_json).collect()));
    }
    json!({
        "type": "junction-tree",
        "semiring": file.semiring.name(),
        "variables": variables_to_json(&file.vars),
        "vertices": vertices,
        "psi": psi,
    })
}

/// Edge count of `g` split by parent kind, for comparing against the bounds.
pub fn edges_by_kind(g: &SpfGraph) -> (usize, usize) {
    let mut sums = 0;
    let mut products = 0;
    for n in g.nodes() {
        match n {
            Node::Sum(c) => sums += c.len(),
            Node::Product(c) => products += c.len(),
            _ => {}
        }
    }
    (sums, products)
}
