//! JSON interchange for graphs, variables and values.
//!
//! ```json
//! {"type": "spf", "semiring": "boolean",
//!  "variables": [{"name": "x1", "domain": {"finite": 2}}],
//!  "nodes": [{"id": 0, "kind": "leaf", "scope": ["x1"], "table": [false, true]}],
//!  "root": 0}
//! ```
//!
//! Boolean values are `true`/`false` (0/1 accepted), counting values are decimal strings
//! (integers accepted), reals are numbers with `"inf"` and `"-inf"` for infinities.

use num_bigint::BigUint;
use serde_json::{json, Map, Value as Json};

use super::{build_graph, Domain, Leaf, LeafBody, Node, RawKind, RawNode, RegisteredFn, SpfGraph, VarId, VariableTable};
use crate::error::{Result, SpfError};
use crate::semiring::{Semiring, Value};

fn bad(msg: impl Into<String>) -> SpfError {
    SpfError::Json(msg.into())
}

pub fn value_to_json(v: &Value) -> Json {
    match v {
        Value::Bool(b) => json!(b),
        Value::Nat(n) => json!(n.to_string()),
        Value::Real(x) if *x == f64::INFINITY => json!("inf"),
        Value::Real(x) if *x == f64::NEG_INFINITY => json!("-inf"),
        Value::Real(x) => json!(x),
    }
}

pub fn value_from_json(s: Semiring, j: &Json) -> Result<Value> {
    let v = match (s, j) {
        (Semiring::Boolean, Json::Bool(b)) => Value::Bool(*b),
        (Semiring::Boolean, Json::Number(n)) => match n.as_u64() {
            Some(0) => Value::Bool(false),
            Some(1) => Value::Bool(true),
            _ => return Err(bad(format!("boolean value must be 0 or 1, got {n}"))),
        },
        (Semiring::Counting, Json::String(t)) => Value::Nat(
            t.parse::<BigUint>()
                .map_err(|_| bad(format!("`{t}` is not a natural number")))?,
        ),
        (Semiring::Counting, Json::Number(n)) => Value::Nat(BigUint::from(
            n.as_u64()
                .ok_or_else(|| bad(format!("{n} is not a natural number")))?,
        )),
        (_, Json::Number(n)) => Value::Real(n.as_f64().ok_or_else(|| bad("bad number"))?),
        (_, Json::String(t)) => match t.as_str() {
            "inf" | "+inf" | "infinity" => Value::Real(f64::INFINITY),
            "-inf" | "-infinity" => Value::Real(f64::NEG_INFINITY),
            other => Value::Real(
                other
                    .parse::<f64>()
                    .map_err(|_| bad(format!("`{other}` is not a number")))?,
            ),
        },
        _ => return Err(bad(format!("cannot read {j} as a {s} value"))),
    };
    s.check(&v)?;
    Ok(v)
}

pub fn variables_to_json(vars: &VariableTable) -> Json {
    Json::Array(
        vars.iter()
            .map(|(_, v)| match v.domain {
                Domain::Finite(1) => json!({"name": v.name, "domain": {"finite": 1}, "unary": true}),
                Domain::Finite(d) => json!({"name": v.name, "domain": {"finite": d}}),
                Domain::Interval(lo, hi) => json!({"name": v.name, "domain": {"interval": [lo, hi]}}),
            })
            .collect(),
    )
}

pub fn variables_from_json(j: &Json) -> Result<VariableTable> {
    let list = j.as_array().ok_or_else(|| bad("`variables` must be an array"))?;
    let mut vars = VariableTable::new();
    for item in list {
        let name = item
            .get("name")
            .and_then(Json::as_str)
            .ok_or_else(|| bad("variable without a name"))?;
        let domain = item.get("domain").ok_or_else(|| bad(format!("variable `{name}` has no domain")))?;
        if let Some(d) = domain.get("finite") {
            let d = d
                .as_u64()
                .ok_or_else(|| bad(format!("domain of `{name}` must be a natural number")))? as usize;
            let unary = item.get("unary").and_then(Json::as_bool).unwrap_or(false);
            if d == 1 && unary {
                vars.add_unary(name)?;
            } else {
                vars.add_finite(name, d)?;
            }
        } else if let Some(iv) = domain.get("interval") {
            let pair = iv
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| bad(format!("interval of `{name}` must be [lo, hi]")))?;
            let lo = pair[0].as_f64().ok_or_else(|| bad("interval bound"))?;
            let hi = pair[1].as_f64().ok_or_else(|| bad("interval bound"))?;
            vars.add_interval(name, lo, hi)?;
        } else {
            return Err(bad(format!("domain of `{name}` must be finite or interval")));
        }
    }
    Ok(vars)
}

fn scope_from_json(vars: &VariableTable, j: &Json) -> Result<Vec<VarId>> {
    j.as_array()
        .ok_or_else(|| bad("`scope` must be an array"))?
        .iter()
        .map(|v| match v {
            Json::String(name) => vars.require(name),
            Json::Number(n) => {
                let i = n.as_u64().ok_or_else(|| bad("bad variable index"))? as usize;
                if i < vars.len() {
                    Ok(VarId(i))
                } else {
                    Err(SpfError::UnknownVariable(format!("#{i}")))
                }
            }
            _ => Err(bad("scope entries are names or indices")),
        })
        .collect()
}

pub(crate) fn table_from_json(s: Semiring, j: &Json) -> Result<Vec<Value>> {
    j.as_array()
        .ok_or_else(|| bad("`table` must be an array"))?
        .iter()
        .map(|v| value_from_json(s, v))
        .collect()
}

pub fn graph_to_json(g: &SpfGraph) -> Json {
    let vars = g.vars();
    let nodes: Vec<Json> = g
        .ids()
        .map(|id| {
            let mut m = Map::new();
            m.insert("id".into(), json!(id.0));
            m.insert("kind".into(), json!(g.node(id).kind()));
            match g.node(id) {
                Node::Sum(ch) | Node::Product(ch) => {
                    m.insert("children".into(), json!(ch.iter().map(|c| c.0).collect::<Vec<_>>()));
                }
                Node::Const(v) => {
                    m.insert("value".into(), value_to_json(v));
                }
                Node::Leaf(leaf) => {
                    let names: Vec<&str> = leaf.scope.iter().map(|v| vars.name(*v)).collect();
                    m.insert("scope".into(), json!(names));
                    match &leaf.body {
                        LeafBody::Table(t) => {
                            m.insert("table".into(), Json::Array(t.iter().map(value_to_json).collect()));
                        }
                        LeafBody::Registered(f) => {
                            m.insert("registered".into(), json!({"name": f.name, "params": f.params}));
                        }
                    }
                }
            }
            Json::Object(m)
        })
        .collect();
    json!({
        "type": "spf",
        "semiring": g.semiring().name(),
        "variables": variables_to_json(vars),
        "nodes": nodes,
        "root": g.root().0,
    })
}

/// Reads a graph; `semiring` overrides (or supplies) the file's semiring.
pub fn graph_from_json(j: &Json, semiring: Option<Semiring>) -> Result<SpfGraph> {
    let s = match semiring {
        Some(s) => s,
        None => j
            .get("semiring")
            .and_then(Json::as_str)
            .ok_or_else(|| bad("missing `semiring`"))?
            .parse()?,
    };
    let vars = variables_from_json(j.get("variables").unwrap_or(&Json::Array(Vec::new())))?;
    let list = j
        .get("nodes")
        .and_then(Json::as_array)
        .ok_or_else(|| bad("missing `nodes` array"))?;
    let mut raw = Vec::with_capacity(list.len());
    for n in list {
        let id = n
            .get("id")
            .and_then(Json::as_u64)
            .ok_or_else(|| bad("node without a numeric id"))?;
        let kind = n
            .get("kind")
            .and_then(Json::as_str)
            .ok_or_else(|| bad(format!("node {id} has no kind")))?;
        let children = || -> Result<Vec<u64>> {
            n.get("children")
                .and_then(Json::as_array)
                .ok_or_else(|| bad(format!("node {id} has no children array")))?
                .iter()
                .map(|c| c.as_u64().ok_or_else(|| bad("child ids are naturals")))
                .collect()
        };
        let node = match kind {
            "sum" => RawKind::Sum(children()?),
            "product" => RawKind::Product(children()?),
            "const" => RawKind::Const(value_from_json(
                s,
                n.get("value").ok_or_else(|| bad(format!("const node {id} has no value")))?,
            )?),
            "leaf" => {
                let scope = scope_from_json(&vars, n.get("scope").unwrap_or(&Json::Array(Vec::new())))?;
                let body = if let Some(t) = n.get("table") {
                    LeafBody::Table(table_from_json(s, t)?)
                } else if let Some(r) = n.get("registered") {
                    let name = r
                        .get("name")
                        .and_then(Json::as_str)
                        .ok_or_else(|| bad("registered leaf without a name"))?;
                    let params = r
                        .get("params")
                        .and_then(Json::as_array)
                        .map(|a| a.iter().map(|p| p.as_f64().ok_or_else(|| bad("params are numbers"))).collect())
                        .unwrap_or_else(|| Ok(Vec::new()))?;
                    LeafBody::Registered(RegisteredFn::resolve(name, params)?)
                } else {
                    return Err(bad(format!("leaf {id} needs `table` or `registered`")));
                };
                RawKind::Leaf(Leaf { scope, body })
            }
            other => return Err(bad(format!("unknown node kind `{other}`"))),
        };
        raw.push(RawNode { id, node });
    }
    let root = j
        .get("root")
        .and_then(Json::as_u64)
        .ok_or_else(|| bad("missing `root`"))?;
    build_graph(s, vars, raw, root)
}

pub fn to_string(g: &SpfGraph) -> String {
    serde_json::to_string_pretty(&graph_to_json(g)).expect("json serialization")
}

pub fn from_str(text: &str) -> Result<SpfGraph> {
    let j: Json = serde_json::from_str(text)?;
    graph_from_json(&j, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphBuilder, NodeId};

    #[test]
    fn round_trip_is_stable() {
        let mut vars = VariableTable::binary(2);
        vars.add_interval("y", -1.0, 2.0).unwrap();
        let mut b = GraphBuilder::new(Semiring::MinSum, vars);
        let t = b.table_f64(&[VarId(1), VarId(0)], &[0.0, 1.5, f64::INFINITY, 2.0]).unwrap();
        let q = b.registered("quadratic", &[VarId(2)], vec![0.5, 1.0, 0.25]).unwrap();
        let c = b.constant(Value::Real(3.0));
        let p = b.product(vec![t, q]);
        let s = b.sum(vec![p, c]);
        let g = b.build(s).unwrap();
        let text = to_string(&g);
        let back = from_str(&text).unwrap();
        assert_eq!(back.nodes(), g.nodes());
        assert_eq!(back.vars(), g.vars());
        assert_eq!(to_string(&back), text);
    }

    #[test]
    fn out_of_order_ids_are_renumbered() {
        let text = r#"{"semiring":"counting","variables":[{"name":"a","domain":{"finite":2}}],
            "nodes":[{"id":9,"kind":"sum","children":[3,5]},
                     {"id":5,"kind":"const","value":"7"},
                     {"id":3,"kind":"leaf","scope":["a"],"table":[1,2]}],
            "root":9}"#;
        let g = from_str(text).unwrap();
        assert_eq!(g.root(), NodeId(2));
        assert_eq!(g.size(), 2);
    }

    #[test]
    fn dangling_child_is_reported() {
        let text = r#"{"semiring":"boolean","variables":[],
            "nodes":[{"id":1,"kind":"sum","children":[4]}],"root":1}"#;
        assert!(matches!(from_str(text), Err(SpfError::DanglingChild { node: 1, child: 4 })));
    }

    #[test]
    fn unknown_scope_variable() {
        let text = r#"{"semiring":"boolean","variables":[],
            "nodes":[{"id":1,"kind":"leaf","scope":["q"],"table":[0,1]}],"root":1}"#;
        assert!(matches!(from_str(text), Err(SpfError::UnknownVariable(_))));
    }
}
