use std::collections::HashMap;

use serde_json::{json, Value as Json};

use crate::engine::{sum_spf, EngineConfig, EngineStats};
use crate::error::{Result, SpfError};
use crate::graph::{Assignment, GraphBuilder, NodeId, SpfGraph, VarId, VariableTable};
use crate::semiring::{Semiring, Value};
use crate::summation::{extract_argument, sum_decomposable};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub scope: Vec<VarId>,
    /// Satisfying tuples, one value index per scope variable.
    pub tuples: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CspInstance {
    pub vars: VariableTable,
    pub constraints: Vec<Constraint>,
}

impl CspInstance {
    pub fn new(vars: VariableTable, constraints: Vec<Constraint>) -> Result<CspInstance> {
        for c in &constraints {
            for v in &c.scope {
                if v.0 >= vars.len() {
                    return Err(SpfError::UnknownVariable(format!("#{}", v.0)));
                }
                if vars.domain(*v).cardinality().is_none() {
                    return Err(SpfError::ContinuousDomain(vars.name(*v).to_string()));
                }
            }
            for t in &c.tuples {
                if t.len() != c.scope.len() {
                    return Err(SpfError::Precondition(format!(
                        "tuple {t:?} does not match a scope of {} variables",
                        c.scope.len()
                    )));
                }
                for (v, x) in c.scope.iter().zip(t) {
                    if *x >= vars.domain(*v).cardinality().unwrap_or(0) {
                        return Err(SpfError::Precondition(format!(
                            "value {x} is outside the domain of {}",
                            vars.name(*v)
                        )));
                    }
                }
            }
        }
        Ok(CspInstance { vars, constraints })
    }

    pub fn is_solution(&self, a: &Assignment) -> bool {
        self.constraints.iter().all(|c| {
            let row: Option<Vec<usize>> = c.scope.iter().map(|v| a.index(*v)).collect();
            row.is_some_and(|row| c.tuples.contains(&row))
        })
    }

    /// Reads `{"vars": [names], "domains": [sizes], "constraints": [{"scope": [names], "tuples": [[..]]}]}`.
    pub fn from_json(j: &Json) -> Result<CspInstance> {
        let bad = |d: &str| SpfError::Precondition(format!("csp: {d}"));
        let names = j.get("vars").and_then(Json::as_array).ok_or_else(|| bad("`vars` must be an array"))?;
        let domains = j
            .get("domains")
            .and_then(Json::as_array)
            .ok_or_else(|| bad("`domains` must be an array"))?;
        if names.len() != domains.len() {
            return Err(bad("`vars` and `domains` differ in length"));
        }
        let mut vars = VariableTable::new();
        for (n, d) in names.iter().zip(domains) {
            let n = n.as_str().ok_or_else(|| bad("variable names must be strings"))?;
            let d = d.as_u64().ok_or_else(|| bad("domain sizes must be naturals"))?;
            match d {
                1 => vars.add_unary(n)?,
                d => vars.add_finite(n, d as usize)?,
            };
        }
        let mut constraints = Vec::new();
        for c in j
            .get("constraints")
            .and_then(Json::as_array)
            .ok_or_else(|| bad("`constraints` must be an array"))?
        {
            let scope = c
                .get("scope")
                .and_then(Json::as_array)
                .ok_or_else(|| bad("constraint without `scope`"))?
                .iter()
                .map(|n| vars.require(n.as_str().ok_or_else(|| bad("scope entries must be names"))?))
                .collect::<Result<Vec<_>>>()?;
            let tuples = c
                .get("tuples")
                .and_then(Json::as_array)
                .ok_or_else(|| bad("constraint without `tuples`"))?
                .iter()
                .map(|t| {
                    t.as_array()
                        .ok_or_else(|| bad("tuples must be arrays"))?
                        .iter()
                        .map(|x| x.as_u64().map(|x| x as usize).ok_or_else(|| bad("tuple values must be naturals")))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            constraints.push(Constraint { scope, tuples });
        }
        CspInstance::new(vars, constraints)
    }

    pub fn to_json(&self) -> Json {
        json!({
            "type": "csp",
            "vars": self.vars.iter().map(|(_, v)| v.name.clone()).collect::<Vec<_>>(),
            "domains": self.vars.iter().map(|(_, v)| v.domain.cardinality().unwrap_or(0)).collect::<Vec<_>>(),
            "constraints": self.constraints.iter().map(|c| json!({
                "scope": c.scope.iter().map(|v| self.vars.name(*v)).collect::<Vec<_>>(),
                "tuples": c.tuples,
            })).collect::<Vec<_>>(),
        })
    }
}

/// OR-AND network: a conjunction over constraints of the disjunction over satisfying tuples of
/// the conjunction of that tuple's indicators.
pub fn csp_to_spf(csp: &CspInstance) -> Result<SpfGraph> {
    let mut b = GraphBuilder::new(Semiring::Boolean, csp.vars.clone());
    let mut indicators: HashMap<(VarId, usize), NodeId> = HashMap::new();
    let mut conj = Vec::with_capacity(csp.constraints.len());
    for c in &csp.constraints {
        if c.tuples.is_empty() {
            conj.push(b.zero());
            continue;
        }
        if c.scope.is_empty() {
            conj.push(b.one());
            continue;
        }
        let mut disj = Vec::with_capacity(c.tuples.len());
        for t in &c.tuples {
            let mut lits = Vec::with_capacity(t.len());
            for (v, x) in c.scope.iter().zip(t) {
                let id = *indicators
                    .entry((*v, *x))
                    .or_insert_with(|| b.indicator(*v, *x));
                lits.push(id);
            }
            disj.push(if lits.len() == 1 { lits[0] } else { b.product(lits) });
        }
        conj.push(b.sum(disj));
    }
    let root = match conj.len() {
        0 => b.one(),
        1 => conj[0],
        _ => b.product(conj),
    };
    b.build(root)
}

#[derive(Clone, Debug)]
pub struct CspResult {
    pub solution: Option<Assignment>,
    pub stats: EngineStats,
}

pub fn solve_csp(csp: &CspInstance, config: &EngineConfig) -> Result<CspResult> {
    let g = csp_to_spf(csp)?;
    let out = sum_spf(&g, config)?;
    if out.value != Value::Bool(true) {
        return Ok(CspResult {
            solution: None,
            stats: out.stats,
        });
    }
    let r = sum_decomposable(&out.graph)?;
    let a = extract_argument(&out.graph, &r)?;
    if !csp.is_solution(&a) {
        return Err(SpfError::Internal("extracted solution violates a constraint".into()));
    }
    Ok(CspResult {
        solution: Some(a),
        stats: out.stats,
    })
}

/// `x_i ≠ x_j` over `d` values.
pub fn not_equal(i: VarId, j: VarId, d: usize) -> Constraint {
    let mut tuples = Vec::new();
    for a in 0..d {
        for b in 0..d {
            if a != b {
                tuples.push(vec![a, b]);
            }
        }
    }
    Constraint { scope: vec![i, j], tuples }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coloring(n: usize, edges: &[(usize, usize)], d: usize) -> CspInstance {
        let cons = edges.iter().map(|(i, j)| not_equal(VarId(*i), VarId(*j), d)).collect();
        CspInstance::new(VariableTable::finite(n, d), cons).unwrap()
    }

    #[test]
    fn network_shapes() {
        let csp = coloring(2, &[(0, 1)], 2);
        let g = csp_to_spf(&csp).unwrap();
        assert_eq!(g.sum_count(), 1);
        assert_eq!(g.node(g.root()).children().len(), 2);

        let empty = CspInstance::new(
            VariableTable::binary(2),
            vec![Constraint {
                scope: vec![VarId(0), VarId(1)],
                tuples: vec![],
            }],
        )
        .unwrap();
        let g = csp_to_spf(&empty).unwrap();
        assert_eq!(g.evaluate(&Assignment::from_indices(&[0, 0])).unwrap(), Value::Bool(false));
    }

    #[test]
    fn full_relation_accepts_everything() {
        let all = Constraint {
            scope: vec![VarId(0), VarId(1)],
            tuples: vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]],
        };
        let csp = CspInstance::new(VariableTable::binary(2), vec![all]).unwrap();
        let g = csp_to_spf(&csp).unwrap();
        for x in 0..4 {
            let a = Assignment::from_indices(&[x / 2, x % 2]);
            assert_eq!(g.evaluate(&a).unwrap(), Value::Bool(true));
        }
    }

    #[test]
    fn solve_examples() {
        let cfg = EngineConfig::default();
        let path = coloring(3, &[(0, 1), (1, 2)], 2);
        let s = solve_csp(&path, &cfg).unwrap().solution.unwrap();
        assert!(path.is_solution(&s));
        let triangle = coloring(3, &[(0, 1), (1, 2), (0, 2)], 2);
        assert!(solve_csp(&triangle, &cfg).unwrap().solution.is_none());
        let free = coloring(3, &[], 3);
        assert!(solve_csp(&free, &cfg).unwrap().solution.is_some());
    }

    #[test]
    fn json_round_trip() {
        let csp = coloring(3, &[(0, 1), (1, 2)], 3);
        assert_eq!(CspInstance::from_json(&csp.to_json()).unwrap(), csp);
    }
}
