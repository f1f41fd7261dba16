use std::collections::HashMap;
use std::fmt::Write as _;

use num_bigint::BigUint;

use crate::engine::{make_deterministic_decomposable, sum_spf, EngineConfig, EngineStats};
use crate::error::{Result, SpfError};
use crate::graph::{Assignment, GraphBuilder, NodeId, SpfGraph, VarId, VariableTable};
use crate::semiring::{Semiring, Value};
use crate::summation::{extract_argument, sum_decomposable};
use crate::translate::{translate, TranslateOptions};

/// A formula in conjunctive normal form with DIMACS literals (`±v`, 1-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: usize,
    pub clauses: Vec<Vec<i64>>,
}

impl Cnf {
    pub fn new(num_vars: usize, clauses: Vec<Vec<i64>>) -> Result<Cnf> {
        for c in &clauses {
            for &l in c {
                if l == 0 || l.unsigned_abs() as usize > num_vars {
                    return Err(SpfError::Precondition(format!(
                        "literal {l} is outside 1..={num_vars}"
                    )));
                }
            }
        }
        Ok(Cnf { num_vars, clauses })
    }

    pub fn has_empty_clause(&self) -> bool {
        self.clauses.iter().any(Vec::is_empty)
    }

    pub fn variables(&self) -> VariableTable {
        VariableTable::binary(self.num_vars)
    }

    fn literal_true(l: i64, a: &Assignment) -> bool {
        let v = VarId(l.unsigned_abs() as usize - 1);
        (a.index(v) == Some(1)) == (l > 0)
    }

    /// Number of clauses satisfied by a full assignment.
    pub fn satisfied_count(&self, a: &Assignment) -> usize {
        self.clauses
            .iter()
            .filter(|c| c.iter().any(|l| Self::literal_true(*l, a)))
            .count()
    }

    pub fn is_satisfied_by(&self, a: &Assignment) -> bool {
        self.satisfied_count(a) == self.clauses.len()
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                write!(out, "{l} ").unwrap();
            }
            out.push_str("0\n");
        }
        out
    }
}

fn parse_err(line: usize, detail: impl Into<String>) -> SpfError {
    SpfError::Parse {
        line,
        detail: detail.into(),
    }
}

/// Reads DIMACS CNF: `c` comments, a `p cnf n m` header, then `0`-terminated clauses.
pub fn parse_dimacs(text: &str) -> Result<Cnf> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<i64> = Vec::new();
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(parse_err(line_no, "second header"));
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                return Err(parse_err(line_no, format!("malformed header `{line}`")));
            }
            let n = parts[2]
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad variable count `{}`", parts[2])))?;
            let m = parts[3]
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad clause count `{}`", parts[3])))?;
            header = Some((n, m, line_no));
            continue;
        }
        let Some((n, _, _)) = header else {
            return Err(parse_err(line_no, "clause before the `p cnf` header"));
        };
        for tok in line.split_whitespace() {
            let l: i64 = tok
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad literal `{tok}`")))?;
            if l == 0 {
                clauses.push(std::mem::take(&mut current));
            } else if l.unsigned_abs() > n as u64 {
                return Err(parse_err(line_no, format!("literal {l} exceeds {n} variables")));
            } else {
                current.push(l);
            }
        }
    }
    let Some((n, m, header_line)) = header else {
        return Err(parse_err(last_line.max(1), "missing `p cnf` header"));
    };
    if !current.is_empty() {
        return Err(parse_err(last_line, "last clause is not terminated by 0"));
    }
    if clauses.len() != m {
        return Err(parse_err(
            header_line,
            format!("header declares {m} clauses, found {}", clauses.len()),
        ));
    }
    Ok(Cnf { num_vars: n, clauses })
}

/// The flat clause network of `cnf` in `semiring`: a product of clause sums over literal leaves.
///
/// Literal leaves hold `sat` where the literal is true and `unsat` elsewhere; an empty clause is
/// the constant `unsat`; a formula without clauses is the constant one.
/// A single clause is the root itself.
fn clause_network(cnf: &Cnf, semiring: Semiring, sat: Value, unsat: Value) -> Result<SpfGraph> {
    let mut b = GraphBuilder::new(semiring, cnf.variables());
    let mut literals: HashMap<i64, NodeId> = HashMap::new();
    let mut clauses = Vec::with_capacity(cnf.clauses.len());
    for c in &cnf.clauses {
        let mut lits: Vec<i64> = Vec::with_capacity(c.len());
        for l in c {
            if !lits.contains(l) {
                lits.push(*l);
            }
        }
        if lits.is_empty() {
            clauses.push(b.constant(unsat.clone()));
            continue;
        }
        let mut children = Vec::with_capacity(lits.len());
        for l in lits {
            let id = match literals.get(&l) {
                Some(id) => *id,
                None => {
                    let v = VarId(l.unsigned_abs() as usize - 1);
                    let table = if l > 0 {
                        vec![unsat.clone(), sat.clone()]
                    } else {
                        vec![sat.clone(), unsat.clone()]
                    };
                    let id = b.table(&[v], table);
                    literals.insert(l, id);
                    id
                }
            };
            children.push(id);
        }
        clauses.push(b.sum(children));
    }
    let root = match clauses.len() {
        0 => b.one(),
        1 => clauses[0],
        _ => b.product(clauses),
    };
    b.build(root)
}

/// Boolean NNF of `cnf`, sharing one leaf per literal.
pub fn cnf_to_spf(cnf: &Cnf) -> Result<SpfGraph> {
    clause_network(cnf, Semiring::Boolean, Value::Bool(true), Value::Bool(false))
}

/// Max-sum network whose value at `x` is the number of clauses `x` satisfies.
pub fn sat_number_spf(cnf: &Cnf) -> Result<SpfGraph> {
    clause_network(cnf, Semiring::MaxSum, Value::Real(1.0), Value::Real(0.0))
}

#[derive(Clone, Debug)]
pub struct SatResult {
    pub satisfiable: bool,
    pub witness: Option<Assignment>,
    pub stats: EngineStats,
}

pub fn sat(cnf: &Cnf, config: &EngineConfig) -> Result<SatResult> {
    let g = cnf_to_spf(cnf)?;
    let out = sum_spf(&g, config)?;
    let satisfiable = out.value == Value::Bool(true);
    let witness = if satisfiable {
        let r = sum_decomposable(&out.graph)?;
        let a = extract_argument(&out.graph, &r)?;
        if !cnf.is_satisfied_by(&a) {
            return Err(SpfError::Internal("extracted witness does not satisfy the formula".into()));
        }
        Some(a)
    } else {
        None
    };
    Ok(SatResult {
        satisfiable,
        witness,
        stats: out.stats,
    })
}

/// Exact number of satisfying assignments.
pub fn model_count(cnf: &Cnf, config: &EngineConfig) -> Result<BigUint> {
    let g = cnf_to_spf(cnf)?;
    let dd = make_deterministic_decomposable(&g, config)?;
    let counting = translate(&dd, Semiring::Counting, &TranslateOptions::unchecked())?;
    match sum_decomposable(&counting)?.value {
        Value::Nat(n) => Ok(n),
        other => Err(SpfError::Internal(format!("count is not a natural: {other}"))),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SatNumberResult {
    pub value: usize,
    pub witness: Assignment,
}

/// Largest number of simultaneously satisfiable clauses, with an assignment attaining it.
pub fn max_sat(cnf: &Cnf, config: &EngineConfig) -> Result<SatNumberResult> {
    let g = sat_number_spf(cnf)?;
    let out = sum_spf(&g, config)?;
    let r = sum_decomposable(&out.graph)?;
    let witness = extract_argument(&out.graph, &r)?;
    let value = out.value.to_f64().round() as usize;
    if cnf.satisfied_count(&witness) != value {
        return Err(SpfError::Internal(format!(
            "witness satisfies {} clauses, expected {value}",
            cnf.satisfied_count(&witness)
        )));
    }
    Ok(SatNumberResult { value, witness })
}
