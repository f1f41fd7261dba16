use thiserror::Error;

use crate::semiring::Semiring;

/// Every failure the library reports.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpfError {
    #[error("unknown semiring `{0}`")]
    UnknownSemiring(String),
    #[error("value {value} is not in the carrier of {semiring}")]
    Carrier { semiring: Semiring, value: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("invalid domain for `{name}`: {detail}")]
    InvalidDomain { name: String, detail: String },
    #[error("cycle through node {0}")]
    Cycle(u64),
    #[error("node {node} references missing child {child}")]
    DanglingChild { node: u64, child: u64 },
    #[error("missing root node {0}")]
    MissingRoot(u64),
    #[error("duplicate node id {0}")]
    DuplicateNode(u64),
    #[error("{kind} node {node} has no children")]
    EmptyChildren { kind: &'static str, node: u64 },
    #[error("leaf {node}: {detail}")]
    InvalidLeaf { node: u64, detail: String },
    #[error("unknown leaf function `{0}`")]
    UnknownFunction(String),
    #[error("assignment: {0}")]
    InvalidAssignment(String),
    #[error("product node {node} is not decomposable: children share `{variable}`")]
    NotDecomposable { node: usize, variable: String },
    #[error("continuous variable `{variable}` would be summed in non-idempotent semiring {semiring}")]
    ContinuousSum { semiring: Semiring, variable: String },
    #[error("leaf {node} cannot be summed: {detail}")]
    NotSummable { node: usize, detail: String },
    #[error("enumeration of {needed} assignments exceeds limit {limit}")]
    EnumerationLimit { needed: String, limit: u64 },
    #[error("continuous variable `{0}` cannot be enumerated")]
    ContinuousDomain(String),
    #[error("semiring {0} is not idempotent")]
    NotIdempotent(Semiring),
    #[error("no witness: the function is identically zero")]
    NoWitness,
    #[error("variables have mixed cardinalities")]
    MixedCardinality,
    #[error("node budget of {budget} exceeded after {created} nodes")]
    BudgetExceeded { budget: usize, created: usize },
    #[error("sum node {0} is not deterministic")]
    NotDeterministic(usize),
    #[error("junction tree: {0}")]
    InvalidJunctionTree(String),
    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("json: {0}")]
    Json(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error("io: {0}")]
    Io(String),
    #[error("{0}")]
    Precondition(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("internal check failed: {0}")]
    Internal(String),
}

impl SpfError {
    /// Short machine-readable code used by the command line.
    pub fn code(&self) -> &'static str {
        match self {
            SpfError::UnknownSemiring(_) => "unknown-semiring",
            SpfError::Carrier { .. } => "carrier",
            SpfError::UnknownVariable(_) => "unknown-variable",
            SpfError::DuplicateVariable(_) => "duplicate-variable",
            SpfError::InvalidDomain { .. } => "invalid-domain",
            SpfError::Cycle(_) => "cycle",
            SpfError::DanglingChild { .. } => "dangling-child",
            SpfError::MissingRoot(_) => "missing-root",
            SpfError::DuplicateNode(_) => "duplicate-node",
            SpfError::EmptyChildren { .. } => "empty-children",
            SpfError::InvalidLeaf { .. } => "invalid-leaf",
            SpfError::UnknownFunction(_) => "unknown-function",
            SpfError::InvalidAssignment(_) => "invalid-assignment",
            SpfError::NotDecomposable { .. } => "not-decomposable",
            SpfError::ContinuousSum { .. } => "continuous-sum",
            SpfError::NotSummable { .. } => "not-summable",
            SpfError::EnumerationLimit { .. } => "enumeration-limit",
            SpfError::ContinuousDomain(_) => "continuous-domain",
            SpfError::NotIdempotent(_) => "not-idempotent",
            SpfError::NoWitness => "no-witness",
            SpfError::MixedCardinality => "mixed-cardinality",
            SpfError::BudgetExceeded { .. } => "budget-exceeded",
            SpfError::NotDeterministic(_) => "not-deterministic",
            SpfError::InvalidJunctionTree(_) => "invalid-junction-tree",
            SpfError::Parse { .. } => "parse",
            SpfError::Json(_) => "json",
            SpfError::Csv(_) => "csv",
            SpfError::Io(_) => "io",
            SpfError::Precondition(_) => "precondition",
            SpfError::Unsupported(_) => "unsupported",
            SpfError::Internal(_) => "internal",
        }
    }
}

impl From<serde_json::Error> for SpfError {
    fn from(e: serde_json::Error) -> Self {
        SpfError::Json(e.to_string())
    }
}

impl From<std::io::Error> for SpfError {
    fn from(e: std::io::Error) -> Self {
        SpfError::Io(e.to_string())
    }
}

impl From<csv::Error> for SpfError {
    fn from(e: csv::Error) -> Self {
        SpfError::Csv(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SpfError>;
