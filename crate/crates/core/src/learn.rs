//! Learning decomposable graphs from data by variable partitioning and instance clustering.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bench::RastriginInstance;
use crate::error::{Result, SpfError};
use crate::graph::{Domain, GraphBuilder, NodeId, SpfGraph, VarId, VariableTable};
use crate::semiring::Semiring;
use crate::summation::derive_seed;

/// Training instances over the variables of the graph to learn.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    /// Variables of the learned graph.
    pub vars: VariableTable,
    /// One row per instance, one value per variable; label vectors in the structured variant.
    pub values: Vec<Vec<f64>>,
    /// Scalar labels, when the graph should reproduce them.
    pub targets: Option<Vec<f64>>,
    /// Extra per-instance inputs that are not variables of the graph.
    pub inputs: Vec<Vec<f64>>,
    pub input_names: Vec<String>,
}

fn is_label_vector_column(name: &str) -> bool {
    name.strip_prefix("y_")
        .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
}

fn infer_domain(column: &[f64]) -> Domain {
    let integral = column.iter().all(|v| *v >= 0.0 && v.fract() == 0.0);
    if integral {
        let max = column.iter().fold(0.0f64, |a, b| a.max(*b)) as usize;
        return Domain::Finite((max + 1).max(2));
    }
    let lo = column.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo < hi {
        Domain::Interval(lo, hi)
    } else {
        Domain::Interval(lo - 0.5, hi + 0.5)
    }
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_structured(&self) -> bool {
        self.targets.is_none()
    }

    /// Reads a CSV whose header names the variables followed by label columns `y` or `y_1..y_m`.
    ///
    /// With a single `y` column the other columns are the variables. With `y_1..y_m` the label
    /// columns are the variables and the other columns are inputs. Columns of non-negative
    /// integers become finite variables; other columns become intervals spanning the data.
    pub fn from_csv<R: Read>(reader: R) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != header.len() {
                return Err(SpfError::Parse {
                    line: i + 2,
                    detail: format!("expected {} fields, got {}", header.len(), rec.len()),
                });
            }
            let row = rec
                .iter()
                .map(|f| {
                    f.parse::<f64>().map_err(|_| SpfError::Parse {
                        line: i + 2,
                        detail: format!("`{f}` is not a number"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let scalar = header.iter().position(|h| h == "y");
        let vector: Vec<usize> = (0..header.len()).filter(|c| is_label_vector_column(&header[*c])).collect();
        let (var_cols, input_cols, targets) = match (scalar, vector.is_empty()) {
            (Some(_), false) => {
                return Err(SpfError::Parse {
                    line: 1,
                    detail: "both `y` and `y_i` label columns".into(),
                })
            }
            (Some(y), true) => {
                let vars: Vec<usize> = (0..header.len()).filter(|c| *c != y).collect();
                (vars, Vec::new(), Some(rows.iter().map(|r| r[y]).collect::<Vec<_>>()))
            }
            (None, false) => {
                let inputs: Vec<usize> = (0..header.len()).filter(|c| !vector.contains(c)).collect();
                (vector, inputs, None)
            }
            (None, true) => {
                return Err(SpfError::Parse {
                    line: 1,
                    detail: "no label column `y` or `y_1..y_m`".into(),
                })
            }
        };
        let mut vars = VariableTable::new();
        for c in &var_cols {
            let column: Vec<f64> = rows.iter().map(|r| r[*c]).collect();
            vars.add(&header[*c], infer_domain(&column))?;
        }
        Ok(Dataset {
            vars,
            values: rows.iter().map(|r| var_cols.iter().map(|c| r[*c]).collect()).collect(),
            targets,
            inputs: rows.iter().map(|r| input_cols.iter().map(|c| r[*c]).collect()).collect(),
            input_names: input_cols.iter().map(|c| header[*c].clone()).collect(),
        })
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = Vec::new();
        if self.is_structured() {
            header.extend(self.input_names.iter().cloned());
        }
        header.extend(self.vars.iter().map(|(_, v)| v.name.clone()));
        if self.targets.is_some() {
            header.push("y".into());
        }
        w.write_record(&header)?;
        for (i, row) in self.values.iter().enumerate() {
            let mut rec: Vec<String> = Vec::new();
            if self.is_structured() {
                rec.extend(self.inputs[i].iter().map(|v| v.to_string()));
            }
            rec.extend(row.iter().map(|v| v.to_string()));
            if let Some(t) = &self.targets {
                rec.push(t[i].to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// The instances at `rows`, keeping variables and inputs.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            vars: self.vars.clone(),
            values: rows.iter().map(|r| self.values[*r].clone()).collect(),
            targets: self.targets.as_ref().map(|t| rows.iter().map(|r| t[*r]).collect()),
            inputs: rows.iter().map(|r| self.inputs.get(*r).cloned().unwrap_or_default()).collect(),
            input_names: self.input_names.clone(),
        }
    }
}

fn average_ranks(a: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..a.len()).collect();
    idx.sort_by(|i, j| a[*i].total_cmp(&a[*j]));
    let mut ranks = vec![0.0; a.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && a[idx[j + 1]] == a[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for k in &idx[i..=j] {
            ranks[*k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

/// Spearman rank correlation with average ranks for ties; 0 when either input is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 3 {
        return Err(SpfError::Precondition(format!(
            "spearman needs two equal-length inputs of at least 3 values, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(pearson(&average_ranks(a), &average_ranks(b)))
}

/// Connected components of the graph joining variables whose `|spearman| ≥ rho_min` over `rows`.
///
/// Components are returned in order of their smallest variable, each sorted.
pub fn variable_partition(data: &[Vec<f64>], rows: &[usize], vars: &[usize], rho_min: f64) -> Result<Vec<Vec<usize>>> {
    let n = vars.len();
    let columns: Vec<Vec<f64>> = vars
        .iter()
        .map(|v| rows.iter().map(|r| data[*r][*v]).collect())
        .collect();
    let ranks: Vec<Vec<f64>> = columns.iter().map(|c| average_ranks(c)).collect();
    if rows.len() < 3 {
        return Err(SpfError::Precondition(format!("partitioning needs 3 instances, got {}", rows.len())));
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if pearson(&ranks[i], &ranks[j]).abs() >= rho_min {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(vars[i]);
    }
    for g in &mut groups {
        g.sort();
    }
    Ok(groups)
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, m) in centers.iter().enumerate() {
        let d = dist2(p, m);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn kmeans_once(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng, iters: usize) -> (Vec<usize>, f64) {
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, d) in d2.iter().enumerate() {
                if u < *d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[pick].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(dist2(p, centers.last().unwrap()));
        }
    }
    let dim = points[0].len();
    let mut assign = vec![usize::MAX; n];
    for _ in 0..iters {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let c = nearest(p, &centers).0;
            if assign[i] != c {
                assign[i] = c;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            counts[assign[i]] += 1;
            for (s, x) in sums[assign[i]].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            } else {
                let far = (0..n)
                    .max_by(|a, b| {
                        dist2(&points[*a], &centers[assign[*a]])
                            .total_cmp(&dist2(&points[*b], &centers[assign[*b]]))
                            .then(b.cmp(a))
                    })
                    .expect("nonempty");
                centers[c] = points[far].clone();
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    fill_empty(points, &mut assign, &centers, k);
    let inertia = points
        .iter()
        .zip(&assign)
        .map(|(p, c)| dist2(p, &centers[*c]))
        .sum();
    (assign, inertia)
}

/// Moves the point farthest from its center into each empty cluster, never emptying another.
fn fill_empty(points: &[Vec<f64>], assign: &mut [usize], centers: &[Vec<f64>], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        for c in assign.iter() {
            counts[*c] += 1;
        }
        let Some(empty) = counts.iter().position(|c| *c == 0) else {
            return;
        };
        let donor = (0..points.len())
            .filter(|i| counts[assign[*i]] > 1)
            .max_by(|a, b| {
                dist2(&points[*a], &centers[assign[*a]])
                    .total_cmp(&dist2(&points[*b], &centers[assign[*b]]))
                    .then(a.cmp(b))
            })
            .expect("more points than clusters");
        assign[donor] = empty;
    }
}

/// k-means++ with restarts on `rows` of `data` restricted to `vars`; returns nonempty clusters.
pub fn cluster_instances(
    data: &[Vec<f64>],
    rows: &[usize],
    vars: &[usize],
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(SpfError::Precondition(format!("k must be at least 2, got {k}")));
    }
    if rows.len() < k {
        return Err(SpfError::Precondition(format!(
            "cannot form {k} clusters from {} instances",
            rows.len()
        )));
    }
    let points: Vec<Vec<f64>> = rows.iter().map(|r| vars.iter().map(|v| data[*r][*v]).collect()).collect();
    let mut best: Option<(Vec<usize>, f64)> = None;
    for attempt in 0..restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, attempt as u64));
        let (assign, inertia) = kmeans_once(&points, k, &mut rng, 100);
        if best.as_ref().is_none_or(|(_, b)| inertia < *b) {
            best = Some((assign, inertia));
        }
    }
    let (assign, _) = best.expect("one attempt");
    let mut clusters = vec![Vec::new(); k];
    for (i, c) in assign.iter().enumerate() {
        clusters[*c].push(rows[i]);
    }
    clusters.retain(|c| !c.is_empty());
    Ok(clusters)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnConfig {
    /// Instance-count threshold: at most this many instances make a leaf.
    pub t: usize,
    /// Variable-count threshold: at most this many variables make a leaf.
    pub v: usize,
    pub rho_min: f64,
    pub k: usize,
    pub seed: u64,
    pub kmeans_restarts: usize,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            t: 30,
            v: 2,
            rho_min: 0.3,
            k: 2,
            seed: 0,
            kmeans_restarts: 10,
        }
    }
}

impl LearnConfig {
    fn validate(&self) -> Result<()> {
        if self.t < 1 || self.v < 1 || self.k < 2 || !(0.0..=1.0).contains(&self.rho_min) {
            return Err(SpfError::Precondition(format!(
                "invalid learner settings t={} v={} k={} rho_min={}",
                self.t, self.v, self.k, self.rho_min
            )));
        }
        Ok(())
    }
}

/// The learned structure before leaves are estimated.
#[derive(Clone, Debug, PartialEq)]
pub enum Structure {
    Leaf { rows: Vec<usize>, vars: Vec<usize> },
    Product { rows: Vec<usize>, children: Vec<Structure> },
    Sum { rows: Vec<usize>, children: Vec<Structure> },
}

impl Structure {
    pub fn rows(&self) -> &[usize] {
        match self {
            Structure::Leaf { rows, .. } | Structure::Product { rows, .. } | Structure::Sum { rows, .. } => rows,
        }
    }

    pub fn vars(&self) -> Vec<usize> {
        match self {
            Structure::Leaf { vars, .. } => vars.clone(),
            Structure::Product { children, .. } => {
                let mut v: Vec<usize> = children.iter().flat_map(Structure::vars).collect();
                v.sort();
                v
            }
            Structure::Sum { children, .. } => children[0].vars(),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Structure::Leaf { .. } => 1,
            Structure::Product { children, .. } | Structure::Sum { children, .. } => {
                children.iter().map(Structure::leaf_count).sum()
            }
        }
    }
}

fn learn_rec(data: &[Vec<f64>], rows: Vec<usize>, vars: Vec<usize>, cfg: &LearnConfig, seed: u64) -> Result<Structure> {
    if rows.len() <= cfg.t || vars.len() <= cfg.v {
        return Ok(Structure::Leaf { rows, vars });
    }
    if rows.len() >= 3 {
        let parts = variable_partition(data, &rows, &vars, cfg.rho_min)?;
        if parts.len() > 1 {
            let children = parts
                .into_iter()
                .enumerate()
                .map(|(i, p)| learn_rec(data, rows.clone(), p, cfg, derive_seed(seed, i as u64)))
                .collect::<Result<_>>()?;
            return Ok(Structure::Product { rows, children });
        }
    }
    if rows.len() < cfg.k {
        return Ok(Structure::Leaf { rows, vars });
    }
    let clusters = cluster_instances(data, &rows, &vars, cfg.k, cfg.kmeans_restarts, seed)?;
    if clusters.len() < 2 {
        return Ok(Structure::Leaf { rows, vars });
    }
    let children = clusters
        .into_iter()
        .enumerate()
        .map(|(i, c)| learn_rec(data, c, vars.clone(), cfg, derive_seed(seed, 1 << 32 | i as u64)))
        .collect::<Result<_>>()?;
    Ok(Structure::Sum { rows, children })
}

/// Runs the recursive learner on all instances and variables of `data`.
pub fn learn_structure(data: &Dataset, cfg: &LearnConfig) -> Result<Structure> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(SpfError::Precondition("empty dataset".into()));
    }
    learn_rec(
        &data.values,
        (0..data.len()).collect(),
        (0..data.vars.len()).collect(),
        cfg,
        cfg.seed,
    )
}

/// Named leaf estimators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LeafStrategy {
    /// Finite variables: mean scalar label per cell, 0 for cells without instances.
    TableAverage,
    /// Interval variables: `Σ (y_i - mean_i)²` around the mean label vector of the instances.
    MeanQuadratic,
    /// The benchmark's ground-truth function restricted to the leaf, other variables fixed at 0.
    OracleRestriction,
}

impl FromStr for LeafStrategy {
    type Err = SpfError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table-average" => Ok(LeafStrategy::TableAverage),
            "mean-quadratic" => Ok(LeafStrategy::MeanQuadratic),
            "oracle-restriction" => Ok(LeafStrategy::OracleRestriction),
            other => Err(SpfError::Precondition(format!("unknown leaf estimator `{other}`"))),
        }
    }
}

impl fmt::Display for LeafStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LeafStrategy::TableAverage => "table-average",
            LeafStrategy::MeanQuadratic => "mean-quadratic",
            LeafStrategy::OracleRestriction => "oracle-restriction",
        })
    }
}

/// Everything a leaf estimator may need.
pub struct LeafContext<'a> {
    pub data: &'a Dataset,
    pub semiring: Semiring,
    /// Ground truth for [`LeafStrategy::OracleRestriction`].
    pub oracle: Option<&'a RastriginInstance>,
}

pub fn estimate_leaf(
    b: &mut GraphBuilder,
    ctx: &LeafContext<'_>,
    strategy: LeafStrategy,
    rows: &[usize],
    vars: &[usize],
) -> Result<NodeId> {
    let scope: Vec<VarId> = vars.iter().map(|v| VarId(*v)).collect();
    let data = ctx.data;
    match strategy {
        LeafStrategy::TableAverage => {
            let targets = data
                .targets
                .as_ref()
                .ok_or_else(|| SpfError::Precondition("table-average needs scalar labels".into()))?;
            let mut cards = Vec::with_capacity(scope.len());
            for v in &scope {
                match data.vars.domain(*v) {
                    Domain::Finite(d) => cards.push(d),
                    Domain::Interval(..) => {
                        return Err(SpfError::ContinuousDomain(data.vars.name(*v).to_string()))
                    }
                }
            }
            let cells: usize = cards.iter().product();
            let mut sum = vec![0.0; cells];
            let mut count = vec![0usize; cells];
            for r in rows {
                let cell = vars.iter().zip(&cards).fold(0, |acc, (v, d)| acc * d + data.values[*r][*v] as usize);
                sum[cell] += targets[*r];
                count[cell] += 1;
            }
            let values: Vec<f64> = sum
                .iter()
                .zip(&count)
                .map(|(s, c)| if *c == 0 { 0.0 } else { s / *c as f64 })
                .collect();
            b.table_f64(&scope, &values)
        }
        LeafStrategy::MeanQuadratic => {
            let mut params = vec![0.0];
            for v in vars {
                let mean = rows.iter().map(|r| data.values[*r][*v]).sum::<f64>() / rows.len().max(1) as f64;
                params.push(1.0);
                params.push(mean);
            }
            b.registered("quadratic", &scope, params)
        }
        LeafStrategy::OracleRestriction => {
            let instance = ctx
                .oracle
                .ok_or_else(|| SpfError::Precondition("oracle-restriction needs a ground-truth instance".into()))?;
            b.registered("rastrigin-restricted", &scope, instance.restricted_params(vars))
        }
    }
}

/// Turns a structure into a graph, estimating every leaf with `strategy`.
pub fn instantiate(structure: &Structure, ctx: &LeafContext<'_>, strategy: LeafStrategy) -> Result<SpfGraph> {
    fn rec(
        s: &Structure,
        b: &mut GraphBuilder,
        ctx: &LeafContext<'_>,
        strategy: LeafStrategy,
    ) -> Result<NodeId> {
        match s {
            Structure::Leaf { rows, vars } => estimate_leaf(b, ctx, strategy, rows, vars),
            Structure::Product { children, .. } => {
                let ids = children.iter().map(|c| rec(c, b, ctx, strategy)).collect::<Result<_>>()?;
                Ok(b.product(ids))
            }
            Structure::Sum { children, .. } => {
                let ids = children.iter().map(|c| rec(c, b, ctx, strategy)).collect::<Result<_>>()?;
                Ok(b.sum(ids))
            }
        }
    }
    let mut b = GraphBuilder::new(ctx.semiring, ctx.data.vars.clone());
    let root = rec(structure, &mut b, ctx, strategy)?;
    let g = b.build(root)?;
    g.require_decomposable()?;
    Ok(g)
}

#[derive(Clone, Debug)]
pub struct LearnedSpf {
    pub graph: SpfGraph,
    pub structure: Structure,
}

/// Learns a structure and estimates its leaves.
pub fn learn_spf(data: &Dataset, cfg: &LearnConfig, ctx_semiring: Semiring, strategy: LeafStrategy) -> Result<LearnedSpf> {
    let structure = learn_structure(data, cfg)?;
    let ctx = LeafContext {
        data,
        semiring: ctx_semiring,
        oracle: None,
    };
    let graph = instantiate(&structure, &ctx, strategy)?;
    Ok(LearnedSpf { graph, structure })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn spearman_examples() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[2.0, 1.0, 4.0, 3.0]).unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert!(spearman(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn ties_get_average_ranks() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    fn paired(m: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.1).unwrap();
        (0..m)
            .map(|_| {
                let a: f64 = rng.random_range(-1.0..1.0);
                let b: f64 = rng.random_range(-1.0..1.0);
                vec![
                    a + noise.sample(&mut rng),
                    b + noise.sample(&mut rng),
                    a + noise.sample(&mut rng),
                    b + noise.sample(&mut rng),
                ]
            })
            .collect()
    }

    #[test]
    fn partition_recovers_pairs() {
        let data = paired(300, 1);
        let rows: Vec<usize> = (0..300).collect();
        let parts = variable_partition(&data, &rows, &[0, 1, 2, 3], 0.3).unwrap();
        assert_eq!(parts, vec![vec![0, 2], vec![1, 3]]);
        assert_eq!(variable_partition(&data, &rows, &[0, 1, 2, 3], 0.0).unwrap().len(), 1);
    }

    #[test]
    fn partition_of_noise_is_singletons() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data: Vec<Vec<f64>> = (0..300).map(|_| (0..4).map(|_| rng.random::<f64>()).collect()).collect();
        let rows: Vec<usize> = (0..300).collect();
        assert_eq!(variable_partition(&data, &rows, &[0, 1, 2, 3], 0.9).unwrap().len(), 4);
    }

    #[test]
    fn kmeans_separates_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let data: Vec<Vec<f64>> = (0..100)
            .map(|i| {
                let c = if i % 2 == 0 { -3.0 } else { 3.0 };
                vec![c + noise.sample(&mut rng) * 0.5, c + noise.sample(&mut rng) * 0.5]
            })
            .collect();
        let rows: Vec<usize> = (0..100).collect();
        let clusters = cluster_instances(&data, &rows, &[0, 1], 2, 10, 7).unwrap();
        assert_eq!(clusters.len(), 2);
        for c in clusters {
            let parity = c[0] % 2;
            assert!(c.iter().all(|r| r % 2 == parity));
        }
    }

    #[test]
    fn kmeans_degenerate_cases() {
        let data: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let rows: Vec<usize> = (0..5).collect();
        let clusters = cluster_instances(&data, &rows, &[0], 5, 10, 0).unwrap();
        assert_eq!(clusters.len(), 5);
        assert!(clusters.iter().all(|c| c.len() == 1));

        let same = vec![vec![1.0, 1.0]; 6];
        let rows: Vec<usize> = (0..6).collect();
        let clusters = cluster_instances(&same, &rows, &[0, 1], 2, 10, 0).unwrap();
        assert_eq!(clusters.len(), 2);
        assert_eq!(clusters, cluster_instances(&same, &rows, &[0, 1], 2, 10, 0).unwrap());
        assert!(cluster_instances(&same, &rows[..1], &[0, 1], 2, 10, 0).is_err());
    }

    fn interval_dataset(values: Vec<Vec<f64>>) -> Dataset {
        let mut vars = VariableTable::new();
        for i in 0..values[0].len() {
            vars.add_interval(&format!("y_{}", i + 1), -2.0, 2.0).unwrap();
        }
        Dataset {
            vars,
            inputs: vec![Vec::new(); values.len()],
            values,
            targets: None,
            input_names: Vec::new(),
        }
    }

    #[test]
    fn learner_examples() {
        let small = interval_dataset(vec![vec![0.0, 1.0]; 40]);
        let l = learn_spf(&small, &LearnConfig::default(), Semiring::MinSum, LeafStrategy::MeanQuadratic).unwrap();
        assert_eq!(l.structure.leaf_count(), 1);

        let data = interval_dataset(paired(300, 4));
        let l = learn_spf(&data, &LearnConfig::default(), Semiring::MinSum, LeafStrategy::MeanQuadratic).unwrap();
        match &l.structure {
            Structure::Product { children, .. } => {
                let scopes: Vec<Vec<usize>> = children.iter().map(Structure::vars).collect();
                assert_eq!(scopes, vec![vec![0, 2], vec![1, 3]]);
                assert!(children.iter().all(|c| matches!(c, Structure::Leaf { .. })));
            }
            other => panic!("expected a product, got {other:?}"),
        }
        assert!(l.graph.is_decomposable());
    }

    #[test]
    fn mixed_patterns_cluster_first() {
        let mut rows = paired(150, 5);
        for r in paired(150, 6) {
            rows.push(vec![r[0], r[2], r[1], r[3]]);
        }
        let data = interval_dataset(rows);
        let cfg = LearnConfig {
            k: 8,
            ..LearnConfig::default()
        };
        let l = learn_spf(&data, &cfg, Semiring::MinSum, LeafStrategy::MeanQuadratic).unwrap();
        assert!(matches!(l.structure, Structure::Sum { .. }));
        assert!(l.graph.is_decomposable());
    }

    #[test]
    fn table_average_on_constant_labels() {
        let csv = "a,b,y\n0,1,2.5\n1,0,2.5\n1,1,2.5\n";
        let data = Dataset::from_csv(csv.as_bytes()).unwrap();
        assert_eq!(data.vars.domain(VarId(0)), Domain::Finite(2));
        let l = learn_spf(&data, &LearnConfig::default(), Semiring::SumProduct, LeafStrategy::TableAverage).unwrap();
        let crate::graph::Node::Leaf(leaf) = l.graph.node(l.graph.root()) else { panic!() };
        let crate::graph::LeafBody::Table(t) = &leaf.body else { panic!() };
        let seen: Vec<f64> = t.iter().map(|v| v.to_f64()).collect();
        assert_eq!(seen, vec![0.0, 2.5, 2.5, 2.5]);
    }

    #[test]
    fn csv_round_trip() {
        let csv = "x_0,x_1,y_1,y_2\n0.5,0.25,0.5,0.25\n-1,1,-1,1\n";
        let data = Dataset::from_csv(csv.as_bytes()).unwrap();
        assert!(data.is_structured());
        assert_eq!(data.input_names, vec!["x_0", "x_1"]);
        let mut out = Vec::new();
        data.to_csv(&mut out).unwrap();
        assert_eq!(Dataset::from_csv(out.as_slice()).unwrap(), data);
        assert!("nope".parse::<LeafStrategy>().is_err());
    }
}
