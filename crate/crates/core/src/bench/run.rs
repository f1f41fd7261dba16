use std::collections::HashMap;
use std::io::Write;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::rastrigin::{build_instance, full_function, RastriginInstance, BOX};
use crate::apps::minimize_msf;
use crate::error::{Result, SpfError};
use crate::graph::{VarId, VarValue, VariableTable};
use crate::learn::{instantiate, learn_structure, Dataset, LeafContext, LeafStrategy, LearnConfig, Structure};
use crate::optimize::{multistart_descent, DescentConfig};
use crate::semiring::Semiring;
use crate::summation::{derive_seed, SumOptions};

/// Clusters per k-means split in the benchmark, chosen by structure recovery on seeds the
/// acceptance runs do not use.
pub const BENCH_CLUSTERS: usize = 6;

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub dims: Vec<usize>,
    pub train: usize,
    pub test: usize,
    /// Wall-clock budget per test sample and method.
    pub budget: Duration,
    pub seed: u64,
    pub learn: LearnConfig,
    /// Random starts per leaf of the learned graph.
    pub leaf_restarts: usize,
    pub descent: DescentConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            dims: vec![4, 8, 12, 16],
            train: 300,
            test: 50,
            budget: Duration::from_secs(2),
            seed: 0,
            learn: LearnConfig {
                k: BENCH_CLUSTERS,
                ..LearnConfig::default()
            },
            leaf_restarts: 64,
            descent: DescentConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    LearnedMsf,
    Direct,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::LearnedMsf => "learned-msf",
            Method::Direct => "direct",
        }
    }
}

/// One CSV row: the minima reached by one method over the test samples of one dimension.
#[derive(Clone, Debug)]
pub struct BenchRow {
    pub n: usize,
    pub method: Method,
    pub mean_min: f64,
    pub stderr: f64,
    pub wall_secs: f64,
    pub restarts_used: usize,
    /// `F` at the returned point, per test sample.
    pub minima: Vec<f64>,
}

/// How well the learned structure matches the true pairing on clusters of the training data.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StructureRecovery {
    /// Children of cluster sums with more instances than the leaf threshold.
    pub clusters: usize,
    /// Those whose instances share one pairing on the cluster's variables, up to [`PURITY`].
    pub pure: usize,
    /// Pure clusters decomposed into a product whose children are exactly the true pairs.
    pub matched: usize,
}

impl StructureRecovery {
    pub fn fraction(&self) -> f64 {
        if self.pure == 0 {
            0.0
        } else {
            self.matched as f64 / self.pure as f64
        }
    }

    pub fn merge(&mut self, other: &StructureRecovery) {
        self.clusters += other.clusters;
        self.pure += other.pure;
        self.matched += other.matched;
    }
}

#[derive(Clone, Debug)]
pub struct DimReport {
    pub n: usize,
    pub learned: BenchRow,
    pub direct: BenchRow,
    pub recovery: StructureRecovery,
    pub leaves: usize,
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub seed: u64,
    pub dims: Vec<DimReport>,
}

impl BenchReport {
    pub fn rows(&self) -> impl Iterator<Item = &BenchRow> {
        self.dims.iter().flat_map(|d| [&d.learned, &d.direct])
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["n", "method", "mean_min", "stderr", "wall_secs", "restarts_used"])?;
        for r in self.rows() {
            w.write_record([
                r.n.to_string(),
                r.method.name().to_string(),
                r.mean_min.to_string(),
                r.stderr.to_string(),
                format!("{:.3}", r.wall_secs),
                r.restarts_used.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Minimum share of a cluster's instances that must share its majority pattern.
pub const PURITY: f64 = 0.9;

fn dim_seed(seed: u64, n: usize) -> u64 {
    derive_seed(seed, n as u64)
}

/// Variables `y_1..y_n` over the benchmark box.
pub fn label_variables(n: usize) -> VariableTable {
    let mut vars = VariableTable::new();
    for i in 0..n {
        vars.add_interval(&format!("y_{}", i + 1), BOX.0, BOX.1).expect("fresh names");
    }
    vars
}

/// Instances `index_offset..index_offset + m` of the stream for `seed`, with labels `y = x`.
pub fn generate_dataset(n: usize, m: usize, seed: u64, index_offset: usize) -> Result<(Dataset, Vec<RastriginInstance>)> {
    let mut instances = Vec::with_capacity(m);
    for i in 0..m {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, (index_offset + i) as u64));
        instances.push(build_instance(n, &mut rng)?);
    }
    let mut input_names: Vec<String> = (0..n).map(|i| format!("x_{i}")).collect();
    input_names.extend((0..n / 4).map(|i| format!("k_{i}")));
    let data = Dataset {
        vars: label_variables(n),
        values: instances.iter().map(|r| r.x.clone()).collect(),
        targets: None,
        inputs: instances.iter().map(RastriginInstance::features).collect(),
        input_names,
    };
    Ok((data, instances))
}

fn true_pairs(inst: &RastriginInstance, vars: &[usize]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = inst
        .pairs()
        .into_iter()
        .filter(|(a, b)| vars.contains(a) || vars.contains(b))
        .map(|(a, b)| vec![a.min(b), a.max(b)])
        .collect();
    out.sort();
    out
}

/// Scores every cluster larger than `t` against the training instances' true pairings.
pub fn structure_recovery(structure: &Structure, train: &[RastriginInstance], t: usize) -> StructureRecovery {
    fn score(s: &Structure, train: &[RastriginInstance], acc: &mut StructureRecovery) {
        let rows = s.rows();
        let vars = s.vars();
        acc.clusters += 1;
        let mut votes: HashMap<Vec<Vec<usize>>, usize> = HashMap::new();
        for r in rows {
            *votes.entry(true_pairs(&train[*r], &vars)).or_default() += 1;
        }
        let (pattern, count) = votes
            .into_iter()
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
            .expect("clusters are nonempty");
        if (count as f64) < PURITY * rows.len() as f64 {
            return;
        }
        acc.pure += 1;
        if let Structure::Product { children, .. } = s {
            let mut scopes: Vec<Vec<usize>> = children.iter().map(Structure::vars).collect();
            scopes.sort();
            if scopes == pattern {
                acc.matched += 1;
            }
        }
    }
    fn visit(s: &Structure, under_sum: bool, train: &[RastriginInstance], t: usize, acc: &mut StructureRecovery) {
        if under_sum && s.rows().len() > t {
            score(s, train, acc);
        }
        match s {
            Structure::Leaf { .. } => {}
            Structure::Product { children, .. } => {
                for c in children {
                    visit(c, false, train, t, acc);
                }
            }
            Structure::Sum { children, .. } => {
                for c in children {
                    visit(c, true, train, t, acc);
                }
            }
        }
    }
    let mut acc = StructureRecovery::default();
    visit(structure, false, train, t, &mut acc);
    acc
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn row(n: usize, method: Method, minima: Vec<f64>, wall: Duration, restarts: usize) -> BenchRow {
    let (mean_min, stderr) = mean_stderr(&minima);
    BenchRow {
        n,
        method,
        mean_min,
        stderr,
        wall_secs: wall.as_secs_f64(),
        restarts_used: restarts,
        minima,
    }
}

/// Minimizes the learned graph instantiated with oracle leaves for `instance`; returns `F` at its argmin.
pub fn learned_minimum(
    structure: &Structure,
    data: &Dataset,
    instance: &RastriginInstance,
    cfg: &BenchConfig,
    seed: u64,
) -> Result<(f64, usize)> {
    let ctx = LeafContext {
        data,
        semiring: Semiring::MinSum,
        oracle: Some(instance),
    };
    let g = instantiate(structure, &ctx, LeafStrategy::OracleRestriction)?;
    let opts = SumOptions {
        descent: cfg.descent.clone(),
        restarts: cfg.leaf_restarts,
        seed,
        budget: Some(cfg.budget),
        fixed: Vec::new(),
    };
    let m = minimize_msf(&g, &opts)?;
    let y = (0..instance.n)
        .map(|i| match m.argmin.get(VarId(i)) {
            Some(VarValue::Real(v)) => Ok(v),
            other => Err(SpfError::Internal(format!("argmin has {other:?} for y_{}", i + 1))),
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((instance.value(&y), m.restarts_used))
}

/// Multistart descent on the full function for the whole budget.
pub fn direct_minimum(instance: &RastriginInstance, cfg: &BenchConfig, seed: u64) -> (f64, usize) {
    let bounds = vec![BOX; instance.n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = multistart_descent(
        &full_function(instance),
        &bounds,
        usize::MAX,
        Some(cfg.budget),
        &cfg.descent,
        &mut rng,
    );
    (r.value, r.restarts_used)
}

pub fn run_dimension(n: usize, cfg: &BenchConfig) -> Result<DimReport> {
    let seed = dim_seed(cfg.seed, n);
    let (train, train_instances) = generate_dataset(n, cfg.train, seed, 0)?;
    let (_, test_instances) = generate_dataset(n, cfg.test, seed, cfg.train)?;
    let learn = LearnConfig {
        seed: derive_seed(seed, u64::MAX),
        ..cfg.learn.clone()
    };
    let structure = learn_structure(&train, &learn)?;
    let recovery = structure_recovery(&structure, &train_instances, learn.t);

    let mut learned = Vec::with_capacity(cfg.test);
    let mut direct = Vec::with_capacity(cfg.test);
    let (mut learned_wall, mut direct_wall) = (Duration::ZERO, Duration::ZERO);
    let (mut learned_restarts, mut direct_restarts) = (0, 0);
    for (j, inst) in test_instances.iter().enumerate() {
        let sample_seed = derive_seed(seed, (cfg.train + j) as u64 | 1 << 40);
        let t = Instant::now();
        let (v, r) = learned_minimum(&structure, &train, inst, cfg, sample_seed)?;
        learned_wall += t.elapsed();
        learned.push(v);
        learned_restarts += r;

        let t = Instant::now();
        let (v, r) = direct_minimum(inst, cfg, sample_seed);
        direct_wall += t.elapsed();
        direct.push(v);
        direct_restarts += r;
    }
    Ok(DimReport {
        n,
        learned: row(n, Method::LearnedMsf, learned, learned_wall, learned_restarts),
        direct: row(n, Method::Direct, direct, direct_wall, direct_restarts),
        recovery,
        leaves: structure.leaf_count(),
    })
}

pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.train == 0 || cfg.test == 0 {
        return Err(SpfError::Precondition("train and test sizes must be positive".into()));
    }
    let dims = cfg.dims.iter().map(|n| run_dimension(*n, cfg)).collect::<Result<_>>()?;
    Ok(BenchReport { seed: cfg.seed, dims })
}
