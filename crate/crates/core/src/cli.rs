//! The `spf` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value as Json};

use crate::apps::{
    self, csp_to_spf, cnf_to_spf, max_sat, minimize_msf, model_count, mpe, parse_dimacs, probability_of_evidence,
    solve_csp, Cnf, CspInstance,
};
use crate::bench::{run_benchmark, BenchConfig};
use crate::engine::{sum_spf, ChildOrder, EngineConfig, EngineStats, VariableHeuristic};
use crate::error::{Result, SpfError};
use crate::graph::json::{graph_from_json, graph_to_json, value_to_json};
use crate::graph::{Assignment, SpfGraph, VarValue, VariableTable};
use crate::learn::{learn_spf, Dataset, LeafStrategy, LearnConfig};
use crate::semiring::Semiring;
use crate::summation::{sum_decomposable_with, OpCounts, SumOptions};
use crate::translate::{translate, TranslateOptions, ValueMap};
use crate::treelike::{build_treelike_indexed, counted_size_bound, junction_tree_from_json, size_bound, JunctionTreeFile};

#[derive(Parser, Debug)]
#[command(name = "spf", version, about = "Sum-product functions over commutative semirings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Cnf,
    Spf,
    Jt,
    Csp,
    Csv,
}

#[derive(Args, Debug)]
struct Input {
    file: PathBuf,
    /// Input format; inferred from the extension and the JSON "type" field when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
struct Search {
    /// Seed for leaf optimization; defaults to SPF_SEED or 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Random starts per optimized leaf.
    #[arg(long, default_value_t = 16)]
    restarts: usize,
    /// Wall-clock budget shared by all leaf optimizations.
    #[arg(long)]
    budget_secs: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Heuristic {
    MostShared,
    FirstIndex,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Order {
    AbsorbingFirst,
    Declaration,
}

#[derive(Args, Debug)]
struct Engine {
    #[arg(long, value_enum, default_value = "most-shared")]
    heuristic: Heuristic,
    #[arg(long, value_enum, default_value = "absorbing-first")]
    order: Order,
    /// Also expand sums that are not provably deterministic.
    #[arg(long)]
    deterministic: bool,
    /// Maximum number of nodes the engine may create.
    #[arg(long, default_value_t = 1_000_000)]
    budget: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MapKind {
    ZeroOne,
    Numeric,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sum a decomposable graph in linear time.
    Sum {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        semiring: Option<Semiring>,
        /// Evidence such as `x1=1,x2=0`; evidenced variables are not summed.
        #[arg(long)]
        evidence: Option<String>,
        #[command(flatten)]
        search: Search,
    },
    /// Sum any graph by decomposing non-decomposable products.
    Sumspf {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        semiring: Option<Semiring>,
        #[command(flatten)]
        engine: Engine,
        /// Write the final decomposable graph here.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Satisfiability of a CNF.
    Sat {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        engine: Engine,
    },
    /// Exact model count of a CNF.
    Count {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        engine: Engine,
    },
    /// Largest number of simultaneously satisfiable clauses.
    Maxsat {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        engine: Engine,
    },
    /// Solve a constraint satisfaction problem.
    Csp {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        engine: Engine,
    },
    /// Most probable explanation of a sum-product network.
    Mpe {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        evidence: Option<String>,
    },
    /// Unnormalized probability of evidence and the partition function.
    Evidence {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        evidence: Option<String>,
    },
    /// Integral of a decomposable sum-product graph over its box.
    Integrate {
        #[command(flatten)]
        input: Input,
    },
    /// Global minimum of a decomposable min-sum graph.
    Minimize {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        search: Search,
    },
    /// Learn a decomposable graph from a CSV dataset.
    Learn {
        #[command(flatten)]
        input: Input,
        /// Instance threshold for leaves.
        #[arg(long, default_value_t = 30)]
        t: usize,
        /// Variable threshold for leaves.
        #[arg(long, default_value_t = 2)]
        v: usize,
        #[arg(long, default_value_t = 0.3)]
        rho: f64,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// table-average, mean-quadratic or oracle-restriction.
        #[arg(long)]
        estimator: Option<String>,
        #[arg(long)]
        semiring: Option<Semiring>,
    },
    /// Learned min-sum structure versus direct minimization on the pairwise Rastrigin family.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "4,8,12,16")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 300)]
        train: usize,
        #[arg(long, default_value_t = 50)]
        test: usize,
        #[arg(long, default_value_t = 2.0)]
        budget_secs: f64,
        #[arg(long)]
        seed: Option<u64>,
        /// Clusters per k-means split.
        #[arg(long, default_value_t = crate::bench::BENCH_CLUSTERS)]
        k: usize,
        /// Random starts per leaf of the learned graph.
        #[arg(long, default_value_t = 64)]
        leaf_restarts: usize,
        /// Write the CSV here and print a JSON summary instead.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decomposability of a graph, with a witness when it fails.
    Check {
        #[command(flatten)]
        input: Input,
    },
    /// Relabel a graph into another semiring.
    Translate {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        to: Semiring,
        /// Skip the determinism check.
        #[arg(long)]
        unchecked: bool,
        #[arg(long, value_enum, default_value = "zero-one")]
        value_map: MapKind,
    },
    /// Build the tree-like graph of a junction tree.
    Treelike {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        semiring: Option<Semiring>,
        /// Print the built graph too.
        #[arg(long)]
        emit_graph: bool,
    },
}

impl clap::builder::ValueParserFactory for Semiring {
    type Parser = clap::builder::ValueParser;

    fn value_parser() -> Self::Parser {
        clap::builder::ValueParser::new(|s: &str| s.parse::<Semiring>().map_err(|e| e.to_string()))
    }
}

/// A parsed input file.
enum Loaded {
    Cnf(Cnf),
    Spf(Json),
    Jt(Json),
    Csp(Json),
    Csv(Dataset),
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| SpfError::Io(format!("{}: {e}", path.display())))
}

fn detect(path: &Path, format: Option<Format>) -> Result<Format> {
    if let Some(f) = format {
        return Ok(f);
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("cnf") | Some("dimacs") => Ok(Format::Cnf),
        Some("csv") => Ok(Format::Csv),
        Some("json") => {
            let j: Json = serde_json::from_str(&read(path)?)?;
            match j.get("type").and_then(Json::as_str) {
                Some("spf") | None => Ok(Format::Spf),
                Some("junction-tree") => Ok(Format::Jt),
                Some("csp") => Ok(Format::Csp),
                Some(other) => Err(SpfError::Json(format!("unknown type `{other}`"))),
            }
        }
        _ => Err(SpfError::Precondition(format!(
            "cannot infer the format of {}; pass --format",
            path.display()
        ))),
    }
}

fn load(input: &Input) -> Result<Loaded> {
    let format = detect(&input.file, input.format)?;
    Ok(match format {
        Format::Cnf => Loaded::Cnf(parse_dimacs(&read(&input.file)?)?),
        Format::Csv => {
            let f = fs::File::open(&input.file).map_err(|e| SpfError::Io(format!("{}: {e}", input.file.display())))?;
            Loaded::Csv(Dataset::from_csv(f)?)
        }
        Format::Spf => Loaded::Spf(serde_json::from_str(&read(&input.file)?)?),
        Format::Jt => Loaded::Jt(serde_json::from_str(&read(&input.file)?)?),
        Format::Csp => Loaded::Csp(serde_json::from_str(&read(&input.file)?)?),
    })
}

fn load_cnf(input: &Input) -> Result<Cnf> {
    match load(input)? {
        Loaded::Cnf(c) => Ok(c),
        _ => Err(SpfError::Precondition("expected a DIMACS CNF file".into())),
    }
}

fn load_tree(j: &Json, semiring: Option<Semiring>) -> Result<JunctionTreeFile> {
    let mut file = junction_tree_from_json(j, semiring.unwrap_or(Semiring::SumProduct))?;
    if let Some(s) = semiring {
        file.semiring = s;
    }
    Ok(file)
}

/// Any input that denotes a graph: SPF JSON, a CNF clause network, a CSP network or a tree-like graph.
fn load_graph(input: &Input, semiring: Option<Semiring>) -> Result<SpfGraph> {
    let g = match load(input)? {
        Loaded::Spf(j) => return graph_from_json(&j, semiring),
        Loaded::Cnf(c) => cnf_to_spf(&c)?,
        Loaded::Csp(j) => csp_to_spf(&CspInstance::from_json(&j)?)?,
        Loaded::Jt(j) => {
            let f = load_tree(&j, semiring)?;
            return Ok(build_treelike_indexed(&f.tree, &f.psi, f.semiring, &f.vars)?.graph);
        }
        Loaded::Csv(_) => return Err(SpfError::Precondition("a dataset is not a graph; use `learn`".into())),
    };
    match semiring {
        Some(s) if s != g.semiring() => translate(&g, s, &TranslateOptions::default()),
        _ => Ok(g),
    }
}

fn default_seed(seed: Option<u64>) -> Result<u64> {
    if let Some(s) = seed {
        return Ok(s);
    }
    match std::env::var("SPF_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| SpfError::Precondition(format!("SPF_SEED=`{v}` is not a natural number"))),
        Err(_) => Ok(0),
    }
}

fn budget(secs: Option<f64>) -> Result<Option<Duration>> {
    secs.map(|s| {
        Duration::try_from_secs_f64(s).map_err(|_| SpfError::Precondition(format!("invalid budget {s}")))
    })
    .transpose()
}

fn sum_options(search: &Search) -> Result<SumOptions> {
    Ok(SumOptions {
        restarts: search.restarts,
        seed: default_seed(search.seed)?,
        budget: budget(search.budget_secs)?,
        ..SumOptions::default()
    })
}

fn engine_config(e: &Engine) -> EngineConfig {
    EngineConfig {
        variable_heuristic: match e.heuristic {
            Heuristic::MostShared => VariableHeuristic::MostShared,
            Heuristic::FirstIndex => VariableHeuristic::FirstIndex,
        },
        child_order: match e.order {
            Order::AbsorbingFirst => ChildOrder::AbsorbingFirst,
            Order::Declaration => ChildOrder::Declaration,
        },
        enforce_determinism: e.deterministic,
        node_budget: e.budget,
        ..EngineConfig::default()
    }
}

fn parse_evidence(text: Option<&str>, vars: &VariableTable) -> Result<Assignment> {
    match text {
        Some(t) => Assignment::parse(t, vars),
        None => Ok(Assignment::empty(vars.len())),
    }
}

fn assignment_json(a: &Assignment, vars: &VariableTable) -> Json {
    let mut m = Map::new();
    for (v, x) in a.assigned() {
        if v.0 < vars.len() {
            let value = match x {
                VarValue::Index(i) => json!(i),
                VarValue::Real(r) => json!(r),
            };
            m.insert(vars.name(v).to_string(), value);
        }
    }
    Json::Object(m)
}

fn op_counts_json(c: &OpCounts) -> Json {
    json!({
        "adds": c.adds,
        "muls": c.muls,
        "leaf_evals": c.leaf_evals,
        "edge_ops": c.edge_ops,
        "leaf_adds": c.leaf_adds,
        "correction_muls": c.correction_muls,
    })
}

fn stats_json(s: &EngineStats) -> Json {
    json!({
        "cache_hits": s.cache_hits,
        "nodes_created": s.nodes_created,
        "decompositions": s.decompositions,
        "early_exits": s.early_exits,
        "branches": s.branches,
    })
}

fn write_json(out: &mut dyn Write, j: &Json) -> Result<()> {
    let text = serde_json::to_string_pretty(j)?;
    writeln!(out, "{text}").map_err(|e| SpfError::Io(e.to_string()))
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Sum {
            input,
            semiring,
            evidence,
            search,
        } => {
            let g = load_graph(&input, semiring)?;
            let e = parse_evidence(evidence.as_deref(), g.vars())?;
            let mut opts = sum_options(&search)?;
            let g = if e.assigned().next().is_some() {
                opts.fixed = e.assigned().map(|(v, _)| v).collect();
                crate::summation::set_evidence(&g, &e)?
            } else {
                g
            };
            let r = sum_decomposable_with(&g, &opts)?;
            write_json(
                out,
                &json!({
                    "value": value_to_json(&r.value),
                    "semiring": g.semiring().name(),
                    "size": g.size(),
                    "op_counts": op_counts_json(&r.op_counts),
                    "restarts_used": r.restarts_used,
                }),
            )
        }
        Command::Sumspf {
            input,
            semiring,
            engine,
            export,
        } => {
            let g = load_graph(&input, semiring)?;
            let o = sum_spf(&g, &engine_config(&engine))?;
            if let Some(path) = export {
                let text = serde_json::to_string_pretty(&graph_to_json(&o.graph))?;
                fs::write(&path, text).map_err(|e| SpfError::Io(format!("{}: {e}", path.display())))?;
            }
            write_json(
                out,
                &json!({
                    "value": value_to_json(&o.value),
                    "semiring": g.semiring().name(),
                    "input_size": g.size(),
                    "output_size": o.graph.size(),
                    "stats": stats_json(&o.stats),
                }),
            )
        }
        Command::Sat { input, engine } => {
            let cnf = load_cnf(&input)?;
            let r = apps::sat(&cnf, &engine_config(&engine))?;
            let mut j = json!({"value": r.satisfiable, "stats": stats_json(&r.stats)});
            if let Some(w) = &r.witness {
                j["witness"] = assignment_json(w, &cnf.variables());
            }
            write_json(out, &j)
        }
        Command::Count { input, engine } => {
            let cnf = load_cnf(&input)?;
            let n = model_count(&cnf, &engine_config(&engine))?;
            write_json(out, &json!({"count": n.to_string()}))
        }
        Command::Maxsat { input, engine } => {
            let cnf = load_cnf(&input)?;
            let r = max_sat(&cnf, &engine_config(&engine))?;
            write_json(
                out,
                &json!({
                    "value": r.value,
                    "clauses": cnf.clauses.len(),
                    "witness": assignment_json(&r.witness, &cnf.variables()),
                }),
            )
        }
        Command::Csp { input, engine } => {
            let csp = match load(&input)? {
                Loaded::Csp(j) | Loaded::Spf(j) => CspInstance::from_json(&j)?,
                _ => return Err(SpfError::Precondition("expected a CSP JSON file".into())),
            };
            let r = solve_csp(&csp, &engine_config(&engine))?;
            let mut j = json!({"value": r.solution.is_some(), "stats": stats_json(&r.stats)});
            if let Some(s) = &r.solution {
                j["witness"] = assignment_json(s, &csp.vars);
            }
            write_json(out, &j)
        }
        Command::Mpe { input, evidence } => {
            let g = load_graph(&input, None)?;
            let e = parse_evidence(evidence.as_deref(), g.vars())?;
            let r = mpe(&g, &e)?;
            let all = r.max_product.vars();
            write_json(out, &json!({"value": r.value, "state": assignment_json(&r.state, all)}))
        }
        Command::Evidence { input, evidence } => {
            let g = load_graph(&input, None)?;
            let e = parse_evidence(evidence.as_deref(), g.vars())?;
            let p = probability_of_evidence(&g, &e)?;
            let z = apps::partition_function(&g)?;
            write_json(out, &json!({"value": p, "partition": z}))
        }
        Command::Integrate { input } => {
            let g = load_graph(&input, None)?;
            write_json(out, &json!({"value": apps::integrate(&g)?}))
        }
        Command::Minimize { input, search } => {
            let g = load_graph(&input, None)?;
            let m = minimize_msf(&g, &sum_options(&search)?)?;
            write_json(
                out,
                &json!({
                    "value": m.value,
                    "evaluated": m.evaluated,
                    "argmin": assignment_json(&m.argmin, g.vars()),
                    "restarts_used": m.restarts_used,
                }),
            )
        }
        Command::Learn {
            input,
            t,
            v,
            rho,
            k,
            seed,
            estimator,
            semiring,
        } => {
            let data = match load(&input)? {
                Loaded::Csv(d) => d,
                _ => return Err(SpfError::Precondition("expected a CSV dataset".into())),
            };
            let strategy = match estimator {
                Some(s) => s.parse()?,
                None if data.is_structured() => LeafStrategy::MeanQuadratic,
                None => LeafStrategy::TableAverage,
            };
            let semiring = semiring.unwrap_or(if data.is_structured() {
                Semiring::MinSum
            } else {
                Semiring::SumProduct
            });
            let cfg = LearnConfig {
                t,
                v,
                rho_min: rho,
                k,
                seed: default_seed(seed)?,
                ..LearnConfig::default()
            };
            let learned = learn_spf(&data, &cfg, semiring, strategy)?;
            write_json(out, &graph_to_json(&learned.graph))
        }
        Command::Bench {
            dims,
            train,
            test,
            budget_secs,
            seed,
            k,
            leaf_restarts,
            out: path,
        } => {
            let cfg = BenchConfig {
                dims,
                train,
                test,
                budget: budget(Some(budget_secs))?.unwrap_or_default(),
                seed: default_seed(seed)?,
                learn: LearnConfig {
                    k,
                    ..LearnConfig::default()
                },
                leaf_restarts,
                ..BenchConfig::default()
            };
            let report = run_benchmark(&cfg)?;
            match path {
                None => report.write_csv(out),
                Some(path) => {
                    let f = fs::File::create(&path).map_err(|e| SpfError::Io(format!("{}: {e}", path.display())))?;
                    report.write_csv(f)?;
                    let dims: Vec<Json> = report
                        .dims
                        .iter()
                        .map(|d| {
                            json!({
                                "n": d.n,
                                "learned_mean": d.learned.mean_min,
                                "direct_mean": d.direct.mean_min,
                                "leaves": d.leaves,
                                "clusters": d.recovery.clusters,
                                "pure_clusters": d.recovery.pure,
                                "matched_clusters": d.recovery.matched,
                            })
                        })
                        .collect();
                    write_json(out, &json!({"out": path.display().to_string(), "seed": report.seed, "dims": dims}))
                }
            }
        }
        Command::Check { input } => {
            let g = load_graph(&input, None)?;
            let witness = g.decomposability_witness().map(|w| {
                json!({
                    "node": w.node.0,
                    "variable": g.vars().name(w.variable),
                })
            });
            write_json(
                out,
                &json!({
                    "decomposable": witness.is_none(),
                    "witness": witness,
                    "size": g.size(),
                    "nodes": g.node_count(),
                }),
            )
        }
        Command::Translate {
            input,
            to,
            unchecked,
            value_map,
        } => {
            let g = load_graph(&input, None)?;
            let opts = TranslateOptions {
                value_map: match value_map {
                    MapKind::ZeroOne => ValueMap::ZeroOne,
                    MapKind::Numeric => ValueMap::Numeric,
                },
                check_determinism: !unchecked,
                ..TranslateOptions::default()
            };
            write_json(out, &graph_to_json(&translate(&g, to, &opts)?))
        }
        Command::Treelike {
            input,
            semiring,
            emit_graph,
        } => {
            let j = match load(&input)? {
                Loaded::Jt(j) | Loaded::Spf(j) => j,
                _ => return Err(SpfError::Precondition("expected a junction-tree JSON file".into())),
            };
            let f = load_tree(&j, semiring)?;
            let t = build_treelike_indexed(&f.tree, &f.psi, f.semiring, &f.vars)?;
            let value = sum_decomposable_with(&t.graph, &SumOptions::default())?.value;
            let d = f.vars.iter().filter_map(|(_, v)| v.domain.cardinality()).max().unwrap_or(1);
            let uniform = f.vars.iter().all(|(_, v)| v.domain.cardinality() == Some(d));
            let mut out_j = json!({
                "value": value_to_json(&value),
                "semiring": f.semiring.name(),
                "size": t.graph.size(),
                "treewidth": f.tree.treewidth(),
                "decomposable": t.graph.is_decomposable(),
            });
            if uniform {
                out_j["size_bound"] = json!(size_bound(&f.tree, d)?.to_string());
                out_j["counted_size_bound"] = json!(counted_size_bound(&f.tree, d)?.to_string());
            }
            if emit_graph {
                out_j["graph"] = graph_to_json(&t.graph);
            }
            write_json(out, &out_j)
        }
    }
}

fn error_json(code: &str, detail: &str) -> String {
    json!({"error": code, "detail": detail}).to_string()
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let detail = e.to_string();
            let first = detail.lines().next().unwrap_or("").trim_start_matches("error: ");
            let _ = writeln!(err, "{}", error_json("usage", first));
            return 2;
        }
    };
    let mut buf: Vec<u8> = Vec::new();
    match execute(cli.command, &mut buf) {
        Ok(()) => {
            let _ = out.write_all(&buf);
            let _ = out.flush();
            0
        }
        Err(e) => {
            let _ = writeln!(err, "{}", error_json(e.code(), &e.to_string()));
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apps::{not_equal, CspInstance};
    use crate::graph::{GraphBuilder, VarId};
    use std::path::PathBuf;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut argv = vec!["spf"];
        argv.extend_from_slice(args);
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn file(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn json_out(args: &[&str]) -> Json {
        let (code, out, err) = call(args);
        assert_eq!(code, 0, "{err}");
        serde_json::from_str(&out).unwrap()
    }

    fn two_parabolas() -> String {
        let mut vars = VariableTable::new();
        vars.add_interval("a", -5.0, 5.0).unwrap();
        vars.add_interval("b", -5.0, 5.0).unwrap();
        let mut b = GraphBuilder::new(Semiring::MinSum, vars);
        let p = b.registered("quadratic", &[VarId(0)], vec![1.0, 1.0, 2.0]).unwrap();
        let q = b.registered("quadratic", &[VarId(1)], vec![0.5, 2.0, -1.0]).unwrap();
        let root = b.product(vec![p, q]);
        crate::graph::json::to_string(&b.build(root).unwrap())
    }

    #[test]
    fn count_small_formula() {
        let dir = tempfile::tempdir().unwrap();
        let p = file(&dir, "f.cnf", "p cnf 2 1\n1 2 0\n");
        assert_eq!(json_out(&["count", p.to_str().unwrap()]), json!({"count": "3"}));
    }

    #[test]
    fn sat_and_maxsat_report_witnesses() {
        let dir = tempfile::tempdir().unwrap();
        let p = file(&dir, "f.cnf", "p cnf 2 4\n1 2 0\n-1 2 0\n1 -2 0\n-1 -2 0\n");
        let j = json_out(&["sat", p.to_str().unwrap()]);
        assert_eq!(j["value"], json!(false));
        let j = json_out(&["maxsat", p.to_str().unwrap()]);
        assert_eq!(j["value"], json!(3));
        assert!(j["witness"].is_object());
    }

    #[test]
    fn min_sum_of_parabolas() {
        let dir = tempfile::tempdir().unwrap();
        let p = file(&dir, "g.spf.json", &two_parabolas());
        let j = json_out(&["sum", "--semiring", "min-sum", p.to_str().unwrap()]);
        assert!((j["value"].as_f64().unwrap() - 1.5).abs() < 1e-9);
        let j = json_out(&["minimize", p.to_str().unwrap()]);
        assert!((j["value"].as_f64().unwrap() - 1.5).abs() < 1e-9);
        let j = json_out(&["check", p.to_str().unwrap()]);
        assert_eq!(j["decomposable"], json!(true));
        assert_eq!(j["witness"], Json::Null);
    }

    #[test]
    fn csp_from_json() {
        let dir = tempfile::tempdir().unwrap();
        let csp = CspInstance::new(
            VariableTable::finite(3, 2),
            vec![not_equal(VarId(0), VarId(1), 2), not_equal(VarId(1), VarId(2), 2), not_equal(VarId(0), VarId(2), 2)],
        )
        .unwrap();
        let p = file(&dir, "c.json", &csp.to_json().to_string());
        let j = json_out(&["csp", p.to_str().unwrap()]);
        assert_eq!(j["value"], json!(false));
    }

    #[test]
    fn usage_and_domain_errors() {
        let (code, out, err) = call(&["frobnicate"]);
        assert_eq!((code, out.as_str()), (2, ""));
        let j: Json = serde_json::from_str(err.trim()).unwrap();
        assert_eq!(j["error"], json!("usage"));

        let (code, _, err) = call(&["count", "/nonexistent/f.cnf"]);
        assert_eq!(code, 1);
        let j: Json = serde_json::from_str(err.trim()).unwrap();
        assert!(j["error"].is_string() && j["detail"].is_string());
    }

    #[test]
    fn bench_and_learn_are_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let args = ["bench", "--dims", "4", "--train", "40", "--test", "2", "--budget-secs", "0.02", "--seed", "3"];
        let (code, a, err) = call(&args);
        assert_eq!(code, 0, "{err}");
        let mut rdr = csv::Reader::from_reader(a.as_bytes());
        let header: Vec<String> = rdr.headers().unwrap().iter().map(str::to_string).collect();
        assert_eq!(header, ["n", "method", "mean_min", "stderr", "wall_secs", "restarts_used"]);
        assert_eq!(rdr.records().count(), 2);

        let (data, _) = crate::bench::generate_dataset(4, 60, 1, 0).unwrap();
        let mut text = Vec::new();
        data.to_csv(&mut text).unwrap();
        let p = file(&dir, "d.csv", std::str::from_utf8(&text).unwrap());
        let run_learn = || call(&["learn", "--seed", "5", "--estimator", "mean-quadratic", p.to_str().unwrap()]);
        let (code, first, err) = run_learn();
        assert_eq!(code, 0, "{err}");
        serde_json::from_str::<Json>(&first).unwrap();
        assert_eq!(run_learn().1, first);
    }
}
