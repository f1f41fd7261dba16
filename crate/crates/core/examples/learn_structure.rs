//! Learning a min-sum structure from optima of pairwise Rastrigin instances.

use sumprod::bench::{generate_dataset, structure_recovery, BENCH_CLUSTERS};
use sumprod::learn::{learn_spf, LeafStrategy, LearnConfig, Structure};
use sumprod::Semiring;

fn describe(s: &Structure, depth: usize) {
    let pad = "  ".repeat(depth);
    match s {
        Structure::Leaf { rows, vars } => println!("{pad}leaf {vars:?} ({} rows)", rows.len()),
        Structure::Product { rows, children } => {
            println!("{pad}product ({} rows)", rows.len());
            children.iter().for_each(|c| describe(c, depth + 1));
        }
        Structure::Sum { rows, children } => {
            println!("{pad}sum ({} rows)", rows.len());
            children.iter().for_each(|c| describe(c, depth + 1));
        }
    }
}

fn main() -> sumprod::Result<()> {
    let (data, instances) = generate_dataset(8, 300, 11, 0)?;
    let cfg = LearnConfig {
        k: BENCH_CLUSTERS,
        seed: 11,
        ..LearnConfig::default()
    };
    let learned = learn_spf(&data, &cfg, Semiring::MinSum, LeafStrategy::MeanQuadratic)?;
    describe(&learned.structure, 0);
    let r = structure_recovery(&learned.structure, &instances, cfg.t);
    println!("{} of {} pure clusters split into the true pairs", r.matched, r.pure);
    println!("graph size {}", learned.graph.size());
    Ok(())
}
