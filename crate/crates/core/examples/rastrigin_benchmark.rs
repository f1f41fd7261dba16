//! A short run of the learned-structure versus direct minimization benchmark.

use std::time::Duration;

use sumprod::bench::{run_benchmark, BenchConfig};

fn main() -> sumprod::Result<()> {
    let cfg = BenchConfig {
        dims: vec![4, 8],
        test: 5,
        budget: Duration::from_millis(200),
        seed: 1,
        ..BenchConfig::default()
    };
    let report = run_benchmark(&cfg)?;
    report.write_csv(std::io::stdout().lock())?;
    for d in &report.dims {
        eprintln!("n={} structure recovery {}/{}", d.n, d.recovery.matched, d.recovery.pure);
    }
    Ok(())
}
