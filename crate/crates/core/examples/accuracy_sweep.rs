//! Held-out accuracy as graph sparsity varies, for rankable (L = 1) and
//! inconsistent (L = 5) preferences.
//!
//! ```text
//! cargo run --release --example accuracy_sweep -- 5
//! ```

use gpgp::experiments::{run_sweep, summarize, SweepConfig, DEFAULT_SPARSITIES};
use gpgp::models::ModelKind;

fn main() -> gpgp::error::Result<()> {
    let runs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let config = SweepConfig::accuracy(ModelKind::ALL.to_vec(), vec![1, 5], DEFAULT_SPARSITIES.to_vec(), runs, 0);
    let records = run_sweep(&config)?;
    for row in summarize(&config, &records) {
        println!("{} sparsity {:.1} {:<12} {:.3} ± {:.3}", row.panel, row.x, row.series, row.mean, row.std);
    }
    Ok(())
}
