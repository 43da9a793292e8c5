//! Repeated 70/30 splits scoring all four models, with rank-sum tests
//! against GPGP. Uses the given items/duels CSV files, or a simulated graph.
//!
//! ```text
//! cargo run --release --example benchmark -- items.csv duels.csv
//! ```

use std::path::Path;

use gpgp::eval::{run_benchmark, BenchmarkConfig};
use gpgp::io::load_dataset;
use gpgp::models::ModelKind;
use gpgp::synthetic::{generate, SimulationMode, SyntheticSpec};

fn main() -> gpgp::error::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let ds = match args.as_slice() {
        [items, duels] => load_dataset(Path::new(items), Path::new(duels))?,
        _ => generate(&SyntheticSpec::new(SimulationMode::Cyclic, 30, 5, 5, 0.8, 11))?.dataset,
    };
    let config = BenchmarkConfig::new(ModelKind::ALL.to_vec(), 10, 0.7, 0);
    let report = run_benchmark(&ds, &config)?;

    println!("{} items, {} duels", report.dataset.n_items, report.dataset.n_duels);
    println!("{}", report.table_row());
    for m in &report.models {
        if let Some(t) = &m.vs_gpgp {
            println!("{:<12} vs gpgp: U = {:>5.1}, p = {:.4} ({:?})", m.model, t.u, t.p_value, t.method);
        }
    }
    Ok(())
}
