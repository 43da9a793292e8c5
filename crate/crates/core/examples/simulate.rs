//! Simulated comparison graphs: cyclic preferences and clusters of
//! comparable items. Writes the CSV/JSON files to a directory when given one.
//!
//! ```text
//! cargo run --example simulate -- /tmp/sim
//! ```

use std::path::PathBuf;

use gpgp::eval::avg_clustering_coefficient;
use gpgp::io::write_instance;
use gpgp::synthetic::{expected_edge_count, generate, SimulationMode, SyntheticSpec};

fn main() -> gpgp::error::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from);
    for (mode, l) in [(SimulationMode::Cyclic, 1), (SimulationMode::Cyclic, 5), (SimulationMode::Clustered, 2)] {
        let spec = SyntheticSpec::new(mode, 30, 5, l, 0.6, 7);
        let inst = generate(&spec)?;
        let coins = inst.coin_flips.iter().filter(|c| **c).count();
        println!(
            "{mode} L={l}: {} duels (expected {:.1}), {coins} decided by coin, C_avg {:.3}, alpha digest {}",
            inst.dataset.duels().len(),
            expected_edge_count(&spec),
            avg_clustering_coefficient(&inst.dataset)?,
            &inst.alpha_digest()[..12]
        );
        if let Some(dir) = &out {
            let files = write_instance(&inst, &dir.join(format!("{mode}_L{l}")))?;
            println!("  wrote {}", files.duels.display());
        }
    }
    Ok(())
}
