//! Recover clusters of comparable items with GPGP-CLUS, PR-CLUS and SVD-CLUS.
//!
//! ```text
//! cargo run --release --example comparable_clusters
//! ```

use gpgp::clustering::{gpgp_clus, proportion_correct, pr_clus, svd_clus, ClusterOptions};
use gpgp::models::{fit, FitOptions, ModelKind};
use gpgp::synthetic::{generate, SimulationMode, SyntheticSpec};

fn main() -> gpgp::error::Result<()> {
    let inst = generate(&SyntheticSpec::new(SimulationMode::Clustered, 30, 5, 2, 0.6, 3))?;
    let ds = &inst.dataset;
    let opts = ClusterOptions::default();
    let fit_opts = FitOptions::default();

    let model = fit(ds, ModelKind::Gpgp, &fit_opts)?;
    let g = model.predict_matrix()?;
    let ours = gpgp_clus(&g, 2, 0, &opts)?;
    let sv: Vec<String> = ours.singular_values.iter().map(|s| format!("{s:.2}")).collect();
    println!("top singular values of the fitted preference matrix: {}", sv.join(", "));

    let truth = &inst.states;
    println!("gpgp-clus {:.3}", proportion_correct(&ours.assignment, truth)?);
    println!("pr-clus   {:.3}", proportion_correct(&pr_clus(ds, 2, 0.1, 0, &opts, &fit_opts)?.assignment, truth)?);
    println!("svd-clus  {:.3}", proportion_correct(&svd_clus(ds, 2, 0, &opts)?.assignment, truth)?);
    Ok(())
}
