//! Binary GP classification with the Laplace approximation, and lengthscale
//! choice by approximate evidence.
//!
//! ```text
//! cargo run --example laplace_classifier
//! ```

use gpgp::kernels::{item_gram, log_grid, KernelConfig};
use gpgp::laplace::{
    laplace_fit, log_marginal_laplace, predict_latent, predict_prob, select_lengthscale, LaplaceOptions, TrainingSet,
};
use nalgebra::{DMatrix, DVector};

fn main() -> gpgp::error::Result<()> {
    // Points on a line, labelled by sign with one flipped label.
    let xs: Vec<f64> = (0..12).map(|k| -3.0 + 0.5 * k as f64).collect();
    let mut labels: Vec<f64> = xs.iter().map(|x| if *x > 0.0 { 1.0 } else { -1.0 }).collect();
    labels[4] = 1.0;
    let x = DMatrix::from_column_slice(xs.len(), 1, &xs);
    let opts = LaplaceOptions::default();

    let ts = TrainingSet::new(item_gram(&x, &KernelConfig::rbf(1.0)?), &labels)?;
    let post = laplace_fit(&ts, &opts)?;
    println!(
        "converged in {} Newton steps, gradient {:.1e}, log evidence {:.4}",
        post.diagnostics().iterations,
        post.diagnostics().grad_norm,
        log_marginal_laplace(&post, &ts)?
    );

    let selection = select_lengthscale(
        &log_grid(0.1, 10.0, 10),
        |g| TrainingSet::new(item_gram(&x, &KernelConfig::rbf(g)?), &labels),
        &opts,
    )?;
    for s in &selection.scores {
        println!("  gamma {:>8.4}  evidence {:?}", s.lengthscale, s.log_evidence);
    }
    println!("selected gamma = {:.4}", selection.lengthscale);

    let rbf = KernelConfig::rbf(selection.lengthscale)?;
    for t in [-2.0, 0.1, 2.0, 8.0] {
        let k_star = DVector::from_iterator(xs.len(), xs.iter().map(|x| (-(x - t) * (x - t) / (2.0 * rbf.lengthscale().powi(2))).exp()));
        let lat = predict_latent(&selection.posterior, &k_star, 1.0)?;
        println!("x = {t:>4}: mean {:+.3} var {:.3} P(y=+1) {:.3}", lat.mean, lat.variance, predict_prob(lat.mean, lat.variance));
    }
    Ok(())
}
