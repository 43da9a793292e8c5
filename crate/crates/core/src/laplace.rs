//! Binary GP classification with a logistic likelihood, approximated by
//! Laplace's method.
//!
//! The mode search is the usual Newton iteration on
//! `Ψ(f) = log p(y|f) - ½ fᵀK⁻¹f`, run in the `f = K a` parametrisation so
//! that `K` is never inverted and only `B = I + W^½ K W^½` is factorised.
//! Each Newton step is halved until `Ψ` does not decrease.

use std::sync::OnceLock;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{add_jitter, KernelConfig};

/// `1 / (1 + e^{-t})` without overflow for large `|t|`.
pub fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log σ(t)`.
pub fn log_logistic(t: f64) -> f64 {
    if t >= 0.0 {
        -(-t).exp().ln_1p()
    } else {
        t - t.exp().ln_1p()
    }
}

/// Kernel matrix over the latent training points together with the observed
/// labels. Several observations may share one latent point; each row keeps
/// its count of `+1` and `-1` labels.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    gram: DMatrix<f64>,
    wins: DVector<f64>,
    losses: DVector<f64>,
}

impl TrainingSet {
    /// One `±1` label per Gram row.
    pub fn new(gram: DMatrix<f64>, labels: &[f64]) -> Result<Self> {
        let obs: Vec<(usize, f64)> = labels.iter().copied().enumerate().collect();
        if labels.len() != gram.nrows() {
            return Err(Error::input(format!("{} labels for a {}x{} Gram", labels.len(), gram.nrows(), gram.ncols())));
        }
        Self::from_observations(gram, &obs)
    }

    /// Observations `(row, label)`; rows may repeat.
    pub fn from_observations(gram: DMatrix<f64>, observations: &[(usize, f64)]) -> Result<Self> {
        let m = gram.nrows();
        if m == 0 || gram.ncols() != m {
            return Err(Error::input(format!("Gram must be square and nonempty, got {}x{}", m, gram.ncols())));
        }
        if gram.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("Gram contains non-finite entries".into()));
        }
        let scale = gram.amax().max(1.0);
        for i in 0..m {
            for j in 0..i {
                if (gram[(i, j)] - gram[(j, i)]).abs() > 1e-10 * scale {
                    return Err(Error::input(format!("Gram is not symmetric at ({i}, {j})")));
                }
            }
        }
        let mut wins = DVector::zeros(m);
        let mut losses = DVector::zeros(m);
        for &(row, y) in observations {
            if row >= m {
                return Err(Error::input(format!("observation row {row} out of range for {m} latent points")));
            }
            if y == 1.0 {
                wins[row] += 1.0;
            } else if y == -1.0 {
                losses[row] += 1.0;
            } else {
                return Err(Error::input(format!("labels must be ±1, got {y}")));
            }
        }
        Ok(TrainingSet { gram, wins, losses })
    }

    pub fn len(&self) -> usize {
        self.gram.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.gram.nrows() == 0
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn observation_count(&self) -> f64 {
        self.wins.sum() + self.losses.sum()
    }

    pub fn log_likelihood(&self, f: &DVector<f64>) -> f64 {
        f.iter()
            .zip(self.wins.iter().zip(self.losses.iter()))
            .map(|(&fi, (&w, &l))| {
                let mut s = 0.0;
                if w > 0.0 {
                    s += w * log_logistic(fi);
                }
                if l > 0.0 {
                    s += l * log_logistic(-fi);
                }
                s
            })
            .sum()
    }

    /// `∂ log p(y|f) / ∂f`.
    pub fn likelihood_gradient(&self, f: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(f.len(), |i, _| {
            let (w, l) = (self.wins[i], self.losses[i]);
            w * logistic(-f[i]) - l * logistic(f[i])
        })
    }

    /// `W = -∂² log p(y|f) / ∂f²` (diagonal).
    pub fn likelihood_curvature(&self, f: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(f.len(), |i, _| {
            let n = self.wins[i] + self.losses[i];
            n * logistic(f[i]) * logistic(-f[i])
        })
    }

    fn jittered(&self, rel: f64) -> (DMatrix<f64>, f64) {
        let mut k = self.gram.clone();
        let nugget = add_jitter(&mut k, rel);
        (k, nugget)
    }

    /// `log p(y|f) - ½ fᵀK⁻¹f` with the same jitter the fit uses.
    pub fn log_posterior(&self, f: &DVector<f64>, opts: &LaplaceOptions) -> Result<f64> {
        let (k, _) = self.jittered(opts.jitter);
        let chol = cholesky(k)?;
        let a = chol.solve(f);
        Ok(self.log_likelihood(f) - 0.5 * f.dot(&a))
    }

    /// Gradient of [`TrainingSet::log_posterior`].
    pub fn log_posterior_gradient(&self, f: &DVector<f64>, opts: &LaplaceOptions) -> Result<DVector<f64>> {
        let (k, _) = self.jittered(opts.jitter);
        let chol = cholesky(k)?;
        Ok(self.likelihood_gradient(f) - chol.solve(f))
    }
}

fn cholesky(m: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m).ok_or_else(|| Error::Numerical("matrix is not positive definite after jitter".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceOptions {
    pub max_iter: usize,
    /// Convergence threshold on the sup-norm of the log-posterior gradient.
    pub tol: f64,
    pub max_halvings: usize,
    /// Diagonal nugget added to the Gram, relative to its mean diagonal.
    pub jitter: f64,
}

impl Default for LaplaceOptions {
    fn default() -> Self {
        LaplaceOptions { max_iter: 100, tol: 1e-6, max_halvings: 20, jitter: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub grad_norm: f64,
    pub halvings: usize,
    pub nugget: f64,
    /// `Ψ` after every accepted step, starting from `f = 0`.
    pub objective_trace: Vec<f64>,
}

/// Gaussian approximation to the latent posterior at its mode.
#[derive(Debug, Clone)]
pub struct PosteriorState {
    mode: DVector<f64>,
    /// `K⁻¹ f̂`
    alpha: DVector<f64>,
    grad: DVector<f64>,
    sqrt_w: DVector<f64>,
    /// Lower Cholesky factor of `I + W^½ K W^½`.
    chol_b: DMatrix<f64>,
    /// Jittered Gram actually used.
    gram: DMatrix<f64>,
    kernel: Option<KernelConfig>,
    diagnostics: FitDiagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentPrediction {
    pub mean: f64,
    pub variance: f64,
    /// Variance came out negative from cancellation and was clamped to 0.
    pub clamped: bool,
}

impl PosteriorState {
    pub fn mode(&self) -> &DVector<f64> {
        &self.mode
    }

    /// `∇ log p(y|f̂)`, the weights of the predictive mean.
    pub fn likelihood_gradient(&self) -> &DVector<f64> {
        &self.grad
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn sqrt_w(&self) -> &DVector<f64> {
        &self.sqrt_w
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn kernel(&self) -> Option<&KernelConfig> {
        self.kernel.as_ref()
    }

    pub fn diagnostics(&self) -> &FitDiagnostics {
        &self.diagnostics
    }

    pub fn len(&self) -> usize {
        self.mode.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mode.is_empty()
    }

    pub fn with_kernel(mut self, kernel: KernelConfig) -> Self {
        self.kernel = Some(kernel);
        self
    }

    /// Solve `(I + W^½ K W^½) x = rhs` with the stored factor.
    pub fn solve_b(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let l = &self.chol_b;
        let y = l.solve_lower_triangular(rhs).expect("factor has a positive diagonal");
        l.tr_solve_lower_triangular(&y).expect("factor has a positive diagonal")
    }

    /// `½ log det(I + W^½ K W^½)`.
    pub fn half_log_det_b(&self) -> f64 {
        self.chol_b.diagonal().iter().map(|d| d.ln()).sum()
    }
}

/// Locate the posterior mode and factor the curvature there.
pub fn laplace_fit(ts: &TrainingSet, opts: &LaplaceOptions) -> Result<PosteriorState> {
    if !(opts.tol > 0.0) {
        return Err(Error::input("tolerance must be positive"));
    }
    let m = ts.len();
    let (k, nugget) = ts.jittered(opts.jitter);
    cholesky(k.clone())?;
    let objective = |f: &DVector<f64>, a: &DVector<f64>| ts.log_likelihood(f) - 0.5 * a.dot(f);

    let mut a = DVector::zeros(m);
    let mut f = DVector::zeros(m);
    let mut psi = objective(&f, &a);
    let mut trace = vec![psi];
    let mut halvings_total = 0;
    let mut iterations = 0;

    let grad_norm = |f: &DVector<f64>, a: &DVector<f64>| (ts.likelihood_gradient(f) - a).amax();

    loop {
        let gn = grad_norm(&f, &a);
        if gn <= opts.tol {
            break;
        }
        if iterations >= opts.max_iter {
            return Err(Error::Convergence { iterations, grad_norm: gn, last: f });
        }
        iterations += 1;

        let grad = ts.likelihood_gradient(&f);
        let w = ts.likelihood_curvature(&f);
        let sw = w.map(f64::sqrt);
        let l = factor_b(&k, &sw)?;
        let b = w.component_mul(&f) + &grad;
        let kb = &k * &b;
        let c = l.solve_lower_triangular(&sw.component_mul(&kb)).expect("positive diagonal");
        let d = l.tr_solve_lower_triangular(&c).expect("positive diagonal");
        let a_newton = &b - sw.component_mul(&d);
        let step = &a_newton - &a;

        let mut scale = 1.0;
        let mut accepted = false;
        for h in 0..=opts.max_halvings {
            let a_try = &a + &step * scale;
            let f_try = &k * &a_try;
            let psi_try = objective(&f_try, &a_try);
            if psi_try >= psi {
                a = a_try;
                f = f_try;
                psi = psi_try;
                halvings_total += h;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        trace.push(psi);
        if !accepted {
            // No ascent possible at working precision.
            let gn = grad_norm(&f, &a);
            if gn <= opts.tol {
                break;
            }
            return Err(Error::Convergence { iterations, grad_norm: gn, last: f });
        }
    }

    let grad = ts.likelihood_gradient(&f);
    let w = ts.likelihood_curvature(&f);
    let sqrt_w = w.map(f64::sqrt);
    let chol_b = factor_b(&k, &sqrt_w)?;
    let gn = (&grad - &a).amax();
    Ok(PosteriorState {
        mode: f,
        alpha: a,
        grad,
        sqrt_w,
        chol_b,
        gram: k,
        kernel: None,
        diagnostics: FitDiagnostics {
            iterations,
            grad_norm: gn,
            halvings: halvings_total,
            nugget,
            objective_trace: trace,
        },
    })
}

fn factor_b(k: &DMatrix<f64>, sw: &DVector<f64>) -> Result<DMatrix<f64>> {
    let m = k.nrows();
    let mut b = DMatrix::from_fn(m, m, |i, j| sw[i] * k[(i, j)] * sw[j]);
    for i in 0..m {
        b[(i, i)] += 1.0;
    }
    Ok(cholesky(b)?.l())
}

/// Latent predictive mean and variance at one test point with cross-covariance
/// `k_star` to the training points and prior variance `k_ss`.
pub fn predict_latent(ps: &PosteriorState, k_star: &DVector<f64>, k_ss: f64) -> Result<LatentPrediction> {
    if k_star.len() != ps.len() {
        return Err(Error::input(format!(
            "cross-covariance has length {}, posterior has {} points",
            k_star.len(),
            ps.len()
        )));
    }
    if !(k_ss >= 0.0) {
        return Err(Error::input(format!("prior variance must be non-negative, got {k_ss}")));
    }
    let mean = k_star.dot(&ps.grad);
    let v = ps
        .chol_b
        .solve_lower_triangular(&ps.sqrt_w.component_mul(k_star))
        .expect("positive diagonal");
    Ok(clamp_variance(mean, k_ss - v.norm_squared()))
}

/// Batched [`predict_latent`]: `k_star` is `m x t`, one column per test point.
pub fn predict_latent_batch(ps: &PosteriorState, k_star: &DMatrix<f64>, k_ss: &[f64]) -> Result<Vec<LatentPrediction>> {
    if k_star.nrows() != ps.len() || k_star.ncols() != k_ss.len() {
        return Err(Error::input("cross-covariance shape does not match posterior and test points"));
    }
    let means = k_star.tr_mul(&ps.grad);
    let mut scaled = k_star.clone();
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        row *= ps.sqrt_w[i];
    }
    let v = ps.chol_b.solve_lower_triangular(&scaled).expect("positive diagonal");
    Ok((0..k_ss.len())
        .map(|t| clamp_variance(means[t], k_ss[t] - v.column(t).norm_squared()))
        .collect())
}

fn clamp_variance(mean: f64, variance: f64) -> LatentPrediction {
    if variance < 0.0 {
        LatentPrediction { mean, variance: 0.0, clamped: true }
    } else {
        LatentPrediction { mean, variance, clamped: false }
    }
}

const HERMITE_NODES: usize = 20;

/// Probabilists'-normalised Gauss–Hermite rule: `Σ w_i g(x_i) ≈ E[g(Z)]`,
/// `Z ~ N(0, 1)`. Nodes and weights are symmetrised so the rule is exactly odd-symmetric.
fn hermite_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        // Golub–Welsch on the Jacobi matrix of the physicists' Hermite polynomials.
        let n = HERMITE_NODES;
        let jacobi = DMatrix::from_fn(n, n, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64 / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for k in 0..n {
            let mirror = n - 1 - k;
            let x = 0.5 * (pairs[k].0 - pairs[mirror].0);
            let w = 0.5 * (pairs[k].1 + pairs[mirror].1);
            nodes[k] = x * std::f64::consts::SQRT_2;
            weights[k] = w;
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        (nodes, weights)
    })
}

/// `∫ σ(t) N(t; mean, variance) dt` by 20-node Gauss–Hermite quadrature.
pub fn predict_prob(mean: f64, variance: f64) -> f64 {
    if variance <= 0.0 {
        return logistic(mean);
    }
    let sd = variance.sqrt();
    let (nodes, weights) = hermite_rule();
    // Pair mirrored nodes so that mean = 0 gives exactly ½.
    let n = nodes.len();
    let mut p = 0.0;
    for k in 0..n / 2 {
        let mirror = n - 1 - k;
        p += weights[k] * logistic(mean + sd * nodes[k]) + weights[mirror] * logistic(mean + sd * nodes[mirror]);
    }
    p
}

/// Laplace approximation to `log p(y | K)`:
/// `log p(y|f̂) - ½ f̂ᵀK⁻¹f̂ - ½ log det(I + W^½ K W^½)`.
pub fn log_marginal_laplace(ps: &PosteriorState, ts: &TrainingSet) -> Result<f64> {
    if ps.len() != ts.len() {
        return Err(Error::input("posterior and training set sizes differ"));
    }
    let value = ts.log_likelihood(&ps.mode) - 0.5 * ps.alpha.dot(&ps.mode) - ps.half_log_det_b();
    if !value.is_finite() {
        return Err(Error::Numerical("log marginal likelihood is not finite".into()));
    }
    Ok(value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridScore {
    pub lengthscale: f64,
    pub log_evidence: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct LengthscaleSelection {
    pub lengthscale: f64,
    pub index: usize,
    pub scores: Vec<GridScore>,
    pub posterior: PosteriorState,
    pub training: TrainingSet,
}

/// Fit at every grid point and keep the one with the largest Laplace evidence.
/// Ties go to the larger lengthscale, then to the later grid index.
pub fn select_lengthscale<F>(grid: &[f64], build: F, opts: &LaplaceOptions) -> Result<LengthscaleSelection>
where
    F: Fn(f64) -> Result<TrainingSet> + Sync,
{
    if grid.is_empty() {
        return Err(Error::input("lengthscale grid is empty"));
    }
    if let Some(bad) = grid.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
        return Err(Error::input(format!("lengthscale grid values must be positive, got {bad}")));
    }
    let fits: Vec<Result<(f64, PosteriorState, TrainingSet)>> = grid
        .par_iter()
        .map(|&gamma| {
            let ts = build(gamma)?;
            let ps = laplace_fit(&ts, opts)?;
            let ev = log_marginal_laplace(&ps, &ts)?;
            Ok((ev, ps, ts))
        })
        .collect();

    let mut scores = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, f64)> = None;
    let mut failures = Vec::new();
    for (idx, (fit, &gamma)) in fits.iter().zip(grid).enumerate() {
        match fit {
            Ok((ev, _, _)) => {
                scores.push(GridScore { lengthscale: gamma, log_evidence: Some(*ev), error: None });
                let better = match best {
                    None => true,
                    Some((b, bev)) => *ev > bev || (*ev == bev && gamma >= grid[b]),
                };
                if better {
                    best = Some((idx, *ev));
                }
            }
            Err(e) => {
                scores.push(GridScore { lengthscale: gamma, log_evidence: None, error: Some(e.to_string()) });
            }
        }
    }
    let Some((index, _)) = best else {
        for fit in fits {
            if let Err(e) = fit {
                failures.push(e);
            }
        }
        return Err(Error::AllFailed(failures));
    };
    let (_, posterior, training) = fits.into_iter().nth(index).expect("index in range").expect("best fit succeeded");
    let lengthscale = grid[index];
    Ok(LengthscaleSelection { lengthscale, index, scores, posterior, training })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Root of `f = σ(-f)` by bisection, i.e. the mode for K = [1], y = +1.
    fn scalar_mode_oracle(k: f64) -> f64 {
        let (mut lo, mut hi) = (0.0f64, 1.0f64 * k.max(1.0));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid - k / (1.0 + mid.exp()) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn logistic_values() {
        assert_eq!(logistic(0.0), 0.5);
        assert!((logistic(40.0) - 1.0).abs() < 1e-12);
        assert!(logistic(-800.0) >= 0.0 && logistic(800.0) <= 1.0);
        for t in [-30.0, -2.5, -0.1, 0.7, 3.0, 25.0] {
            assert!((logistic(t) + logistic(-t) - 1.0).abs() <= 1e-15);
            assert_abs_diff_eq!(log_logistic(t), logistic(t).ln(), epsilon = 1e-12);
        }
    }

    #[test]
    fn scalar_mode_matches_bisection() {
        let oracle = scalar_mode_oracle(1.0);
        assert_abs_diff_eq!(oracle, 0.401058, epsilon = 1e-6);
        let ts = TrainingSet::new(DMatrix::from_element(1, 1, 1.0), &[1.0]).unwrap();
        let ps = laplace_fit(&ts, &LaplaceOptions::default()).unwrap();
        assert_abs_diff_eq!(ps.mode()[0], oracle, epsilon = 1e-6);
        let neg = TrainingSet::new(DMatrix::from_element(1, 1, 1.0), &[-1.0]).unwrap();
        let pn = laplace_fit(&neg, &LaplaceOptions::default()).unwrap();
        assert_abs_diff_eq!(pn.mode()[0], -ps.mode()[0], epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = DMatrix::from_element(1, 1, 1.0);
        assert!(TrainingSet::new(g.clone(), &[0.0]).is_err());
        assert!(TrainingSet::new(g.clone(), &[1.0, 1.0]).is_err());
        let ts = TrainingSet::new(g, &[1.0]).unwrap();
        let opts = LaplaceOptions { tol: 0.0, ..Default::default() };
        assert!(laplace_fit(&ts, &opts).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.1, 1.0]);
        assert!(TrainingSet::new(asym, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn non_psd_gram_is_numerical_error() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let ts = TrainingSet::new(g, &[1.0, -1.0]).unwrap();
        assert!(matches!(laplace_fit(&ts, &LaplaceOptions::default()), Err(Error::Numerical(_))));
    }

    #[test]
    fn convergence_error_carries_iterate() {
        let ts = TrainingSet::new(DMatrix::from_element(1, 1, 5.0), &[1.0]).unwrap();
        let opts = LaplaceOptions { max_iter: 1, tol: 1e-14, ..Default::default() };
        match laplace_fit(&ts, &opts) {
            Err(Error::Convergence { iterations, last, .. }) => {
                assert_eq!(iterations, 1);
                assert!(last[0] > 0.0);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn predictive_limits() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
        let ts = TrainingSet::new(g, &[1.0, -1.0]).unwrap();
        let ps = laplace_fit(&ts, &LaplaceOptions::default()).unwrap();
        let zero = predict_latent(&ps, &DVector::zeros(2), 0.7).unwrap();
        assert_eq!(zero.mean, 0.0);
        assert_eq!(zero.variance, 0.7);
        let ks = DVector::from_vec(vec![0.4, -0.2]);
        let a = predict_latent(&ps, &ks, 1.0).unwrap();
        let b = predict_latent(&ps, &(-&ks), 1.0).unwrap();
        assert_eq!(a.mean, -b.mean);
        assert_abs_diff_eq!(a.variance, b.variance, epsilon = 1e-15);
        assert!(predict_latent(&ps, &DVector::zeros(3), 1.0).is_err());
        let batch = predict_latent_batch(&ps, &DMatrix::from_column_slice(2, 1, ks.as_slice()), &[1.0]).unwrap();
        assert_abs_diff_eq!(batch[0].mean, a.mean, epsilon = 1e-15);
        assert_abs_diff_eq!(batch[0].variance, a.variance, epsilon = 1e-14);
    }

    #[test]
    fn scalar_predictive_closed_form() {
        // m = 1: mean = k* σ(-f̂), var = kss - k*² w / (1 + K w).
        let kk = 1.5;
        let ts = TrainingSet::new(DMatrix::from_element(1, 1, kk), &[1.0]).unwrap();
        let ps = laplace_fit(&ts, &LaplaceOptions::default()).unwrap();
        let kj = ps.gram()[(0, 0)];
        let fh = ps.mode()[0];
        let w = logistic(fh) * logistic(-fh);
        let (kstar, kss) = (0.6, 1.2);
        let p = predict_latent(&ps, &DVector::from_element(1, kstar), kss).unwrap();
        assert_abs_diff_eq!(p.mean, kstar * logistic(-fh), epsilon = 1e-12);
        assert_abs_diff_eq!(p.variance, kss - kstar * kstar * w / (1.0 + kj * w), epsilon = 1e-12);
    }

    #[test]
    fn predict_prob_symmetry_and_degenerate() {
        for v in [0.0, 0.3, 1.0, 10.0, 100.0] {
            assert_abs_diff_eq!(predict_prob(0.0, v), 0.5, epsilon = 1e-15);
        }
        assert_eq!(predict_prob(1.3, 0.0), logistic(1.3));
        assert_abs_diff_eq!(predict_prob(1.3, 1e-12), logistic(1.3), epsilon = 1e-9);
        for (m, v) in [(0.4, 2.0), (-1.7, 0.5)] {
            assert_abs_diff_eq!(predict_prob(m, v) + predict_prob(-m, v), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn predict_prob_matches_monte_carlo() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        // Monte-Carlo oracle, antithetic pairs.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 10_000_000usize;
        let mut acc = 0.0;
        for _ in 0..n / 2 {
            let z: f64 = StandardNormal.sample(&mut rng);
            acc += logistic(1.0 + z) + logistic(1.0 - z);
        }
        let mc = acc / n as f64;
        assert_abs_diff_eq!(predict_prob(1.0, 1.0), mc, epsilon = 1e-3);
    }

    #[test]
    fn evidence_limits() {
        let tiny = TrainingSet::new(DMatrix::from_element(1, 1, 1e-10), &[1.0]).unwrap();
        let ps = laplace_fit(&tiny, &LaplaceOptions::default()).unwrap();
        assert_abs_diff_eq!(log_marginal_laplace(&ps, &tiny).unwrap(), -std::f64::consts::LN_2, epsilon = 1e-8);

        // m = 1, K = [1]: exact evidence is ∫σ(f)N(f;0,1)df = ½.
        let one = TrainingSet::new(DMatrix::from_element(1, 1, 1.0), &[1.0]).unwrap();
        let ps = laplace_fit(&one, &LaplaceOptions::default()).unwrap();
        let lm = log_marginal_laplace(&ps, &one).unwrap();
        assert!((lm - 0.5f64.ln()).abs() < 0.02, "laplace {lm}");
        // Per-observation evidence never exceeds the likelihood at the mode.
        assert!(lm <= log_logistic(ps.mode()[0]));

        let dup = TrainingSet::from_observations(DMatrix::from_element(1, 1, 1.0), &[(0, 1.0), (0, 1.0)]).unwrap();
        let pd = laplace_fit(&dup, &LaplaceOptions::default()).unwrap();
        let ld = log_marginal_laplace(&pd, &dup).unwrap();
        assert!(ld / 2.0 <= log_logistic(pd.mode()[0]));
    }

    #[test]
    fn b_solves_are_accurate() {
        let g = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.2, 0.5, 1.0, 0.4, 0.2, 0.4, 1.0]);
        let ts = TrainingSet::new(g, &[1.0, -1.0, 1.0]).unwrap();
        let ps = laplace_fit(&ts, &LaplaceOptions::default()).unwrap();
        let sw = ps.sqrt_w();
        let b = DMatrix::from_fn(3, 3, |i, j| sw[i] * ps.gram()[(i, j)] * sw[j]) + DMatrix::identity(3, 3);
        let rhs = DVector::from_vec(vec![0.3, -1.0, 2.0]);
        let x = ps.solve_b(&rhs);
        assert!((&b * &x - &rhs).norm() / rhs.norm() < 1e-8);
        assert!(ps.diagnostics().grad_norm <= 1e-6);
    }

    #[test]
    fn newton_trace_is_monotone() {
        let g = DMatrix::from_row_slice(2, 2, &[30.0, 29.0, 29.0, 30.0]);
        let ts = TrainingSet::from_observations(g, &[(0, 1.0), (0, 1.0), (1, -1.0), (1, 1.0)]).unwrap();
        let ps = laplace_fit(&ts, &LaplaceOptions::default()).unwrap();
        let t = &ps.diagnostics().objective_trace;
        assert!(t.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn selection_rules() {
        let build = |g: f64| TrainingSet::new(DMatrix::from_element(1, 1, g), &[1.0]);
        let opts = LaplaceOptions::default();
        let one = select_lengthscale(&[0.7], build, &opts).unwrap();
        assert_eq!(one.lengthscale, 0.7);
        assert_eq!(one.scores.len(), 1);

        // Constant score: tie goes to the larger γ, and to the later index on equal γ.
        let flat = |_g: f64| TrainingSet::new(DMatrix::from_element(1, 1, 1.0), &[1.0]);
        let sel = select_lengthscale(&[2.0, 5.0, 1.0], flat, &opts).unwrap();
        assert_eq!(sel.lengthscale, 5.0);
        let sel = select_lengthscale(&[5.0, 1.0, 5.0], flat, &opts).unwrap();
        assert_eq!(sel.index, 2);

        let failing = |_g: f64| -> Result<TrainingSet> { Err(Error::input("nope")) };
        assert!(matches!(select_lengthscale(&[1.0, 2.0], failing, &opts), Err(Error::AllFailed(v)) if v.len() == 2));
        assert!(select_lengthscale(&[], build, &opts).is_err());
        assert!(select_lengthscale(&[-1.0], build, &opts).is_err());
    }

    #[test]
    fn identical_inputs_bit_identical_state() {
        let g = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.2, 0.5, 1.0, 0.4, 0.2, 0.4, 1.0]);
        let ts = TrainingSet::new(g, &[1.0, 1.0, -1.0]).unwrap();
        let a = laplace_fit(&ts, &LaplaceOptions::default()).unwrap();
        let b = laplace_fit(&ts, &LaplaceOptions::default()).unwrap();
        assert_eq!(a.mode(), b.mode());
        assert_eq!(a.chol_b, b.chol_b);
        assert_eq!(a.diagnostics(), b.diagnostics());
    }
}
