//! The four preference models behind one fit / predict interface.
//!
//! * `Gpgp` puts a GP prior on the preference function itself through the
//!   generalised preferential kernel.
//! * `Pgp` puts a GP prior on a utility and uses the induced preference kernel.
//! * `PairGp` and `PairLogreg` are plain classifiers on concatenated item
//!   covariates, trained on both orientations of every duel and symmetrised at
//!   prediction time by averaging `p(+1 | [x_i, x_j])` and `p(-1 | [x_j, x_i])`.
//!
//! GP kinds pick their RBF lengthscale by maximising the Laplace evidence over
//! a log-spaced grid scaled by the median pairwise covariate distance.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::clustering::PreferenceMatrix;
use crate::dataset::PreferenceDataset;
use crate::error::{Error, Result};
use crate::kernels::{
    edge_gram_from_base, item_gram, log_grid, median_pairwise_distance, EdgeKernel, EdgePair, KernelConfig,
    KernelFamily,
};
use crate::laplace::{
    log_logistic, logistic, predict_latent_batch, predict_prob, select_lengthscale, GridScore, LaplaceOptions,
    LatentPrediction, PosteriorState, TrainingSet,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Gpgp,
    Pgp,
    PairGp,
    PairLogreg,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Gpgp, ModelKind::Pgp, ModelKind::PairGp, ModelKind::PairLogreg];

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Gpgp => "gpgp",
            ModelKind::Pgp => "pgp",
            ModelKind::PairGp => "pair-gp",
            ModelKind::PairLogreg => "pair-logreg",
        }
    }

    pub fn is_gp(&self) -> bool {
        !matches!(self, ModelKind::PairLogreg)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "gpgp" => Ok(ModelKind::Gpgp),
            "pgp" => Ok(ModelKind::Pgp),
            "pair-gp" | "pairgp" => Ok(ModelKind::PairGp),
            "pair-logreg" | "pairlogreg" => Ok(ModelKind::PairLogreg),
            other => Err(Error::input(format!("unknown model '{other}'"))),
        }
    }
}

/// How candidate lengthscales are produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthscaleGrid {
    /// `count` log-spaced multiples from `lo` to `hi` of the median pairwise distance.
    RelativeToMedian { lo: f64, hi: f64, count: usize },
    /// Absolute values.
    Fixed(Vec<f64>),
}

impl Default for LengthscaleGrid {
    fn default() -> Self {
        LengthscaleGrid::RelativeToMedian { lo: 0.1, hi: 10.0, count: 10 }
    }
}

impl LengthscaleGrid {
    pub fn resolve(&self, median: f64) -> Vec<f64> {
        match self {
            LengthscaleGrid::RelativeToMedian { lo, hi, count } => {
                let scale = if median > 0.0 { median } else { 1.0 };
                log_grid(lo * scale, hi * scale, *count)
            }
            LengthscaleGrid::Fixed(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub family: KernelFamily,
    pub grid: LengthscaleGrid,
    pub laplace: LaplaceOptions,
    /// L2 penalty on PAIR-LOGREG coefficients.
    pub logreg_lambda: f64,
    pub logreg_max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            family: KernelFamily::Rbf,
            grid: LengthscaleGrid::default(),
            laplace: LaplaceOptions::default(),
            logreg_lambda: 1e-4,
            logreg_max_iter: 200,
        }
    }
}

impl FitOptions {
    pub fn with_lengthscale(lengthscale: f64) -> Self {
        FitOptions { grid: LengthscaleGrid::Fixed(vec![lengthscale]), ..Default::default() }
    }
}

#[derive(Debug, Clone)]
enum Learned {
    /// GP over edges or over concatenated pairs.
    Gp {
        posterior: PosteriorState,
        points: Vec<EdgePair>,
        /// Base Gram over all items at the selected hyperparameters.
        base: DMatrix<f64>,
    },
    Logreg {
        coef: DVector<f64>,
        iterations: usize,
    },
}

#[derive(Debug, Clone)]
pub struct FittedPreferenceModel {
    kind: ModelKind,
    kernel: Option<KernelConfig>,
    covariates: DMatrix<f64>,
    learned: Learned,
    grid_scores: Vec<GridScore>,
    train_log_likelihood: f64,
    log_evidence: Option<f64>,
}

/// Unique unordered pairs in order of first appearance, plus `(row, y)` with
/// `y` oriented to the stored `(min, max)` order.
pub fn unique_edges(ds: &PreferenceDataset) -> (Vec<EdgePair>, Vec<(usize, f64)>) {
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges = Vec::new();
    let mut obs = Vec::with_capacity(ds.duels().len());
    for d in ds.duels() {
        let (a, b, y) = d.canonical();
        let row = *index.entry((a, b)).or_insert_with(|| {
            edges.push(EdgePair::new(a, b));
            edges.len() - 1
        });
        obs.push((row, y));
    }
    (edges, obs)
}

/// Both orientations of every duel as ordered concatenation points.
fn doubled_points(ds: &PreferenceDataset) -> (Vec<EdgePair>, Vec<(usize, f64)>) {
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut points = Vec::new();
    let mut obs = Vec::with_capacity(2 * ds.duels().len());
    let mut push = |a: usize, b: usize, y: f64, points: &mut Vec<EdgePair>| {
        let row = *index.entry((a, b)).or_insert_with(|| {
            points.push(EdgePair::new(a, b));
            points.len() - 1
        });
        obs.push((row, y));
    };
    for d in ds.duels() {
        let y = d.outcome.sign();
        push(d.first, d.second, y, &mut points);
        push(d.second, d.first, -y, &mut points);
    }
    (points, obs)
}

/// Kernel on concatenations `[x_i, x_j]` expressed through the item Gram:
/// RBF factorises into a product, the linear kernel into a sum.
fn concat_kernel(family: KernelFamily, base: &DMatrix<f64>, e: EdgePair, f: EdgePair) -> f64 {
    match family {
        KernelFamily::Rbf => base[(e.first, f.first)] * base[(e.second, f.second)],
        KernelFamily::Linear => base[(e.first, f.first)] + base[(e.second, f.second)],
    }
}

fn concat_gram(family: KernelFamily, base: &DMatrix<f64>, points: &[EdgePair]) -> DMatrix<f64> {
    let m = points.len();
    let mut g = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in 0..=a {
            let v = concat_kernel(family, base, points[a], points[b]);
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    g
}

fn median_concat_distance(x: &DMatrix<f64>, points: &[EdgePair]) -> Option<f64> {
    let n = x.nrows();
    let mut d2 = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = (x.row(i) - x.row(j)).norm_squared();
            d2[(i, j)] = v;
            d2[(j, i)] = v;
        }
    }
    let mut d: Vec<f64> = Vec::with_capacity(points.len() * points.len().saturating_sub(1) / 2);
    for a in 0..points.len() {
        for b in a + 1..points.len() {
            let (e, f) = (points[a], points[b]);
            d.push((d2[(e.first, f.first)] + d2[(e.second, f.second)]).sqrt());
        }
    }
    if d.is_empty() {
        return None;
    }
    d.sort_by(f64::total_cmp);
    let mid = d.len() / 2;
    Some(if d.len() % 2 == 1 { d[mid] } else { 0.5 * (d[mid - 1] + d[mid]) })
}

fn kernel_for(family: KernelFamily, gamma: f64) -> Result<KernelConfig> {
    match family {
        KernelFamily::Rbf => KernelConfig::rbf(gamma),
        KernelFamily::Linear => Ok(KernelConfig::linear()),
    }
}

/// Fit one model kind to a dataset.
pub fn fit(ds: &PreferenceDataset, kind: ModelKind, opts: &FitOptions) -> Result<FittedPreferenceModel> {
    if ds.duels().is_empty() {
        return Err(Error::input("cannot fit a preference model to zero duels"));
    }
    let z = ds.items().standardized().covariates().clone();
    match kind {
        ModelKind::Gpgp | ModelKind::Pgp => {
            let edge_kernel = if kind == ModelKind::Gpgp { EdgeKernel::Generalised } else { EdgeKernel::Preference };
            let (edges, obs) = unique_edges(ds);
            let median = median_pairwise_distance(&z).unwrap_or(1.0);
            let build = |gamma: f64| {
                let cfg = kernel_for(opts.family, gamma)?;
                let base = item_gram(&z, &cfg);
                TrainingSet::from_observations(edge_gram_from_base(&base, &edges, edge_kernel), &obs)
            };
            fit_gp(kind, opts, z.clone(), edges.clone(), median, build)
        }
        ModelKind::PairGp => {
            let (points, obs) = doubled_points(ds);
            let median = median_concat_distance(&z, &points).unwrap_or(1.0);
            let family = opts.family;
            let build = |gamma: f64| {
                let cfg = kernel_for(family, gamma)?;
                let base = item_gram(&z, &cfg);
                TrainingSet::from_observations(concat_gram(family, &base, &points), &obs)
            };
            fit_gp(kind, opts, z.clone(), points.clone(), median, build)
        }
        ModelKind::PairLogreg => {
            let mut rows = Vec::with_capacity(2 * ds.duels().len());
            let mut labels = Vec::with_capacity(2 * ds.duels().len());
            for d in ds.duels() {
                let y = d.outcome.sign();
                rows.push(concat_row(&z, d.first, d.second));
                labels.push(y);
                rows.push(concat_row(&z, d.second, d.first));
                labels.push(-y);
            }
            let design = DMatrix::from_rows(&rows);
            let fit = fit_logistic_regression(&design, &labels, opts.logreg_lambda, opts.logreg_max_iter)?;
            let train_ll = (&design * &fit.coef)
                .iter()
                .zip(&labels)
                .map(|(t, y)| log_logistic(y * t))
                .sum();
            Ok(FittedPreferenceModel {
                kind,
                kernel: None,
                covariates: z,
                learned: Learned::Logreg { coef: fit.coef, iterations: fit.iterations },
                grid_scores: Vec::new(),
                train_log_likelihood: train_ll,
                log_evidence: None,
            })
        }
    }
}

fn concat_row(z: &DMatrix<f64>, i: usize, j: usize) -> nalgebra::RowDVector<f64> {
    let p = z.ncols();
    nalgebra::RowDVector::from_fn(2 * p, |_, c| if c < p { z[(i, c)] } else { z[(j, c - p)] })
}

fn fit_gp<F>(
    kind: ModelKind,
    opts: &FitOptions,
    z: DMatrix<f64>,
    points: Vec<EdgePair>,
    median: f64,
    build: F,
) -> Result<FittedPreferenceModel>
where
    F: Fn(f64) -> Result<TrainingSet> + Sync,
{
    let grid = match opts.family {
        KernelFamily::Rbf => opts.grid.resolve(median),
        KernelFamily::Linear => vec![1.0],
    };
    let sel = select_lengthscale(&grid, build, &opts.laplace)?;
    let cfg = kernel_for(opts.family, sel.lengthscale)?;
    let base = item_gram(&z, &cfg);
    let train_ll = sel.training.log_likelihood(sel.posterior.mode());
    let log_evidence = sel.scores[sel.index].log_evidence;
    Ok(FittedPreferenceModel {
        kind,
        kernel: Some(cfg),
        covariates: z,
        learned: Learned::Gp { posterior: sel.posterior.with_kernel(cfg), points, base },
        grid_scores: sel.scores,
        train_log_likelihood: train_ll,
        log_evidence,
    })
}

#[derive(Debug, Clone)]
pub struct LogisticFit {
    pub coef: DVector<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
}

/// L2-penalised logistic regression without intercept, by Newton / IRLS with
/// step halving. Maximises `Σ log σ(y_k xₖᵀw) - ½ λ |w|²`.
pub fn fit_logistic_regression(x: &DMatrix<f64>, y: &[f64], lambda: f64, max_iter: usize) -> Result<LogisticFit> {
    if x.nrows() != y.len() {
        return Err(Error::input("design rows and labels differ in length"));
    }
    if !(lambda > 0.0) {
        return Err(Error::input("logistic regression needs a positive penalty"));
    }
    let (n, d) = (x.nrows(), x.ncols());
    let objective = |w: &DVector<f64>| -> f64 {
        let t = x * w;
        t.iter().zip(y).map(|(t, y)| log_logistic(y * t)).sum::<f64>() - 0.5 * lambda * w.norm_squared()
    };
    let tol = 1e-8 * (n as f64).max(1.0);
    let mut w = DVector::zeros(d);
    let mut obj = objective(&w);
    for it in 0..=max_iter {
        let t = x * &w;
        let resid = DVector::from_fn(n, |k, _| y[k] * logistic(-y[k] * t[k]));
        let grad = x.tr_mul(&resid) - &w * lambda;
        let gn = grad.amax();
        if gn <= tol {
            return Ok(LogisticFit { coef: w, iterations: it, grad_norm: gn });
        }
        if it == max_iter {
            return Err(Error::Convergence { iterations: it, grad_norm: gn, last: w });
        }
        let s = DVector::from_fn(n, |k, _| logistic(t[k]) * logistic(-t[k]));
        let mut xs = x.clone();
        for (k, mut row) in xs.row_iter_mut().enumerate() {
            row *= s[k];
        }
        let mut h = x.tr_mul(&xs);
        for i in 0..d {
            h[(i, i)] += lambda;
        }
        let step = h
            .cholesky()
            .ok_or_else(|| Error::Numerical("logistic regression Hessian is not positive definite".into()))?
            .solve(&grad);
        let mut scale = 1.0;
        let mut moved = false;
        for _ in 0..30 {
            let trial = &w + &step * scale;
            let o = objective(&trial);
            if o >= obj {
                w = trial;
                obj = o;
                moved = true;
                break;
            }
            scale *= 0.5;
        }
        if !moved {
            return Ok(LogisticFit { coef: w, iterations: it, grad_norm: gn });
        }
    }
    unreachable!("loop returns on its last iteration")
}

impl FittedPreferenceModel {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn kernel(&self) -> Option<&KernelConfig> {
        self.kernel.as_ref()
    }

    pub fn lengthscale(&self) -> Option<f64> {
        match (self.kernel, self.kind.is_gp()) {
            (Some(k), true) if k.family() == KernelFamily::Rbf => Some(k.lengthscale()),
            _ => None,
        }
    }

    pub fn n_items(&self) -> usize {
        self.covariates.nrows()
    }

    pub fn grid_scores(&self) -> &[GridScore] {
        &self.grid_scores
    }

    /// Log-likelihood of the training labels at the fitted latent values.
    pub fn train_log_likelihood(&self) -> f64 {
        self.train_log_likelihood
    }

    pub fn log_evidence(&self) -> Option<f64> {
        self.log_evidence
    }

    /// Training latent points: unique unordered edges for GPGP and PGP,
    /// ordered concatenation pairs for PAIR-GP, empty for PAIR-LOGREG.
    pub fn training_points(&self) -> &[EdgePair] {
        match &self.learned {
            Learned::Gp { points, .. } => points,
            Learned::Logreg { .. } => &[],
        }
    }

    pub fn posterior(&self) -> Option<&PosteriorState> {
        match &self.learned {
            Learned::Gp { posterior, .. } => Some(posterior),
            Learned::Logreg { .. } => None,
        }
    }

    pub fn coefficients(&self) -> Option<&DVector<f64>> {
        match &self.learned {
            Learned::Logreg { coef, .. } => Some(coef),
            Learned::Gp { .. } => None,
        }
    }

    pub fn logreg_iterations(&self) -> Option<usize> {
        match &self.learned {
            Learned::Logreg { iterations, .. } => Some(*iterations),
            Learned::Gp { .. } => None,
        }
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        let n = self.n_items();
        if i >= n || j >= n {
            return Err(Error::input(format!("pair ({i}, {j}) out of range for {n} items")));
        }
        if i == j {
            return Err(Error::input(format!("cannot predict a self-duel on item {i}")));
        }
        Ok(())
    }

    /// Latent predictions at GP test points (edges or concatenation pairs).
    fn latent_at(&self, targets: &[EdgePair]) -> Result<Vec<LatentPrediction>> {
        let Learned::Gp { posterior, points, base } = &self.learned else {
            return Err(Error::Unsupported("PAIR-LOGREG has no latent GP".into()));
        };
        let m = points.len();
        let mut k_star = DMatrix::zeros(m, targets.len());
        let mut k_ss = Vec::with_capacity(targets.len());
        let family = self.kernel.map(|k| k.family()).unwrap_or(KernelFamily::Rbf);
        for (t, &e) in targets.iter().enumerate() {
            match self.kind {
                ModelKind::Gpgp | ModelKind::Pgp => {
                    let ek = self.edge_kernel();
                    for (r, &p) in points.iter().enumerate() {
                        k_star[(r, t)] = ek.eval_with(base, e, p);
                    }
                    k_ss.push(ek.eval_with(base, e, e).max(0.0));
                }
                ModelKind::PairGp => {
                    for (r, &p) in points.iter().enumerate() {
                        k_star[(r, t)] = concat_kernel(family, base, e, p);
                    }
                    k_ss.push(concat_kernel(family, base, e, e).max(0.0));
                }
                ModelKind::PairLogreg => unreachable!(),
            }
        }
        predict_latent_batch(posterior, &k_star, &k_ss)
    }

    fn edge_kernel(&self) -> EdgeKernel {
        if self.kind == ModelKind::Gpgp {
            EdgeKernel::Generalised
        } else {
            EdgeKernel::Preference
        }
    }

    /// `P(i beats j)` for pairs with `i < j`.
    fn predict_canonical(&self, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
        match self.kind {
            ModelKind::Gpgp | ModelKind::Pgp => {
                let edges: Vec<EdgePair> = pairs.iter().map(|&(i, j)| EdgePair::new(i, j)).collect();
                Ok(self
                    .latent_at(&edges)?
                    .into_iter()
                    .map(|p| predict_prob(p.mean, p.variance))
                    .collect())
            }
            ModelKind::PairGp => {
                let mut targets = Vec::with_capacity(2 * pairs.len());
                for &(i, j) in pairs {
                    targets.push(EdgePair::new(i, j));
                    targets.push(EdgePair::new(j, i));
                }
                let lat = self.latent_at(&targets)?;
                Ok(lat
                    .chunks(2)
                    .map(|c| {
                        let forward = predict_prob(c[0].mean, c[0].variance);
                        let backward_loss = 1.0 - predict_prob(c[1].mean, c[1].variance);
                        symmetrised_probability(forward, backward_loss)
                    })
                    .collect())
            }
            ModelKind::PairLogreg => {
                let Learned::Logreg { coef, .. } = &self.learned else { unreachable!() };
                Ok(pairs
                    .iter()
                    .map(|&(i, j)| {
                        let forward = logistic(concat_row(&self.covariates, i, j).dot(&coef.transpose()));
                        let backward_loss = logistic(-concat_row(&self.covariates, j, i).dot(&coef.transpose()));
                        symmetrised_probability(forward, backward_loss)
                    })
                    .collect())
            }
        }
    }

    /// Probability that item `i` beats item `j`.
    pub fn predict_pair(&self, i: usize, j: usize) -> Result<f64> {
        Ok(self.predict_pairs(&[(i, j)])?[0])
    }

    /// [`FittedPreferenceModel::predict_pair`] over many pairs. Every pair is
    /// evaluated in `(min, max)` orientation and complemented when reversed,
    /// so `p(i, j) + p(j, i) = 1` holds exactly.
    pub fn predict_pairs(&self, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
        for &(i, j) in pairs {
            self.check_pair(i, j)?;
        }
        let canon: Vec<(usize, usize)> = pairs.iter().map(|&(i, j)| (i.min(j), i.max(j))).collect();
        let probs = self.predict_canonical(&canon)?;
        Ok(pairs
            .iter()
            .zip(probs)
            .map(|(&(i, j), p)| if i < j { p } else { 1.0 - p })
            .collect())
    }

    /// Predictive latent mean of the preference function at every ordered
    /// pair. For PAIR-GP the latent is antisymmetrised, `½(h(i,j) - h(j,i))`.
    pub fn predict_matrix(&self) -> Result<PreferenceMatrix> {
        let n = self.n_items();
        let mut g = DMatrix::zeros(n, n);
        match self.kind {
            ModelKind::PairLogreg => {
                return Err(Error::Unsupported("PAIR-LOGREG defines no latent preference function".into()))
            }
            ModelKind::Gpgp | ModelKind::Pgp => {
                let edges: Vec<EdgePair> = (0..n).flat_map(|i| (i + 1..n).map(move |j| EdgePair::new(i, j))).collect();
                if !edges.is_empty() {
                    let lat = self.latent_at(&edges)?;
                    for (e, p) in edges.iter().zip(lat) {
                        g[(e.first, e.second)] = p.mean;
                        g[(e.second, e.first)] = -p.mean;
                    }
                }
            }
            ModelKind::PairGp => {
                let mut targets = Vec::new();
                for i in 0..n {
                    for j in i + 1..n {
                        targets.push(EdgePair::new(i, j));
                        targets.push(EdgePair::new(j, i));
                    }
                }
                if !targets.is_empty() {
                    let lat = self.latent_at(&targets)?;
                    for (c, pair) in lat.chunks(2).zip(targets.chunks(2)) {
                        let v = 0.5 * (c[0].mean - c[1].mean);
                        g[(pair[0].first, pair[0].second)] = v;
                        g[(pair[0].second, pair[0].first)] = -v;
                    }
                }
            }
        }
        PreferenceMatrix::new(g)
    }

    /// PGP only: posterior mean utility of every item, so that
    /// `Ĝ = f̂ 1ᵀ - 1 f̂ᵀ`.
    pub fn utility_means(&self) -> Option<DVector<f64>> {
        let Learned::Gp { posterior, points, base } = &self.learned else {
            return None;
        };
        if self.kind != ModelKind::Pgp {
            return None;
        }
        let grad = posterior.likelihood_gradient();
        Some(DVector::from_fn(self.n_items(), |i, _| {
            points
                .iter()
                .zip(grad.iter())
                .map(|(e, g)| (base[(i, e.first)] - base[(i, e.second)]) * g)
                .sum()
        }))
    }
}

/// `½ p(+1 | [x_i, x_j]) + ½ p(-1 | [x_j, x_i])`.
pub fn symmetrised_probability(forward_win: f64, backward_loss: f64) -> f64 {
    0.5 * forward_win + 0.5 * backward_loss
}
