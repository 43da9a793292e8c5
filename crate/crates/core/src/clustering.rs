//! Clusters of comparable items: groups that are internally rankable while
//! comparisons across groups carry no signal.
//!
//! A preference matrix with `L` such clusters has rank `2L`, so clusters are
//! read off the top `2L` left singular vectors with k-means. The three entry
//! points differ only in which matrix is decomposed: the GPGP latent mean
//! (`gpgp_clus`), the raw comparison matrix (`svd_clus`), or the raw matrix
//! with PGP-abstained entries removed (`pr_clus`).

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::PreferenceDataset;
use crate::error::{Error, Result};
use crate::models::{fit, FitOptions, ModelKind};

/// Skew-symmetric `n x n` estimate of the preference function on all item pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceMatrix {
    values: DMatrix<f64>,
}

impl PreferenceMatrix {
    /// Checks skew-symmetry to `1e-8` (relative to the largest entry).
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n {
            return Err(Error::input("preference matrix must be square"));
        }
        let scale = values.amax().max(1.0);
        for i in 0..n {
            if values[(i, i)] != 0.0 {
                return Err(Error::input(format!("preference matrix diagonal is nonzero at {i}")));
            }
            for j in 0..i {
                if (values[(i, j)] + values[(j, i)]).abs() > 1e-8 * scale {
                    return Err(Error::input(format!("preference matrix is not skew-symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(PreferenceMatrix { values })
    }

    /// `Σ_l f_l 1_lᵀ - 1_l f_lᵀ`, where `f_l` is `utilities[l]` restricted to
    /// the items labelled `l`. Utilities outside a cluster are ignored.
    pub fn from_clusters(labels: &[usize], utilities: &[Vec<f64>]) -> Result<Self> {
        let n = labels.len();
        if utilities.iter().any(|u| u.len() != n) {
            return Err(Error::input("each utility vector must have one entry per item"));
        }
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j && labels[i] == labels[j] {
                    let u = &utilities[labels[i]];
                    g[(i, j)] = u[i] - u[j];
                }
            }
        }
        PreferenceMatrix::new(g)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterMethod {
    GpgpClus,
    PrClus,
    SvdClus,
}

impl ClusterMethod {
    pub const ALL: [ClusterMethod; 3] = [ClusterMethod::GpgpClus, ClusterMethod::PrClus, ClusterMethod::SvdClus];

    pub fn name(&self) -> &'static str {
        match self {
            ClusterMethod::GpgpClus => "gpgp-clus",
            ClusterMethod::PrClus => "pr-clus",
            ClusterMethod::SvdClus => "svd-clus",
        }
    }
}

impl fmt::Display for ClusterMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for ClusterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "gpgp-clus" | "gpgp" => Ok(ClusterMethod::GpgpClus),
            "pr-clus" | "pr" => Ok(ClusterMethod::PrClus),
            "svd-clus" | "svd" => Ok(ClusterMethod::SvdClus),
            other => Err(Error::input(format!("unknown clustering method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterOptions {
    /// Multiply singular-vector columns by `√σ` before k-means.
    pub scale_by_sqrt_sigma: bool,
    /// Rescale every embedding row to unit length (after any `√σ` scaling).
    pub normalize_rows: bool,
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        ClusterOptions { scale_by_sqrt_sigma: false, normalize_rows: false, restarts: 1000, max_iter: 300 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    /// Cluster label per item, `0..L`, numbered in order of first appearance.
    pub assignment: Vec<usize>,
    /// `n x 2L` row embedding passed to k-means.
    pub embedding: DMatrix<f64>,
    /// Top `2L` singular values, descending.
    pub singular_values: Vec<f64>,
    pub method: ClusterMethod,
    pub scaled: bool,
    pub inertia: f64,
}

/// Singular values (descending) with matching left singular vectors.
fn sorted_svd(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let svd = m.clone().svd(true, false);
    let u = svd.u.ok_or_else(|| Error::Numerical("SVD did not return singular vectors".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&k| svd.singular_values[k]).collect();
    let vectors = DMatrix::from_fn(u.nrows(), order.len(), |i, c| u[(i, order[c])]);
    Ok((values, vectors))
}

/// Top-`2L` SVD embedding followed by k-means with `k = L`.
pub fn spectral_clusters(
    matrix: &DMatrix<f64>,
    clusters: usize,
    seed: u64,
    opts: &ClusterOptions,
    method: ClusterMethod,
) -> Result<ClusterResult> {
    let n = matrix.nrows();
    if clusters == 0 || 2 * clusters > n {
        return Err(Error::input(format!("need 1 <= 2L <= n, got L = {clusters} with n = {n}")));
    }
    if matrix.ncols() != n {
        return Err(Error::input("comparison matrix must be square"));
    }
    let (values, vectors) = sorted_svd(matrix)?;
    if !(values[0] > 1e-12) {
        return Err(Error::Degenerate("matrix has no nonzero singular value".into()));
    }
    let dims = 2 * clusters;
    let mut embedding = DMatrix::from_fn(n, dims, |i, c| {
        let s = if opts.scale_by_sqrt_sigma { values[c].sqrt() } else { 1.0 };
        vectors[(i, c)] * s
    });
    if opts.normalize_rows {
        for mut row in embedding.row_iter_mut() {
            let norm = row.norm();
            if norm > 1e-12 {
                row /= norm;
            }
        }
    }
    let km = kmeans(&embedding, clusters, seed, opts.restarts, opts.max_iter)?;
    Ok(ClusterResult {
        assignment: km.labels,
        embedding,
        singular_values: values[..dims].to_vec(),
        method,
        scaled: opts.scale_by_sqrt_sigma,
        inertia: km.inertia,
    })
}

/// Cluster a fitted preference matrix.
pub fn gpgp_clus(g: &PreferenceMatrix, clusters: usize, seed: u64, opts: &ClusterOptions) -> Result<ClusterResult> {
    spectral_clusters(g.values(), clusters, seed, opts, ClusterMethod::GpgpClus)
}

/// Fit GPGP on every duel, predict the complete preference matrix and cluster it.
pub fn gpgp_clus_dataset(
    ds: &PreferenceDataset,
    clusters: usize,
    seed: u64,
    opts: &ClusterOptions,
    fit_opts: &FitOptions,
) -> Result<ClusterResult> {
    check_cluster_count(ds.n_items(), clusters)?;
    let model = fit(ds, ModelKind::Gpgp, fit_opts)?;
    gpgp_clus(&model.predict_matrix()?, clusters, seed, opts)
}

fn check_cluster_count(n: usize, clusters: usize) -> Result<()> {
    if clusters == 0 || 2 * clusters > n {
        return Err(Error::input(format!("need 1 <= 2L <= n, got L = {clusters} with n = {n}")));
    }
    Ok(())
}

/// Cluster the observed comparison matrix directly.
pub fn svd_clus(ds: &PreferenceDataset, clusters: usize, seed: u64, opts: &ClusterOptions) -> Result<ClusterResult> {
    check_cluster_count(ds.n_items(), clusters)?;
    spectral_clusters(&ds.comparison_matrix(), clusters, seed, opts, ClusterMethod::SvdClus)
}

/// Comparison matrix with every observed entry whose PGP win probability lies
/// within `tau` of ½ set to zero.
pub fn abstained_comparison_matrix(ds: &PreferenceDataset, tau: f64, fit_opts: &FitOptions) -> Result<DMatrix<f64>> {
    if !(0.0..0.5).contains(&tau) {
        return Err(Error::input(format!("abstention threshold must lie in [0, 0.5), got {tau}")));
    }
    let mut y = ds.comparison_matrix();
    if tau == 0.0 {
        return Ok(y);
    }
    let model = fit(ds, ModelKind::Pgp, fit_opts)?;
    let n = ds.n_items();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| y[(i, j)] != 0.0)
        .collect();
    let probs = model.predict_pairs(&pairs)?;
    for (&(i, j), p) in pairs.iter().zip(probs) {
        if (p - 0.5).abs() < tau {
            y[(i, j)] = 0.0;
            y[(j, i)] = 0.0;
        }
    }
    Ok(y)
}

/// Partial ranking with abstention, then spectral clustering.
pub fn pr_clus(
    ds: &PreferenceDataset,
    clusters: usize,
    tau: f64,
    seed: u64,
    opts: &ClusterOptions,
    fit_opts: &FitOptions,
) -> Result<ClusterResult> {
    check_cluster_count(ds.n_items(), clusters)?;
    let y = abstained_comparison_matrix(ds, tau, fit_opts)?;
    spectral_clusters(&y, clusters, seed, opts, ClusterMethod::PrClus)
}

/// Order items from most to least preferred using the rank-two structure of
/// a rankable preference matrix: inside the span of the top two singular
/// vectors, the direction orthogonal to the constant vector carries the utility.
pub fn spectral_ranking(g: &PreferenceMatrix) -> Result<Vec<usize>> {
    let n = g.len();
    if n < 2 {
        return Ok((0..n).collect());
    }
    let (values, u) = sorted_svd(g.values())?;
    if !(values[0] > 1e-12) {
        return Err(Error::Degenerate("preference matrix is zero".into()));
    }
    let u2 = u.columns(0, 2);
    let ones = DVector::from_element(n, 1.0);
    let c = u2.tr_mul(&ones);
    let dir = u2 * DVector::from_vec(vec![-c[1], c[0]]);
    // Orient so that items with larger row sums (more wins) score higher.
    let row_sums: DVector<f64> = g.values().column_sum();
    let sign = if dir.dot(&row_sums) < 0.0 { -1.0 } else { 1.0 };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| (sign * dir[b]).total_cmp(&(sign * dir[a])).then(a.cmp(&b)));
    Ok(order)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centers: DMatrix<f64>,
    pub inertia: f64,
}

fn sq_dist(a: &DMatrix<f64>, i: usize, c: &DMatrix<f64>, k: usize) -> f64 {
    (0..a.ncols()).map(|d| (a[(i, d)] - c[(k, d)]).powi(2)).sum()
}

/// Squared-Euclidean k-means with k-means++ seeding; best of `restarts` runs
/// by inertia. Each run does Lloyd iterations and then single-point transfers
/// (Hartigan's rule) until no move lowers the inertia, which escapes Lloyd
/// fixed points where one point sits on the wrong side of a large cluster.
/// Labels are renumbered in order of first appearance.
pub fn kmeans(points: &DMatrix<f64>, k: usize, seed: u64, restarts: usize, max_iter: usize) -> Result<KMeansResult> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::input(format!("k-means needs 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..restarts.max(1) {
        let mut run = lloyd(points, k, &mut rng, max_iter);
        hartigan(points, &mut run, max_iter);
        if best.as_ref().map_or(true, |b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let mut best = best.expect("at least one restart");
    relabel_by_first_appearance(&mut best.labels);
    Ok(best)
}

fn plus_plus_init(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let (n, d) = points.shape();
    let mut centers = DMatrix::zeros(k, d);
    let first = rng.random_range(0..n);
    centers.row_mut(0).copy_from(&points.row(first));
    let mut dist: Vec<f64> = (0..n).map(|i| sq_dist(points, i, &centers, 0)).collect();
    for c in 1..k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, w) in dist.iter().enumerate() {
                acc += w;
                if acc > target {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(c).copy_from(&points.row(pick));
        for (i, di) in dist.iter_mut().enumerate() {
            *di = di.min(sq_dist(points, i, &centers, c));
        }
    }
    centers
}

fn lloyd(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng, max_iter: usize) -> KMeansResult {
    let (n, d) = points.shape();
    let mut centers = plus_plus_init(points, k, rng);
    let mut labels = vec![usize::MAX; n];
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        for i in 0..n {
            let mut best = (f64::INFINITY, 0);
            for c in 0..k {
                let dist = sq_dist(points, i, &centers, c);
                if dist < best.0 {
                    best = (dist, c);
                }
            }
            if labels[i] != best.1 {
                labels[i] = best.1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = DMatrix::<f64>::zeros(k, d);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for j in 0..d {
                sums[(labels[i], j)] += points[(i, j)];
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for j in 0..d {
                    centers[(c, j)] = sums[(c, j)] / counts[c] as f64;
                }
            } else {
                // Empty cluster: move it onto the point farthest from its centre.
                let far = (0..n)
                    .max_by(|&a, &b| {
                        sq_dist(points, a, &centers, labels[a]).total_cmp(&sq_dist(points, b, &centers, labels[b]))
                    })
                    .expect("n >= 1");
                centers.row_mut(c).copy_from(&points.row(far));
            }
        }
    }
    let inertia = (0..n).map(|i| sq_dist(points, i, &centers, labels[i])).sum();
    KMeansResult { labels, centers, inertia }
}

fn hartigan(points: &DMatrix<f64>, run: &mut KMeansResult, max_iter: usize) {
    let (n, d) = points.shape();
    let k = run.centers.nrows();
    let labels = &mut run.labels;
    let centers = &mut run.centers;
    let mut counts = vec![0usize; k];
    centers.fill(0.0);
    for i in 0..n {
        counts[labels[i]] += 1;
        for j in 0..d {
            centers[(labels[i], j)] += points[(i, j)];
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            let m = counts[c] as f64;
            centers.row_mut(c).iter_mut().for_each(|v| *v /= m);
        }
    }
    for _ in 0..max_iter.max(1) {
        let mut moved = false;
        for i in 0..n {
            let a = labels[i];
            if counts[a] <= 1 {
                continue;
            }
            let na = counts[a] as f64;
            let leave = na / (na - 1.0) * sq_dist(points, i, centers, a);
            let mut best = (leave, a);
            for b in (0..k).filter(|&b| b != a) {
                let nb = counts[b] as f64;
                let join = nb / (nb + 1.0) * sq_dist(points, i, centers, b);
                if join < best.0 - 1e-12 * (1.0 + leave) {
                    best = (join, b);
                }
            }
            let b = best.1;
            if b == a {
                continue;
            }
            let nb = counts[b] as f64;
            for j in 0..d {
                let x = points[(i, j)];
                centers[(a, j)] = (na * centers[(a, j)] - x) / (na - 1.0);
                centers[(b, j)] = (nb * centers[(b, j)] + x) / (nb + 1.0);
            }
            counts[a] -= 1;
            counts[b] += 1;
            labels[i] = b;
            moved = true;
        }
        if !moved {
            break;
        }
    }
    run.inertia = (0..n).map(|i| sq_dist(points, i, centers, labels[i])).sum();
}

fn relabel_by_first_appearance(labels: &mut [usize]) {
    let mut map = std::collections::HashMap::new();
    for l in labels.iter_mut() {
        let next = map.len();
        *l = *map.entry(*l).or_insert(next);
    }
}

/// Fraction of items whose predicted cluster matches the truth under the best
/// one-to-one matching of labels. Label sets of different sizes are padded.
pub fn proportion_correct(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::input(format!("{} predicted labels for {} items", predicted.len(), truth.len())));
    }
    if truth.is_empty() {
        return Err(Error::input("no items to score"));
    }
    let dense = |v: &[usize]| {
        let mut v = v.to_vec();
        relabel_by_first_appearance(&mut v);
        v
    };
    let (p, t) = (dense(predicted), dense(truth));
    let size = p.iter().chain(t.iter()).max().copied().unwrap_or(0) + 1;
    let mut confusion = DMatrix::<f64>::zeros(size, size);
    for (&a, &b) in p.iter().zip(&t) {
        confusion[(a, b)] += 1.0;
    }
    let max = confusion.max();
    let cost = confusion.map(|c| max - c);
    let assignment = hungarian(&cost);
    let matched: f64 = assignment.iter().enumerate().map(|(r, &c)| confusion[(r, c)]).sum();
    Ok(matched / truth.len() as f64)
}

/// Minimum-cost perfect assignment on a square cost matrix (Hungarian method,
/// shortest augmenting paths with potentials). Returns the column for each row.
pub fn hungarian(cost: &DMatrix<f64>) -> Vec<usize> {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "cost matrix must be square");
    // 1-based arrays with a sentinel column 0.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Duel, ItemTable};

    #[test]
    fn proportion_correct_cases() {
        assert_eq!(proportion_correct(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(proportion_correct(&[1, 1, 0, 0], &[0, 0, 1, 1]).unwrap(), 1.0);
        // {a,b | c,d} against {a,c | b,d}: both matchings give 2 of 4.
        assert_eq!(proportion_correct(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap(), 0.5);
        // Predicted uses fewer labels than the truth.
        assert_eq!(proportion_correct(&[0, 0, 0, 0], &[0, 0, 1, 2]).unwrap(), 0.5);
        assert!(proportion_correct(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn hungarian_matches_brute_force() {
        let cost = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0]);
        let a = hungarian(&cost);
        let total: f64 = a.iter().enumerate().map(|(r, &c)| cost[(r, c)]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn kmeans_is_deterministic_and_separates_blobs() {
        let pts = DMatrix::from_row_slice(6, 2, &[0.0, 0.0, 0.1, 0.0, 0.0, 0.1, 5.0, 5.0, 5.1, 5.0, 5.0, 5.1]);
        let a = kmeans(&pts, 2, 3, 10, 100).unwrap();
        let b = kmeans(&pts, 2, 3, 10, 100).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.labels, vec![0, 0, 0, 1, 1, 1]);
        assert!(kmeans(&pts, 7, 0, 1, 10).is_err());
    }

    #[test]
    fn single_cluster_of_a_rankable_matrix() {
        let f = [0.3, -1.0, 2.0, 0.5, 1.1, -0.2];
        let g = PreferenceMatrix::from_clusters(&[0; 6], &[f.to_vec()]).unwrap();
        let r = gpgp_clus(&g, 1, 0, &ClusterOptions::default()).unwrap();
        assert_eq!(r.assignment, vec![0; 6]);
        assert_eq!(r.singular_values.len(), 2);
        assert!(gpgp_clus(&g, 4, 0, &ClusterOptions::default()).is_err());
    }

    #[test]
    fn spectral_ranking_recovers_utility_order() {
        let f = [0.3, -1.0, 2.0, 0.5, 1.1, -0.2];
        let g = PreferenceMatrix::from_clusters(&[0; 6], &[f.to_vec()]).unwrap();
        assert_eq!(spectral_ranking(&g).unwrap(), vec![2, 4, 3, 0, 5, 1]);
    }

    fn items(n: usize) -> ItemTable {
        ItemTable::from_matrix(DMatrix::from_fn(n, 1, |i, _| i as f64)).unwrap()
    }

    #[test]
    fn svd_clus_degenerate_on_empty() {
        let ds = PreferenceDataset::new(items(4), vec![]).unwrap();
        assert!(matches!(svd_clus(&ds, 1, 0, &ClusterOptions::default()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn zero_threshold_is_plain_svd() {
        let duels = vec![Duel::won(0, 1), Duel::won(1, 2), Duel::won(3, 4), Duel::won(4, 5), Duel::won(0, 2)];
        let ds = PreferenceDataset::new(items(6), duels).unwrap();
        let opts = ClusterOptions::default();
        let a = svd_clus(&ds, 2, 9, &opts).unwrap();
        let b = pr_clus(&ds, 2, 0.0, 9, &opts, &FitOptions::default()).unwrap();
        assert_eq!(a.assignment, b.assignment);
        assert!(pr_clus(&ds, 2, 0.5, 9, &opts, &FitOptions::default()).is_err());
    }

    #[test]
    fn total_abstention_is_degenerate() {
        let duels = vec![Duel::won(0, 1), Duel::won(2, 3)];
        let ds = PreferenceDataset::new(items(4), duels).unwrap();
        let r = pr_clus(&ds, 1, 0.499, 0, &ClusterOptions::default(), &FitOptions::default());
        assert!(matches!(r, Err(Error::Degenerate(_))), "{r:?}");
    }
}
