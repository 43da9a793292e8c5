//! Base kernels on item covariates and the two kernels between edges
//! (ordered item pairs) of a comparison graph.
//!
//! For a base kernel `k` and edges `e = (u, u')`, `e' = (v, v')`:
//!
//! * the preference kernel is the covariance of utility differences,
//!   `k(u,v) + k(u',v') - k(u,v') - k(u',v)`;
//! * the generalised preferential kernel is the 2x2 determinant
//!   `k(u,v) k(u',v') - k(u,v') k(u',v)`, which is skew-symmetric in each
//!   argument and admits preference functions that no utility can represent.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::ItemTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Rbf,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    family: KernelFamily,
    lengthscale: f64,
}

impl KernelConfig {
    /// `exp(-|x - x'|^2 / (2 γ^2))`.
    pub fn rbf(lengthscale: f64) -> Result<Self> {
        if !(lengthscale > 0.0 && lengthscale.is_finite()) {
            return Err(Error::input(format!("RBF lengthscale must be positive, got {lengthscale}")));
        }
        Ok(KernelConfig { family: KernelFamily::Rbf, lengthscale })
    }

    pub fn linear() -> Self {
        KernelConfig { family: KernelFamily::Linear, lengthscale: 1.0 }
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    /// Meaningless for [`KernelFamily::Linear`].
    pub fn lengthscale(&self) -> f64 {
        self.lengthscale
    }

    #[inline]
    fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.family {
            KernelFamily::Rbf => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (2.0 * self.lengthscale * self.lengthscale)).exp()
            }
            KernelFamily::Linear => x.iter().zip(y).map(|(a, b)| a * b).sum(),
        }
    }
}

/// An ordered pair of item indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgePair {
    pub first: usize,
    pub second: usize,
}

impl EdgePair {
    pub fn new(first: usize, second: usize) -> Self {
        EdgePair { first, second }
    }

    pub fn swapped(self) -> Self {
        EdgePair { first: self.second, second: self.first }
    }

    pub fn is_degenerate(&self) -> bool {
        self.first == self.second
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeKernel {
    /// Covariance of utility differences (rankable preference functions only).
    Preference,
    /// Determinant kernel over general skew-symmetric preference functions.
    Generalised,
}

impl EdgeKernel {
    /// Evaluate from a precomputed item-by-item base Gram.
    #[inline]
    pub fn eval_with(&self, base: &DMatrix<f64>, e: EdgePair, f: EdgePair) -> f64 {
        let (u, up, v, vp) = (e.first, e.second, f.first, f.second);
        match self {
            EdgeKernel::Preference => base[(u, v)] + base[(up, vp)] - base[(u, vp)] - base[(up, v)],
            EdgeKernel::Generalised => base[(u, v)] * base[(up, vp)] - base[(u, vp)] * base[(up, v)],
        }
    }
}

pub fn base_kernel(x: &[f64], y: &[f64], cfg: &KernelConfig) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::input(format!("covariate dimensions differ: {} vs {}", x.len(), y.len())));
    }
    Ok(cfg.eval_unchecked(x, y))
}

fn check_edges(items: &ItemTable, edges: &[EdgePair]) -> Result<()> {
    let n = items.len();
    for e in edges {
        if e.first >= n || e.second >= n {
            return Err(Error::input(format!(
                "edge ({}, {}) out of range for {n} items",
                e.first, e.second
            )));
        }
    }
    Ok(())
}

fn edge_value(kind: EdgeKernel, e: EdgePair, f: EdgePair, items: &ItemTable, cfg: &KernelConfig) -> Result<f64> {
    check_edges(items, &[e, f])?;
    let x = items.covariates();
    let row = |i: usize| -> Vec<f64> { x.row(i).iter().copied().collect() };
    let (u, up, v, vp) = (row(e.first), row(e.second), row(f.first), row(f.second));
    let k = |a: &[f64], b: &[f64]| cfg.eval_unchecked(a, b);
    Ok(match kind {
        EdgeKernel::Preference => k(&u, &v) + k(&up, &vp) - k(&u, &vp) - k(&up, &v),
        EdgeKernel::Generalised => k(&u, &v) * k(&up, &vp) - k(&u, &vp) * k(&up, &v),
    })
}

/// Preference kernel between two edges.
pub fn preference_kernel(e: EdgePair, f: EdgePair, items: &ItemTable, cfg: &KernelConfig) -> Result<f64> {
    edge_value(EdgeKernel::Preference, e, f, items, cfg)
}

/// Generalised preferential kernel between two edges.
pub fn generalised_kernel(e: EdgePair, f: EdgePair, items: &ItemTable, cfg: &KernelConfig) -> Result<f64> {
    edge_value(EdgeKernel::Generalised, e, f, items, cfg)
}

/// Base kernel between every pair of rows of `x`.
pub fn item_gram(x: &DMatrix<f64>, cfg: &KernelConfig) -> DMatrix<f64> {
    let n = x.nrows();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| x.row(i).iter().copied().collect()).collect();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = cfg.eval_unchecked(&rows[i], &rows[j]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// Edge Gram from a precomputed base Gram.
pub fn edge_gram_from_base(base: &DMatrix<f64>, edges: &[EdgePair], kind: EdgeKernel) -> DMatrix<f64> {
    let m = edges.len();
    let mut g = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in 0..=a {
            let v = kind.eval_with(base, edges[a], edges[b]);
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    g
}

/// `m x m` Gram of `kind` over `edges`. Symmetric and PSD up to rounding.
pub fn edge_gram(edges: &[EdgePair], items: &ItemTable, cfg: &KernelConfig, kind: EdgeKernel) -> Result<DMatrix<f64>> {
    if edges.is_empty() {
        return Err(Error::input("edge Gram needs at least one edge"));
    }
    check_edges(items, edges)?;
    let base = item_gram(items.covariates(), cfg);
    Ok(edge_gram_from_base(&base, edges, kind))
}

/// Adds `rel * mean(diag)` to the diagonal; returns the nugget used.
pub fn add_jitter(gram: &mut DMatrix<f64>, rel: f64) -> f64 {
    let m = gram.nrows();
    if m == 0 {
        return 0.0;
    }
    let mean_diag = gram.diagonal().sum() / m as f64;
    let nugget = rel * mean_diag.max(f64::MIN_POSITIVE.sqrt());
    for i in 0..m {
        gram[(i, i)] += nugget;
    }
    nugget
}

/// Median Euclidean distance over all unordered row pairs of `x`.
pub fn median_pairwise_distance(x: &DMatrix<f64>) -> Option<f64> {
    let n = x.nrows();
    let mut d = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            d.push((x.row(i) - x.row(j)).norm());
        }
    }
    if d.is_empty() {
        return None;
    }
    d.sort_by(f64::total_cmp);
    let mid = d.len() / 2;
    Some(if d.len() % 2 == 1 { d[mid] } else { 0.5 * (d[mid - 1] + d[mid]) })
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn items(rows: &[&[f64]]) -> ItemTable {
        let p = rows[0].len();
        let data: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        ItemTable::from_matrix(DMatrix::from_row_slice(rows.len(), p, &data)).unwrap()
    }

    #[test]
    fn base_kernel_values() {
        let rbf = KernelConfig::rbf(1.0).unwrap();
        assert_eq!(base_kernel(&[0.3, -1.0], &[0.3, -1.0], &rbf).unwrap(), 1.0);
        assert_abs_diff_eq!(base_kernel(&[0.0], &[2.0], &rbf).unwrap(), (-2.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(base_kernel(&[0.0], &[2.0], &rbf).unwrap(), 0.135335, epsilon = 1e-6);
        let lin = KernelConfig::linear();
        assert_eq!(base_kernel(&[1.0, 0.0], &[0.0, 1.0], &lin).unwrap(), 0.0);
        assert!(base_kernel(&[1.0], &[1.0, 2.0], &lin).is_err());
    }

    #[test]
    fn rejects_bad_lengthscale() {
        assert!(KernelConfig::rbf(0.0).is_err());
        assert!(KernelConfig::rbf(-1.0).is_err());
        assert!(KernelConfig::rbf(f64::NAN).is_err());
    }

    #[test]
    fn preference_kernel_self_edge() {
        let t = items(&[&[0.0, 0.0], &[1.0, 2.0]]);
        let cfg = KernelConfig::rbf(1.3).unwrap();
        let e = EdgePair::new(0, 1);
        let expected = 2.0 - 2.0 * (-5.0 / (2.0 * 1.3 * 1.3f64)).exp();
        assert_abs_diff_eq!(preference_kernel(e, e, &t, &cfg).unwrap(), expected, epsilon = 1e-14);
        assert_abs_diff_eq!(preference_kernel(EdgePair::new(1, 1), e, &t, &cfg).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn generalised_kernel_closed_forms() {
        let t = items(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let lin = KernelConfig::linear();
        let e = EdgePair::new(0, 1);
        assert_eq!(generalised_kernel(e, e, &t, &lin).unwrap(), 1.0);
        assert_eq!(generalised_kernel(e.swapped(), e, &t, &lin).unwrap(), -1.0);
        assert_eq!(generalised_kernel(EdgePair::new(0, 0), e, &t, &lin).unwrap(), 0.0);
        assert!(generalised_kernel(EdgePair::new(0, 2), e, &t, &lin).is_err());
    }

    #[test]
    fn single_edge_gram() {
        let t = items(&[&[0.0], &[1.5]]);
        let cfg = KernelConfig::rbf(1.0).unwrap();
        let g = edge_gram(&[EdgePair::new(0, 1)], &t, &cfg, EdgeKernel::Generalised).unwrap();
        assert_abs_diff_eq!(g[(0, 0)], 1.0 - (-(1.5f64 * 1.5)).exp(), epsilon = 1e-15);
        assert!(edge_gram(&[], &t, &cfg, EdgeKernel::Generalised).is_err());
    }

    #[test]
    fn duplicated_edge_duplicates_rows() {
        let t = items(&[&[0.0, 1.0], &[1.0, -1.0], &[2.0, 0.5]]);
        let cfg = KernelConfig::rbf(0.8).unwrap();
        let edges = [EdgePair::new(0, 1), EdgePair::new(1, 2), EdgePair::new(0, 1)];
        let g = edge_gram(&edges, &t, &cfg, EdgeKernel::Generalised).unwrap();
        assert_eq!(g.row(0), g.row(2));
        let sv = g.clone().svd(false, false).singular_values;
        let rank = sv.iter().filter(|s| **s > 1e-10 * sv.max()).count();
        assert_eq!(rank, 2);
    }

    #[test]
    fn jitter_scales_with_diagonal() {
        let mut g = DMatrix::from_diagonal_element(3, 3, 2.0);
        let nugget = add_jitter(&mut g, 1e-6);
        assert_abs_diff_eq!(nugget, 2e-6, epsilon = 1e-18);
        assert_abs_diff_eq!(g[(1, 1)], 2.0 + 2e-6, epsilon = 1e-15);
    }

    #[test]
    fn median_and_grid() {
        let x = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 3.0]);
        assert_eq!(median_pairwise_distance(&x), Some(2.0));
        let g = log_grid(0.1, 10.0, 3);
        assert_abs_diff_eq!(g[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g[2], 10.0, epsilon = 1e-12);
    }
}
