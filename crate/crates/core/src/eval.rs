//! Splitting, metrics, significance tests and benchmark reports.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dataset::PreferenceDataset;
use crate::error::{Error, Result};
use crate::models::{fit, FitOptions, FittedPreferenceModel, ModelKind};

/// Seed number `counter` of the splitmix64 stream started at `base`.
///
/// Every derived seed in the crate goes through this function, so any single
/// trial or sweep cell can be re-run from `(base, counter)` alone.
pub fn derive_seed(base: u64, counter: u64) -> u64 {
    let mut z = base.wrapping_add(counter.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Number of training duels for `m` duels: `ceil(frac * m)`, ignoring
/// floating-point dust so that 0.7 * 10 gives 7.
pub fn train_size(m: usize, train_frac: f64) -> usize {
    let raw = train_frac * m as f64;
    let r = raw.round();
    if (raw - r).abs() < 1e-9 {
        r as usize
    } else {
        raw.ceil() as usize
    }
}

/// Random partition of the duels. Both halves keep all items and the
/// original duel order.
pub fn split(ds: &PreferenceDataset, train_frac: f64, seed: u64) -> Result<(PreferenceDataset, PreferenceDataset)> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::input(format!("train fraction must lie in (0, 1), got {train_frac}")));
    }
    let m = ds.duels().len();
    let k = train_size(m, train_frac);
    if k == 0 || k >= m {
        return Err(Error::input(format!("split of {m} duels at {train_frac} leaves an empty side")));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut in_train = vec![false; m];
    for &i in &order[..k] {
        in_train[i] = true;
    }
    let (mut train, mut test) = (Vec::with_capacity(k), Vec::with_capacity(m - k));
    for (d, t) in ds.duels().iter().zip(in_train) {
        if t {
            train.push(*d);
        } else {
            test.push(*d);
        }
    }
    Ok((ds.with_duels(train)?, ds.with_duels(test)?))
}

/// Fraction of test duels whose winner is predicted. At exactly ½ the lower
/// item index is taken as the predicted winner, which keeps the score
/// independent of how a duel is oriented.
pub fn accuracy(model: &FittedPreferenceModel, test: &PreferenceDataset) -> Result<f64> {
    if model.n_items() != test.n_items() {
        return Err(Error::input(format!(
            "model was fitted on {} items, test set has {}",
            model.n_items(),
            test.n_items()
        )));
    }
    if test.duels().is_empty() {
        return Err(Error::input("empty test set"));
    }
    let pairs: Vec<(usize, usize)> = test.duels().iter().map(|d| (d.first, d.second)).collect();
    let probs = model.predict_pairs(&pairs)?;
    let correct = test.duels().iter().zip(&probs).filter(|(d, &p)| predicted_winner(d.first, d.second, p) == d.winner()).count();
    Ok(correct as f64 / pairs.len() as f64)
}

/// Winner implied by `P(i beats j) = p`.
pub fn predicted_winner(i: usize, j: usize, p: f64) -> usize {
    if p > 0.5 {
        i
    } else if p < 0.5 {
        j
    } else {
        i.min(j)
    }
}

/// Undirected duel graph: pair multiplicities keyed by `(min, max)`.
fn pair_counts(ds: &PreferenceDataset) -> HashMap<(usize, usize), usize> {
    let mut counts = HashMap::new();
    for d in ds.duels() {
        let key = (d.first.min(d.second), d.first.max(d.second));
        *counts.entry(key).or_insert(0) += 1;
    }
    counts
}

fn check_graph_size(ds: &PreferenceDataset) -> Result<()> {
    if ds.n_items() < 3 {
        return Err(Error::input(format!("clustering coefficient needs at least 3 items, got {}", ds.n_items())));
    }
    Ok(())
}

/// Mean local clustering coefficient of the simple undirected graph with an
/// edge wherever at least one duel was played. Nodes of degree below 2 count
/// as 0.
pub fn avg_clustering_coefficient(ds: &PreferenceDataset) -> Result<f64> {
    check_graph_size(ds)?;
    let weights: HashMap<(usize, usize), f64> = pair_counts(ds).into_keys().map(|k| (k, 1.0)).collect();
    Ok(mean_local_clustering(ds.n_items(), &weights))
}

/// Weighted variant using duel multiplicities as edge weights: per node, the
/// mean over neighbour pairs of the geometric mean of the three
/// max-normalised triangle weights. Equals the unweighted value when every
/// pair duels at most once.
pub fn weighted_clustering_coefficient(ds: &PreferenceDataset) -> Result<f64> {
    check_graph_size(ds)?;
    let counts = pair_counts(ds);
    let max = counts.values().copied().max().unwrap_or(1) as f64;
    let weights: HashMap<(usize, usize), f64> = counts.into_iter().map(|(k, c)| (k, c as f64 / max)).collect();
    Ok(mean_local_clustering(ds.n_items(), &weights))
}

fn mean_local_clustering(n: usize, weights: &HashMap<(usize, usize), f64>) -> f64 {
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in weights.keys() {
        nbrs[a].push(b);
        nbrs[b].push(a);
    }
    let w = |a: usize, b: usize| weights.get(&(a.min(b), a.max(b))).copied();
    let mut total = 0.0;
    for (i, ns) in nbrs.iter_mut().enumerate() {
        ns.sort_unstable();
        let k = ns.len();
        if k < 2 {
            continue;
        }
        let mut s = 0.0;
        for (x, &a) in ns.iter().enumerate() {
            for &b in &ns[x + 1..] {
                if let Some(wab) = w(a, b) {
                    s += (w(i, a).unwrap() * w(i, b).unwrap() * wab).cbrt();
                }
            }
        }
        total += s / (k * (k - 1) / 2) as f64;
    }
    total / n as f64
}

/// Both clustering coefficients; the weighted one only when some pair
/// duelled more than once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringCoefficients {
    pub unweighted: f64,
    pub weighted: Option<f64>,
}

pub fn clustering_coefficients(ds: &PreferenceDataset) -> Result<ClusteringCoefficients> {
    let unweighted = avg_clustering_coefficient(ds)?;
    let repeated = pair_counts(ds).values().any(|&c| c > 1);
    let weighted = if repeated { Some(weighted_clustering_coefficient(ds)?) } else { None };
    Ok(ClusteringCoefficients { unweighted, weighted })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PValueMethod {
    /// Permutation distribution of the rank sum, computed exactly.
    Exact,
    /// Normal approximation with tie-corrected variance and continuity correction.
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSumTest {
    /// Mann–Whitney `U` of the first sample (ties count ½).
    pub u: f64,
    pub p_value: f64,
    pub significant: bool,
    pub method: PValueMethod,
}

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

/// Pooled sizes up to this use the exact permutation distribution.
pub const EXACT_RANK_SUM_LIMIT: usize = 60;

/// Two-sided Wilcoxon rank-sum (Mann–Whitney) test.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<RankSumTest> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::input("rank-sum test needs two nonempty samples"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::input("rank-sum test got NaN"));
    }
    let (n1, n2) = (a.len(), b.len());
    let ranks = midranks(a.iter().chain(b).copied().collect());
    let r1: f64 = ranks[..n1].iter().sum();
    let u = r1 - (n1 * (n1 + 1)) as f64 / 2.0;
    let (p_value, method) = if n1 + n2 <= EXACT_RANK_SUM_LIMIT {
        (exact_rank_sum_p(&ranks, n1, r1), PValueMethod::Exact)
    } else {
        (normal_rank_sum_p(&ranks, n1, n2, u), PValueMethod::Normal)
    };
    Ok(RankSumTest { u, p_value, significant: p_value < SIGNIFICANCE_LEVEL, method })
}

fn midranks(values: Vec<f64>) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&x, &y| values[x].total_cmp(&values[y]));
    let mut ranks = vec![0.0; values.len()];
    let mut s = 0;
    while s < idx.len() {
        let mut e = s;
        while e + 1 < idx.len() && values[idx[e + 1]] == values[idx[s]] {
            e += 1;
        }
        let r = (s + e) as f64 / 2.0 + 1.0;
        for &k in &idx[s..=e] {
            ranks[k] = r;
        }
        s = e + 1;
    }
    ranks
}

/// Exact two-sided p: probability under random relabelling that the first
/// sample's rank sum lies at least as far from its mean as observed.
/// Counts subsets by doubled rank sum (integral even with midranks).
fn exact_rank_sum_p(ranks: &[f64], n1: usize, r1: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    // counts[k][s]: subsets of size k with doubled rank sum s.
    let mut counts = vec![vec![0.0f64; max_sum + 1]; n1 + 1];
    counts[0][0] = 1.0;
    for &d in &doubled {
        for k in (1..=n1).rev() {
            let (lo, hi) = counts.split_at_mut(k);
            let prev = &lo[k - 1];
            let cur = &mut hi[0];
            for s in (d..=max_sum).rev() {
                cur[s] += prev[s - d];
            }
        }
    }
    let total: f64 = counts[n1].iter().sum();
    let mean2 = n1 as f64 * (ranks.len() + 1) as f64;
    let obs = (2.0 * r1 - mean2).abs();
    let extreme: f64 = counts[n1]
        .iter()
        .enumerate()
        .filter(|&(s, _)| (s as f64 - mean2).abs() >= obs - 1e-9)
        .map(|(_, c)| c)
        .sum();
    (extreme / total).min(1.0)
}

fn normal_rank_sum_p(ranks: &[f64], n1: usize, n2: usize, u: f64) -> f64 {
    let n = (n1 + n2) as f64;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut s = 0;
    while s < sorted.len() {
        let e = sorted[s..].iter().take_while(|&&r| r == sorted[s]).count();
        let t = e as f64;
        tie_term += t * t * t - t;
        s += e;
    }
    let (f1, f2) = (n1 as f64, n2 as f64);
    let var = f1 * f2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let dev = ((u - f1 * f2 / 2.0).abs() - 0.5).max(0.0);
    let z = dev / var.sqrt();
    let normal = Normal::standard();
    (2.0 * normal.sf(z)).min(1.0)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Benchmark settings, echoed into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub models: Vec<ModelKind>,
    pub trials: usize,
    pub train_frac: f64,
    pub base_seed: u64,
    pub fit: FitOptions,
}

impl BenchmarkConfig {
    pub fn new(models: Vec<ModelKind>, trials: usize, train_frac: f64, base_seed: u64) -> Self {
        BenchmarkConfig { models, trials, train_frac, base_seed, fit: FitOptions::default() }
    }

    /// Split seed of trial `t`.
    pub fn trial_seed(&self, t: usize) -> u64 {
        derive_seed(self.base_seed, t as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub accuracy: Option<f64>,
    pub lengthscale: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: ModelKind,
    pub trials: Vec<TrialRecord>,
    /// Over successful trials only.
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub successes: usize,
    /// Set when every trial failed.
    pub absent_reason: Option<String>,
    /// Rank-sum test of this model's accuracies against GPGP's.
    pub vs_gpgp: Option<RankSumTest>,
}

impl ModelSummary {
    pub fn accuracies(&self) -> Vec<f64> {
        self.trials.iter().filter_map(|t| t.accuracy).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n_items: usize,
    pub n_duels: usize,
    pub c_avg: Option<f64>,
    pub c_avg_weighted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: BenchmarkConfig,
    pub dataset: DatasetSummary,
    pub models: Vec<ModelSummary>,
}

impl ExperimentReport {
    pub fn model(&self, kind: ModelKind) -> Option<&ModelSummary> {
        self.models.iter().find(|m| m.model == kind)
    }

    /// One line: `mean ± std` per model (`*` marks a significant difference
    /// from GPGP), then `C_avg`.
    pub fn table_row(&self) -> String {
        let mut row = String::new();
        for m in &self.models {
            if !row.is_empty() {
                row.push_str(" | ");
            }
            match (m.mean, m.std) {
                (Some(mean), Some(std)) => {
                    let star = if m.vs_gpgp.as_ref().is_some_and(|t| t.significant) { "*" } else { "" };
                    let _ = write!(row, "{} {mean:.2} ± {std:.2}{star}", m.model);
                }
                _ => {
                    let _ = write!(row, "{} n/a", m.model);
                }
            }
        }
        match self.dataset.c_avg {
            Some(c) => {
                let _ = write!(row, " | C_avg {c:.2}");
            }
            None => row.push_str(" | C_avg n/a"),
        }
        if let Some(w) = self.dataset.c_avg_weighted {
            let _ = write!(row, " (weighted {w:.2})");
        }
        row
    }

    /// `trial,seed,model,accuracy,lengthscale,error`.
    pub fn trials_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["trial", "seed", "model", "accuracy", "lengthscale", "error"])?;
        for m in &self.models {
            for t in &m.trials {
                w.write_record([
                    t.trial.to_string(),
                    t.seed.to_string(),
                    m.model.to_string(),
                    t.accuracy.map(|a| a.to_string()).unwrap_or_default(),
                    t.lengthscale.map(|a| a.to_string()).unwrap_or_default(),
                    t.error.clone().unwrap_or_default(),
                ])?;
            }
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

/// Repeated random splits: fit every model on each training half and score
/// it on the test half. Trials run in parallel; the report does not depend
/// on scheduling.
pub fn run_benchmark(ds: &PreferenceDataset, config: &BenchmarkConfig) -> Result<ExperimentReport> {
    if config.trials == 0 {
        return Err(Error::input("need at least one trial"));
    }
    if config.models.is_empty() {
        return Err(Error::input("need at least one model"));
    }
    // Validate the split parameters once so that a bad fraction is a hard error.
    split(ds, config.train_frac, config.trial_seed(0))?;

    let per_trial: Vec<Vec<TrialRecord>> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let seed = config.trial_seed(t);
            let (train, test) = match split(ds, config.train_frac, seed) {
                Ok(s) => s,
                Err(e) => {
                    return config
                        .models
                        .iter()
                        .map(|_| TrialRecord { trial: t, seed, accuracy: None, lengthscale: None, error: Some(e.to_string()) })
                        .collect();
                }
            };
            config
                .models
                .iter()
                .map(|&kind| match fit(&train, kind, &config.fit).and_then(|m| Ok((accuracy(&m, &test)?, m.lengthscale()))) {
                    Ok((acc, ls)) => TrialRecord { trial: t, seed, accuracy: Some(acc), lengthscale: ls, error: None },
                    Err(e) => TrialRecord { trial: t, seed, accuracy: None, lengthscale: None, error: Some(e.to_string()) },
                })
                .collect()
        })
        .collect();

    let mut models: Vec<ModelSummary> = config
        .models
        .iter()
        .enumerate()
        .map(|(k, &kind)| {
            let trials: Vec<TrialRecord> = per_trial.iter().map(|row| row[k].clone()).collect();
            let accs: Vec<f64> = trials.iter().filter_map(|t| t.accuracy).collect();
            let (mean, std, absent_reason) = if accs.is_empty() {
                let reason = trials.iter().find_map(|t| t.error.clone()).unwrap_or_else(|| "no trials".into());
                (None, None, Some(reason))
            } else {
                let (m, s) = mean_std(&accs);
                (Some(m), Some(s), None)
            };
            ModelSummary { model: kind, successes: accs.len(), trials, mean, std, absent_reason, vs_gpgp: None }
        })
        .collect();

    if let Some(reference) = models.iter().find(|m| m.model == ModelKind::Gpgp).map(|m| m.accuracies()) {
        for m in models.iter_mut().filter(|m| m.model != ModelKind::Gpgp) {
            let accs = m.accuracies();
            if !reference.is_empty() && !accs.is_empty() {
                m.vs_gpgp = Some(wilcoxon_rank_sum(&accs, &reference)?);
            }
        }
    }

    let coeffs = clustering_coefficients(ds).ok();
    Ok(ExperimentReport {
        config: config.clone(),
        dataset: DatasetSummary {
            n_items: ds.n_items(),
            n_duels: ds.duels().len(),
            c_avg: coeffs.as_ref().map(|c| c.unweighted),
            c_avg_weighted: coeffs.and_then(|c| c.weighted),
        },
        models,
    })
}

/// Several datasets benchmarked separately (for example one per season) and
/// averaged: per model, the mean of per-dataset means and of per-dataset
/// standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub reports: Vec<ExperimentReport>,
    pub mean_accuracy: BTreeMap<ModelKind, f64>,
    pub mean_std: BTreeMap<ModelKind, f64>,
    pub mean_c_avg: Option<f64>,
}

pub fn aggregate_reports(reports: Vec<ExperimentReport>) -> AggregateReport {
    let mut sums: BTreeMap<ModelKind, (f64, f64, usize)> = BTreeMap::new();
    for r in &reports {
        for m in &r.models {
            if let (Some(mean), Some(std)) = (m.mean, m.std) {
                let e = sums.entry(m.model).or_insert((0.0, 0.0, 0));
                e.0 += mean;
                e.1 += std;
                e.2 += 1;
            }
        }
    }
    let cs: Vec<f64> = reports.iter().filter_map(|r| r.dataset.c_avg).collect();
    AggregateReport {
        mean_accuracy: sums.iter().map(|(k, v)| (*k, v.0 / v.2 as f64)).collect(),
        mean_std: sums.iter().map(|(k, v)| (*k, v.1 / v.2 as f64)).collect(),
        mean_c_avg: if cs.is_empty() { None } else { Some(cs.iter().sum::<f64>() / cs.len() as f64) },
        reports,
    }
}

/// One point of a figure: `series` (model or method) at `x` within `panel`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub panel: String,
    pub x: f64,
    pub series: String,
    pub mean: f64,
    pub std: f64,
    pub runs: usize,
    pub failures: usize,
}

impl PlotRow {
    /// Aggregate per-run values; `None` marks a failed run.
    pub fn from_runs(panel: impl Into<String>, x: f64, series: impl Into<String>, values: &[Option<f64>]) -> Self {
        let ok: Vec<f64> = values.iter().flatten().copied().collect();
        let (mean, std) = if ok.is_empty() { (f64::NAN, f64::NAN) } else { mean_std(&ok) };
        PlotRow {
            panel: panel.into(),
            x,
            series: series.into(),
            mean,
            std,
            runs: ok.len(),
            failures: values.len() - ok.len(),
        }
    }
}

/// `sparsity,series,mean,std,runs,failures`.
pub fn plot_csv(rows: &[PlotRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["sparsity", "series", "mean", "std", "runs", "failures"])?;
    for r in rows {
        w.write_record([
            r.x.to_string(),
            r.series.clone(),
            r.mean.to_string(),
            r.std.to_string(),
            r.runs.to_string(),
            r.failures.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}
