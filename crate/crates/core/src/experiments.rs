//! Simulation sweeps over latent-state count, sparsity and repeated runs.
//!
//! Run `r` of a sweep simulates from seed `derive_seed(base_seed, r)` for
//! every `(L, sparsity)` cell, so cells along the sparsity axis share item
//! covariates and utilities and differ only in which pairs duel. Within a
//! run, the split uses `derive_seed(instance_seed, 0)` and k-means uses
//! `derive_seed(instance_seed, 1)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{gpgp_clus_dataset, pr_clus, proportion_correct, svd_clus, ClusterMethod, ClusterOptions};
use crate::error::{Error, Result};
use crate::eval::{accuracy, derive_seed, split, PlotRow};
use crate::models::{fit, FitOptions, ModelKind};
use crate::synthetic::{generate, SimulationMode, SyntheticSpec};

pub const DEFAULT_SPARSITIES: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];

/// Default abstention threshold for PR-CLUS.
pub const DEFAULT_TAU: f64 = 0.1;

/// Series evaluated in a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "series", rename_all = "snake_case")]
pub enum SweepTarget {
    /// Held-out accuracy of preference models on cyclic simulations.
    Accuracy(Vec<ModelKind>),
    /// Proportion of correctly clustered items on clustered simulations.
    Clustering(Vec<ClusterMethod>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub target: SweepTarget,
    pub latent_states: Vec<usize>,
    pub sparsities: Vec<f64>,
    pub runs: usize,
    pub base_seed: u64,
    pub n: usize,
    pub p: usize,
    pub train_frac: f64,
    pub tau: f64,
    pub fit: FitOptions,
    pub cluster: ClusterOptions,
}

impl SweepConfig {
    /// Accuracy sweep with n = 30, p = 5 and a 70/30 split.
    pub fn accuracy(models: Vec<ModelKind>, latent_states: Vec<usize>, sparsities: Vec<f64>, runs: usize, base_seed: u64) -> Self {
        SweepConfig {
            target: SweepTarget::Accuracy(models),
            latent_states,
            sparsities,
            runs,
            base_seed,
            n: 30,
            p: 5,
            train_frac: 0.7,
            tau: DEFAULT_TAU,
            fit: FitOptions::default(),
            cluster: ClusterOptions::default(),
        }
    }

    /// Clustering sweep with n = 30, p = 5.
    pub fn clustering(methods: Vec<ClusterMethod>, latent_states: Vec<usize>, sparsities: Vec<f64>, runs: usize, base_seed: u64) -> Self {
        SweepConfig { target: SweepTarget::Clustering(methods), ..Self::accuracy(Vec::new(), latent_states, sparsities, runs, base_seed) }
    }

    pub fn cell_count(&self) -> usize {
        self.latent_states.len() * self.sparsities.len() * self.runs
    }

    pub fn mode(&self) -> SimulationMode {
        match self.target {
            SweepTarget::Accuracy(_) => SimulationMode::Cyclic,
            SweepTarget::Clustering(_) => SimulationMode::Clustered,
        }
    }

    pub fn series_names(&self) -> Vec<String> {
        match &self.target {
            SweepTarget::Accuracy(m) => m.iter().map(|k| k.to_string()).collect(),
            SweepTarget::Clustering(m) => m.iter().map(|k| k.to_string()).collect(),
        }
    }

    pub fn run_seed(&self, run: usize) -> u64 {
        derive_seed(self.base_seed, run as u64)
    }

    pub fn spec(&self, latent_states: usize, sparsity: f64, run: usize) -> SyntheticSpec {
        SyntheticSpec::new(self.mode(), self.n, self.p, latent_states, sparsity, self.run_seed(run))
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 || self.latent_states.is_empty() || self.sparsities.is_empty() {
            return Err(Error::input("sweep grid is empty"));
        }
        if self.series_names().is_empty() {
            return Err(Error::input("sweep has no models or methods"));
        }
        for &l in &self.latent_states {
            for &s in &self.sparsities {
                self.spec(l, s, 0).validate()?;
            }
        }
        Ok(())
    }
}

/// Result of one series in one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    #[serde(rename = "L")]
    pub latent_states: usize,
    pub sparsity: f64,
    pub run: usize,
    pub seed: u64,
    pub series: String,
    pub value: Option<f64>,
    pub error: Option<String>,
}

fn record(spec: &SyntheticSpec, run: usize, series: String, r: Result<f64>) -> CellRecord {
    let (value, error) = match r {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.to_string())),
    };
    CellRecord { latent_states: spec.latent_states, sparsity: spec.sparsity, run, seed: spec.seed, series, value, error }
}

/// Simulate, split, fit every model and score it on the held-out duels.
pub fn accuracy_cell(spec: &SyntheticSpec, models: &[ModelKind], train_frac: f64, fit_opts: &FitOptions) -> Result<Vec<(ModelKind, Result<f64>)>> {
    let inst = generate(spec)?;
    let (train, test) = split(&inst.dataset, train_frac, derive_seed(spec.seed, 0))?;
    Ok(models
        .iter()
        .map(|&kind| (kind, fit(&train, kind, fit_opts).and_then(|m| accuracy(&m, &test))))
        .collect())
}

/// Simulate a clustered instance and score each method against the latent states.
pub fn clustering_cell(
    spec: &SyntheticSpec,
    methods: &[ClusterMethod],
    tau: f64,
    opts: &ClusterOptions,
    fit_opts: &FitOptions,
) -> Result<Vec<(ClusterMethod, Result<f64>)>> {
    let inst = generate(spec)?;
    let ds = &inst.dataset;
    let l = spec.latent_states;
    let seed = derive_seed(spec.seed, 1);
    Ok(methods
        .iter()
        .map(|&m| {
            let r = match m {
                ClusterMethod::GpgpClus => gpgp_clus_dataset(ds, l, seed, opts, fit_opts),
                ClusterMethod::PrClus => pr_clus(ds, l, tau, seed, opts, fit_opts),
                ClusterMethod::SvdClus => svd_clus(ds, l, seed, opts),
            };
            (m, r.and_then(|c| proportion_correct(&c.assignment, &inst.states)))
        })
        .collect())
}

/// Run one cell, returning a record per series.
pub fn run_cell(config: &SweepConfig, latent_states: usize, sparsity: f64, run: usize) -> Vec<CellRecord> {
    let spec = config.spec(latent_states, sparsity, run);
    let names = config.series_names();
    let results: Result<Vec<Result<f64>>> = match &config.target {
        SweepTarget::Accuracy(models) => {
            accuracy_cell(&spec, models, config.train_frac, &config.fit).map(|v| v.into_iter().map(|(_, r)| r).collect())
        }
        SweepTarget::Clustering(methods) => clustering_cell(&spec, methods, config.tau, &config.cluster, &config.fit)
            .map(|v| v.into_iter().map(|(_, r)| r).collect()),
    };
    match results {
        Ok(rs) => names.into_iter().zip(rs).map(|(s, r)| record(&spec, run, s, r)).collect(),
        Err(e) => {
            let msg = e.to_string();
            names.into_iter().map(|s| record(&spec, run, s, Err(Error::Input(msg.clone())))).collect()
        }
    }
}

/// Every cell of the grid, in `(L, sparsity, run)` order. Cells run in parallel.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<CellRecord>> {
    config.validate()?;
    let cells: Vec<(usize, f64, usize)> = config
        .latent_states
        .iter()
        .flat_map(|&l| config.sparsities.iter().flat_map(move |&s| (0..config.runs).map(move |r| (l, s, r))))
        .collect();
    Ok(cells.into_par_iter().flat_map_iter(|(l, s, r)| run_cell(config, l, s, r)).collect())
}

/// Mean and standard deviation per `(L, sparsity, series)`; panels are named `L<value>`.
pub fn summarize(config: &SweepConfig, records: &[CellRecord]) -> Vec<PlotRow> {
    let mut rows = Vec::new();
    for &l in &config.latent_states {
        for &s in &config.sparsities {
            for name in config.series_names() {
                let values: Vec<Option<f64>> = records
                    .iter()
                    .filter(|r| r.latent_states == l && r.sparsity == s && r.series == name)
                    .map(|r| r.value)
                    .collect();
                rows.push(PlotRow::from_runs(format!("L{l}"), s, name, &values));
            }
        }
    }
    rows
}

/// `L,sparsity,run,seed,series,value,error`.
pub fn records_csv(records: &[CellRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["L", "sparsity", "run", "seed", "series", "value", "error"])?;
    for r in records {
        w.write_record([
            r.latent_states.to_string(),
            r.sparsity.to_string(),
            r.run.to_string(),
            r.seed.to_string(),
            r.series.clone(),
            r.value.map(|v| v.to_string()).unwrap_or_default(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Parse `start:stop:count` (inclusive, evenly spaced) or a comma list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| Error::input(format!("not a number: '{t}'")));
    if parts.len() == 3 {
        let (a, b) = (num(parts[0])?, num(parts[1])?);
        let count: usize = parts[2].trim().parse().map_err(|_| Error::input(format!("bad count in '{s}'")))?;
        return match count {
            0 => Err(Error::input(format!("empty grid '{s}'"))),
            1 => Ok(vec![a]),
            _ => Ok((0..count).map(|k| a + (b - a) * k as f64 / (count - 1) as f64).map(|v| (v * 1e12).round() / 1e12).collect()),
        };
    }
    if parts.len() != 1 {
        return Err(Error::input(format!("grid must be 'start:stop:count' or a comma list, got '{s}'")));
    }
    s.split(',').map(num).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0.2:1.0:5").unwrap(), vec![0.2, 0.4, 0.6, 0.8, 1.0]);
        assert_eq!(parse_grid("0.5, 1").unwrap(), vec![0.5, 1.0]);
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("0:1:0").is_err());
    }

    #[test]
    fn small_accuracy_sweep_is_deterministic() {
        let mut c = SweepConfig::accuracy(vec![ModelKind::Pgp, ModelKind::PairLogreg], vec![1], vec![0.6], 2, 5);
        c.n = 12;
        let a = run_sweep(&c).unwrap();
        assert_eq!(a.len(), 4);
        assert!(a.iter().all(|r| r.value.is_some()));
        assert_eq!(a, run_sweep(&c).unwrap());
        let rows = summarize(&c, &a);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].runs, 2);
    }

    #[test]
    fn cells_rerun_in_isolation() {
        let mut c = SweepConfig::clustering(vec![ClusterMethod::SvdClus], vec![2], vec![0.5, 1.0], 3, 9);
        c.n = 12;
        let all = run_sweep(&c).unwrap();
        let one = run_cell(&c, 2, 1.0, 2);
        assert_eq!(all.iter().find(|r| r.sparsity == 1.0 && r.run == 2).unwrap(), &one[0]);
    }
}
