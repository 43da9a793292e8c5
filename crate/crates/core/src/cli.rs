//! Command-line front end.
//!
//! Every run writes `config.json` into its output directory; `gpgp rerun
//! config.json -o DIR` repeats the run and produces identical files. Exit
//! codes: 0 success, 1 runtime or data error, 2 usage error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::clustering::{gpgp_clus_dataset, pr_clus, proportion_correct, svd_clus, ClusterMethod, ClusterOptions};
use crate::error::{Error, Result};
use crate::eval::{aggregate_reports, run_benchmark, AggregateReport, BenchmarkConfig, ExperimentReport, PlotRow};
use crate::experiments::{parse_grid, records_csv, run_sweep, summarize, SweepConfig, DEFAULT_TAU};
use crate::io::{load_dataset, load_truth, to_json_bytes, write_atomic, write_instance};
use crate::kernels::KernelFamily;
use crate::models::{FitOptions, LengthscaleGrid, ModelKind};
use crate::synthetic::{generate, SimulationMode, SyntheticSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Sweeps larger than this need `--force`.
pub const MAX_SWEEP_CELLS: usize = 10_000;

#[derive(Debug, Parser)]
#[command(name = "gpgp", version, about = "Preference learning with generalised preferential Gaussian processes")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a comparison graph and write items, duels and ground truth.
    Simulate(SimulateArgs),
    /// Repeated train/test splits of a dataset, scoring each model.
    Benchmark(BenchmarkArgs),
    /// Recover clusters of comparable items.
    Cluster(ClusterArgs),
    /// Accuracy sweep over latent-state counts and sparsity levels.
    Sweep(SweepArgs),
    /// Repeat a run from its config.json.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Cyclic,
    Clustered,
}

impl From<ModeArg> for SimulationMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Cyclic => SimulationMode::Cyclic,
            ModeArg::Clustered => SimulationMode::Clustered,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KernelArg {
    Rbf,
    Linear,
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Output directory.
    #[arg(short = 'o', long = "out", env = "GPGP_OUT_DIR", default_value = "gpgp-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[arg(long, value_enum, default_value = "rbf")]
    pub kernel: KernelArg,
    /// Smallest lengthscale, as a multiple of the median pairwise distance.
    #[arg(long, default_value_t = 0.1)]
    pub grid_lo: f64,
    /// Largest lengthscale, as a multiple of the median pairwise distance.
    #[arg(long, default_value_t = 10.0)]
    pub grid_hi: f64,
    #[arg(long, default_value_t = 10)]
    pub grid_count: usize,
    /// Absolute lengthscales; overrides the relative grid.
    #[arg(long, value_delimiter = ',')]
    pub lengthscale: Vec<f64>,
}

impl FitArgs {
    fn options(&self) -> FitOptions {
        let grid = if self.lengthscale.is_empty() {
            LengthscaleGrid::RelativeToMedian { lo: self.grid_lo, hi: self.grid_hi, count: self.grid_count }
        } else {
            LengthscaleGrid::Fixed(self.lengthscale.clone())
        };
        let family = match self.kernel {
            KernelArg::Rbf => KernelFamily::Rbf,
            KernelArg::Linear => KernelFamily::Linear,
        };
        FitOptions { family, grid, ..FitOptions::default() }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "cyclic")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 30)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub p: usize,
    /// Number of latent states.
    #[arg(long = "L", default_value_t = 1)]
    pub latent_states: usize,
    /// Probability that a pair duels.
    #[arg(long, default_value_t = 1.0)]
    pub sparsity: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BenchmarkArgs {
    /// Items CSV; repeat together with --duels to benchmark several datasets and average.
    #[arg(long, required = true, action = clap::ArgAction::Append)]
    pub items: Vec<PathBuf>,
    #[arg(long, required = true, action = clap::ArgAction::Append)]
    pub duels: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "gpgp,pgp,pair-gp,pair-logreg")]
    pub models: Vec<ModelKind>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.7)]
    pub train_frac: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub fit: FitArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepAxis {
    Sparsity,
}

#[derive(Debug, Clone, Args)]
pub struct ClusterArgs {
    #[arg(long, required_unless_present = "sweep")]
    pub items: Option<PathBuf>,
    #[arg(long, required_unless_present = "sweep")]
    pub duels: Option<PathBuf>,
    /// Number of clusters; in sweep mode a comma list.
    #[arg(long = "L", required = true, value_delimiter = ',')]
    pub latent_states: Vec<usize>,
    #[arg(long = "method", value_delimiter = ',', default_value = "gpgp-clus,pr-clus,svd-clus")]
    pub methods: Vec<ClusterMethod>,
    /// PR-CLUS abstention threshold.
    #[arg(long, default_value_t = DEFAULT_TAU)]
    pub tau: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Ground-truth JSON; enables proportion-correct scores.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Scale singular vectors by the square root of their singular values.
    #[arg(long)]
    pub scale_by_sqrt_sigma: bool,
    /// Run on simulated clustered instances instead of a dataset.
    #[arg(long, value_enum)]
    pub sweep: Option<SweepAxis>,
    /// Sweep grid: `start:stop:count` or a comma list.
    #[arg(long, default_value = "0.2:1.0:5")]
    pub sparsity: String,
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
    #[arg(long, default_value_t = 30)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub p: usize,
    #[arg(long)]
    pub force: bool,
    #[command(flatten)]
    pub fit: FitArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long = "L", value_delimiter = ',', default_value = "1,2,5")]
    pub latent_states: Vec<usize>,
    /// `start:stop:count` or a comma list.
    #[arg(long, default_value = "0.2:1.0:5")]
    pub sparsity: String,
    /// Simulated graphs per cell.
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
    #[arg(long, value_delimiter = ',', default_value = "gpgp,pgp,pair-gp,pair-logreg")]
    pub models: Vec<ModelKind>,
    #[arg(long, default_value_t = 30)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub p: usize,
    #[arg(long, default_value_t = 0.7)]
    pub train_frac: f64,
    /// Base seed for the per-run seeds.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Allow more than 10^4 cells.
    #[arg(long)]
    pub force: bool,
    #[command(flatten)]
    pub fit: FitArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RerunArgs {
    pub config: PathBuf,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetPaths {
    pub items: PathBuf,
    pub duels: PathBuf,
}

/// Everything needed to repeat a run. Output locations are deliberately not
/// part of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunConfig {
    Simulate {
        spec: SyntheticSpec,
    },
    Benchmark {
        datasets: Vec<DatasetPaths>,
        benchmark: BenchmarkConfig,
    },
    Cluster {
        dataset: DatasetPaths,
        truth: Option<PathBuf>,
        methods: Vec<ClusterMethod>,
        #[serde(rename = "L")]
        latent_states: usize,
        tau: f64,
        seed: u64,
        cluster: ClusterOptions,
        fit: FitOptions,
    },
    ClusterSweep {
        sweep: SweepConfig,
        force: bool,
    },
    Sweep {
        sweep: SweepConfig,
        force: bool,
    },
}

/// Checks that make a config unusable regardless of the data (exit code 2).
pub fn validate(config: &RunConfig) -> Result<()> {
    let check_fit = |f: &FitOptions| -> Result<()> {
        match &f.grid {
            LengthscaleGrid::RelativeToMedian { lo, hi, count } => {
                if !(*lo > 0.0 && *hi >= *lo && *count >= 1) {
                    return Err(Error::input("lengthscale grid needs 0 < lo <= hi and count >= 1"));
                }
            }
            LengthscaleGrid::Fixed(v) => {
                if v.is_empty() || v.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
                    return Err(Error::input("lengthscales must be positive"));
                }
            }
        }
        Ok(())
    };
    let check_sweep = |s: &SweepConfig, force: bool| -> Result<()> {
        s.validate()?;
        check_fit(&s.fit)?;
        if !(s.train_frac > 0.0 && s.train_frac < 1.0) {
            return Err(Error::input("train fraction must lie in (0, 1)"));
        }
        if s.cell_count() > MAX_SWEEP_CELLS && !force {
            return Err(Error::input(format!(
                "sweep has {} cells (limit {MAX_SWEEP_CELLS}); pass --force to run it anyway",
                s.cell_count()
            )));
        }
        Ok(())
    };
    match config {
        RunConfig::Simulate { spec } => spec.validate(),
        RunConfig::Benchmark { datasets, benchmark } => {
            if datasets.is_empty() {
                return Err(Error::input("no dataset given"));
            }
            if benchmark.trials == 0 {
                return Err(Error::input("need at least one trial"));
            }
            if benchmark.models.is_empty() {
                return Err(Error::input("need at least one model"));
            }
            if !(benchmark.train_frac > 0.0 && benchmark.train_frac < 1.0) {
                return Err(Error::input("train fraction must lie in (0, 1)"));
            }
            check_fit(&benchmark.fit)
        }
        RunConfig::Cluster { methods, latent_states, tau, fit, .. } => {
            if *latent_states == 0 {
                return Err(Error::input("need at least one cluster"));
            }
            if methods.is_empty() {
                return Err(Error::input("need at least one method"));
            }
            if !(0.0..0.5).contains(tau) {
                return Err(Error::input("tau must lie in [0, 0.5)"));
            }
            check_fit(fit)
        }
        RunConfig::ClusterSweep { sweep, force } | RunConfig::Sweep { sweep, force } => {
            if !(0.0..0.5).contains(&sweep.tau) {
                return Err(Error::input("tau must lie in [0, 0.5)"));
            }
            check_sweep(sweep, *force)
        }
    }
}

fn build_config(command: Command) -> Result<RunConfig> {
    Ok(match command {
        Command::Simulate(a) => RunConfig::Simulate {
            spec: SyntheticSpec::new(a.mode.into(), a.n, a.p, a.latent_states, a.sparsity, a.seed),
        },
        Command::Benchmark(a) => {
            if a.items.len() != a.duels.len() {
                return Err(Error::input(format!("{} --items but {} --duels", a.items.len(), a.duels.len())));
            }
            let datasets = a.items.into_iter().zip(a.duels).map(|(items, duels)| DatasetPaths { items, duels }).collect();
            let mut benchmark = BenchmarkConfig::new(a.models, a.trials, a.train_frac, a.seed);
            benchmark.fit = a.fit.options();
            RunConfig::Benchmark { datasets, benchmark }
        }
        Command::Cluster(a) => {
            let cluster = ClusterOptions { scale_by_sqrt_sigma: a.scale_by_sqrt_sigma, ..ClusterOptions::default() };
            if a.sweep.is_some() {
                let mut sweep = SweepConfig::clustering(a.methods, a.latent_states, parse_grid(&a.sparsity)?, a.seeds, a.seed);
                sweep.n = a.n;
                sweep.p = a.p;
                sweep.tau = a.tau;
                sweep.fit = a.fit.options();
                sweep.cluster = cluster;
                RunConfig::ClusterSweep { sweep, force: a.force }
            } else {
                let [latent_states] = a.latent_states[..] else {
                    return Err(Error::input("give a single --L without --sweep"));
                };
                RunConfig::Cluster {
                    dataset: DatasetPaths { items: a.items.expect("required"), duels: a.duels.expect("required") },
                    truth: a.truth,
                    methods: a.methods,
                    latent_states,
                    tau: a.tau,
                    seed: a.seed,
                    cluster,
                    fit: a.fit.options(),
                }
            }
        }
        Command::Sweep(a) => {
            let mut sweep = SweepConfig::accuracy(a.models, a.latent_states, parse_grid(&a.sparsity)?, a.seeds, a.seed);
            sweep.n = a.n;
            sweep.p = a.p;
            sweep.train_frac = a.train_frac;
            sweep.fit = a.fit.options();
            RunConfig::Sweep { sweep, force: a.force }
        }
        Command::Rerun(_) => unreachable!("handled by the caller"),
    })
}

#[derive(Serialize)]
struct BenchmarkDatasetReport<'a> {
    items: &'a Path,
    duels: &'a Path,
    report: &'a ExperimentReport,
}

#[derive(Serialize)]
struct BenchmarkOutput<'a> {
    config: &'a RunConfig,
    datasets: Vec<BenchmarkDatasetReport<'a>>,
    aggregate: Option<&'a AggregateReport>,
}

#[derive(Debug, Clone, Serialize)]
struct MethodOutcome {
    method: ClusterMethod,
    /// 1-based cluster labels aligned with the items file.
    assignment: Option<Vec<usize>>,
    singular_values: Option<Vec<f64>>,
    inertia: Option<f64>,
    proportion_correct: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct ClusterOutput<'a> {
    config: &'a RunConfig,
    n_items: usize,
    n_duels: usize,
    methods: Vec<MethodOutcome>,
}

#[derive(Serialize)]
struct SweepOutput<'a> {
    config: &'a RunConfig,
    rows: &'a [PlotRow],
}

/// Execute a run, writing its files into `out`. Returns the text to print.
pub fn execute(config: &RunConfig, out: &Path) -> Result<String> {
    let mut text = String::new();
    match config {
        RunConfig::Simulate { spec } => {
            let inst = generate(spec)?;
            let files = write_instance(&inst, out)?;
            let _ = writeln!(
                text,
                "{} items, {} duels ({} expected), {} ties resolved by coin",
                inst.dataset.n_items(),
                inst.dataset.duels().len(),
                crate::synthetic::expected_edge_count(spec),
                inst.ties
            );
            for f in [&files.items, &files.duels, &files.truth] {
                let _ = writeln!(text, "wrote {}", f.display());
            }
        }
        RunConfig::Benchmark { datasets, benchmark } => {
            let mut reports = Vec::new();
            for d in datasets {
                let ds = load_dataset(&d.items, &d.duels)?;
                reports.push(run_benchmark(&ds, benchmark)?);
            }
            for (d, r) in datasets.iter().zip(&reports) {
                if datasets.len() > 1 {
                    let _ = writeln!(text, "{}", d.duels.display());
                }
                let _ = writeln!(text, "{}", r.table_row());
                for m in &r.models {
                    let failed = m.trials.len() - m.successes;
                    if failed > 0 {
                        let _ = writeln!(text, "warning: {} failed in {failed} of {} trials", m.model, m.trials.len());
                    }
                }
            }
            let aggregate = (datasets.len() > 1).then(|| aggregate_reports(reports.clone()));
            if let Some(a) = &aggregate {
                let row: Vec<String> = a
                    .mean_accuracy
                    .iter()
                    .map(|(k, v)| format!("{k} {v:.2} ± {:.2}", a.mean_std[k]))
                    .collect();
                let _ = writeln!(text, "average over {} datasets: {}", datasets.len(), row.join(" | "));
            }
            let output = BenchmarkOutput {
                config,
                datasets: datasets
                    .iter()
                    .zip(&reports)
                    .map(|(d, report)| BenchmarkDatasetReport { items: &d.items, duels: &d.duels, report })
                    .collect(),
                aggregate: aggregate.as_ref(),
            };
            write_atomic(&out.join("report.json"), &to_json_bytes(&output)?)?;
            write_atomic(&out.join("trials.csv"), &benchmark_trials_csv(&reports)?)?;
        }
        RunConfig::Cluster { dataset, truth, methods, latent_states, tau, seed, cluster, fit } => {
            let ds = load_dataset(&dataset.items, &dataset.duels)?;
            let truth_labels = match truth {
                Some(p) => Some(load_truth(p)?.labels_for(ds.items())?),
                None => None,
            };
            let l = *latent_states;
            let outcomes: Vec<MethodOutcome> = methods
                .iter()
                .map(|&m| {
                    let r = match m {
                        ClusterMethod::GpgpClus => gpgp_clus_dataset(&ds, l, *seed, cluster, fit),
                        ClusterMethod::PrClus => pr_clus(&ds, l, *tau, *seed, cluster, fit),
                        ClusterMethod::SvdClus => svd_clus(&ds, l, *seed, cluster),
                    };
                    match r {
                        Ok(c) => {
                            let pc = truth_labels.as_ref().map(|t| proportion_correct(&c.assignment, t)).transpose();
                            MethodOutcome {
                                method: m,
                                assignment: Some(c.assignment.iter().map(|a| a + 1).collect()),
                                singular_values: Some(c.singular_values),
                                inertia: Some(c.inertia),
                                proportion_correct: pc.as_ref().ok().copied().flatten(),
                                error: pc.err().map(|e| e.to_string()),
                            }
                        }
                        Err(e) => MethodOutcome {
                            method: m,
                            assignment: None,
                            singular_values: None,
                            inertia: None,
                            proportion_correct: None,
                            error: Some(e.to_string()),
                        },
                    }
                })
                .collect();
            if outcomes.iter().all(|o| o.assignment.is_none()) {
                let first = outcomes.iter().find_map(|o| o.error.clone()).unwrap_or_default();
                return Err(if first.starts_with("degenerate") { Error::Degenerate(first) } else { Error::Input(first) });
            }
            for o in &outcomes {
                match (&o.assignment, o.proportion_correct, &o.error) {
                    (Some(_), Some(pc), _) => {
                        let _ = writeln!(text, "{}: proportion correct {pc:.3}", o.method);
                    }
                    (Some(_), None, _) => {
                        let _ = writeln!(text, "{}: done", o.method);
                    }
                    (None, _, Some(e)) => {
                        let _ = writeln!(text, "warning: {} failed: {e}", o.method);
                    }
                    _ => {}
                }
            }
            write_atomic(&out.join("assignments.csv"), &assignments_csv(ds.items().ids(), &outcomes)?)?;
            let output = ClusterOutput { config, n_items: ds.n_items(), n_duels: ds.duels().len(), methods: outcomes };
            write_atomic(&out.join("report.json"), &to_json_bytes(&output)?)?;
        }
        RunConfig::ClusterSweep { sweep, .. } | RunConfig::Sweep { sweep, .. } => {
            let records = run_sweep(sweep)?;
            let rows = summarize(sweep, &records);
            for &l in &sweep.latent_states {
                let panel = format!("L{l}");
                let panel_rows: Vec<PlotRow> = rows.iter().filter(|r| r.panel == panel).cloned().collect();
                write_atomic(&out.join(format!("plotdata_{panel}.csv")), &crate::eval::plot_csv(&panel_rows)?)?;
            }
            write_atomic(&out.join("trials.csv"), &records_csv(&records)?)?;
            write_atomic(&out.join("report.json"), &to_json_bytes(&SweepOutput { config, rows: &rows })?)?;
            for r in &rows {
                let _ = writeln!(text, "{} sparsity {:.2} {:<12} {:.3} ± {:.3} ({} runs, {} failed)", r.panel, r.x, r.series, r.mean, r.std, r.runs, r.failures);
            }
        }
    }
    write_atomic(&out.join("config.json"), &to_json_bytes(config)?)?;
    Ok(text)
}

fn benchmark_trials_csv(reports: &[ExperimentReport]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["dataset", "trial", "seed", "model", "accuracy", "lengthscale", "error"])?;
    for (k, r) in reports.iter().enumerate() {
        for m in &r.models {
            for t in &m.trials {
                w.write_record([
                    k.to_string(),
                    t.trial.to_string(),
                    t.seed.to_string(),
                    m.model.to_string(),
                    t.accuracy.map(|a| a.to_string()).unwrap_or_default(),
                    t.lengthscale.map(|a| a.to_string()).unwrap_or_default(),
                    t.error.clone().unwrap_or_default(),
                ])?;
            }
        }
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn assignments_csv(ids: &[String], outcomes: &[MethodOutcome]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["id".to_string()];
    header.extend(outcomes.iter().map(|o| o.method.to_string()));
    w.write_record(&header)?;
    for (i, id) in ids.iter().enumerate() {
        let mut row = vec![id.clone()];
        row.extend(outcomes.iter().map(|o| o.assignment.as_ref().map(|a| a[i].to_string()).unwrap_or_default()));
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse { path: path.to_path_buf(), line: e.line(), message: e.to_string() })
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (config, out) = match cli.command {
        Command::Rerun(a) => match load_config(&a.config) {
            Ok(c) => (c, a.out.out),
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_RUNTIME;
            }
        },
        other => {
            let out = match &other {
                Command::Simulate(a) => a.out.out.clone(),
                Command::Benchmark(a) => a.out.out.clone(),
                Command::Cluster(a) => a.out.out.clone(),
                Command::Sweep(a) => a.out.out.clone(),
                Command::Rerun(_) => unreachable!(),
            };
            match build_config(other) {
                Ok(c) => (c, out),
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_USAGE;
                }
            }
        }
    };
    if let Err(e) = validate(&config) {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    match pool.install(|| execute(&config, &out)) {
        Ok(text) => {
            print!("{text}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gpgp(args: &[&str]) -> i32 {
        run(std::iter::once("gpgp").chain(args.iter().copied()))
    }

    fn path(p: &Path) -> &str {
        p.to_str().unwrap()
    }

    fn simulate(out: &Path, mode: &str, latent_states: &str, sparsity: &str) -> i32 {
        gpgp(&["simulate", "--mode", mode, "--n", "12", "--p", "3", "--L", latent_states, "--sparsity", sparsity, "--seed", "4", "-o", path(out)])
    }

    #[test]
    fn simulate_writes_three_files_deterministically() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a"), dir.path().join("b"));
        assert_eq!(simulate(&a, "cyclic", "2", "0.8"), EXIT_OK);
        assert_eq!(simulate(&b, "cyclic", "2", "0.8"), EXIT_OK);
        for f in ["items.csv", "duels.csv", "truth.json"] {
            let bytes = std::fs::read(a.join(f)).unwrap();
            assert!(!bytes.is_empty());
            assert_eq!(bytes, std::fs::read(b.join(f)).unwrap(), "{f}");
        }
        let truth: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("truth.json")).unwrap()).unwrap();
        assert_eq!(truth["L"], 2);
        assert_eq!(truth["z"].as_object().unwrap().len(), 12);
    }

    #[test]
    fn usage_errors_exit_with_two() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(simulate(dir.path(), "cyclic", "0", "0.8"), EXIT_USAGE);
        assert_eq!(gpgp(&["simulate", "--sparsity", "1.5", "-o", path(dir.path())]), EXIT_USAGE);
        assert_eq!(gpgp(&["cluster", "--items", "i.csv", "--duels", "d.csv"]), EXIT_USAGE);
        assert_eq!(gpgp(&["frobnicate"]), EXIT_USAGE);
        assert_eq!(gpgp(&["sweep", "--L", "1,2,3,4,5", "--sparsity", "0:1:100", "--seeds", "30", "-o", path(dir.path())]), EXIT_USAGE);
    }

    #[test]
    fn runtime_errors_exit_with_one() {
        let dir = tempfile::tempdir().unwrap();
        let items = dir.path().join("items.csv");
        let duels = dir.path().join("duels.csv");
        std::fs::write(&items, "id,x\na,0.1\nb,0.5\nc,-1\n").unwrap();
        std::fs::write(&duels, "").unwrap();
        let out = dir.path().join("out");
        assert_eq!(gpgp(&["benchmark", "--items", path(&items), "--duels", path(&duels), "-o", path(&out)]), EXIT_RUNTIME);
        std::fs::write(&duels, "winner,loser\na,zz\n").unwrap();
        assert_eq!(gpgp(&["benchmark", "--items", path(&items), "--duels", path(&duels), "-o", path(&out)]), EXIT_RUNTIME);
        assert_eq!(gpgp(&["rerun", path(&dir.path().join("missing.json")), "-o", path(&out)]), EXIT_RUNTIME);
    }

    #[test]
    fn benchmark_rerun_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("data");
        assert_eq!(simulate(&data, "cyclic", "2", "0.8"), EXIT_OK);
        let first = dir.path().join("first");
        let (items, duels) = (data.join("items.csv"), data.join("duels.csv"));
        let args = [
            "benchmark",
            "--items",
            path(&items),
            "--duels",
            path(&duels),
            "--models",
            "gpgp,pair-logreg",
            "--trials",
            "3",
            "--lengthscale",
            "1.0",
            "-o",
            path(&first),
        ];
        assert_eq!(gpgp(&args), EXIT_OK);
        let second = dir.path().join("second");
        assert_eq!(gpgp(&["--jobs", "1", "rerun", path(&first.join("config.json")), "-o", path(&second)]), EXIT_OK);
        for f in ["report.json", "trials.csv", "config.json"] {
            assert_eq!(std::fs::read(first.join(f)).unwrap(), std::fs::read(second.join(f)).unwrap(), "{f}");
        }
    }

    #[test]
    fn cluster_writes_labels_for_every_item() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("data");
        assert_eq!(simulate(&data, "clustered", "2", "1.0"), EXIT_OK);
        let out = dir.path().join("out");
        let code = gpgp(&[
            "cluster",
            "--items",
            path(&data.join("items.csv")),
            "--duels",
            path(&data.join("duels.csv")),
            "--truth",
            path(&data.join("truth.json")),
            "--L",
            "2",
            "--method",
            "svd-clus",
            "-o",
            path(&out),
        ]);
        assert_eq!(code, EXIT_OK);
        let text = std::fs::read_to_string(out.join("assignments.csv")).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows.len(), 13);
        assert!(rows[1..].iter().all(|r| r.ends_with(",1") || r.ends_with(",2")));
        assert!(out.join("report.json").exists());
    }

    #[test]
    fn sweep_writes_one_plot_file_per_panel() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let code = gpgp(&[
            "sweep", "--L", "1,2", "--sparsity", "0.6,1.0", "--seeds", "2", "--n", "10", "--p", "2", "--models", "pgp", "--lengthscale",
            "1.0", "-o", path(&out),
        ]);
        assert_eq!(code, EXIT_OK);
        for f in ["plotdata_L1.csv", "plotdata_L2.csv", "trials.csv", "report.json", "config.json"] {
            assert!(out.join(f).exists(), "{f}");
        }
        let plot = std::fs::read_to_string(out.join("plotdata_L2.csv")).unwrap();
        assert_eq!(plot.lines().count(), 3);
    }
}
