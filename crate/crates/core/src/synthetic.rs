//! Simulated comparison graphs with latent item states.
//!
//! Every item gets a latent state `z ∈ {1..L}` and covariates
//! `x | z ~ N(z·1, I)`. For every ordered pair of states `(a, b)` a utility
//! `r_ab(x) = Σ_j α_ab[j] k(x, x_j)` is drawn with `α_ab ~ N(0, I_n)`. When
//! items `i < j` duel, `i` wins iff `r_{z_i z_j}(x_i) > r_{z_i z_j}(x_j)`.
//! In clustered mode a duel between different states is a fair coin instead.
//!
//! Random draws happen in a fixed order (states, covariates, α, then one
//! inclusion draw per pair in lexicographic order with any coin flip right
//! after it), so an instance is a pure function of its spec.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{standardize_columns, Duel, ItemTable, Outcome, PreferenceDataset};
use crate::error::{Error, Result};
use crate::kernels::{item_gram, KernelConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimulationMode {
    Cyclic,
    Clustered,
}

impl fmt::Display for SimulationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            SimulationMode::Cyclic => "cyclic",
            SimulationMode::Clustered => "clustered",
        })
    }
}

impl FromStr for SimulationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cyclic" => Ok(SimulationMode::Cyclic),
            "clustered" | "cluster" => Ok(SimulationMode::Clustered),
            other => Err(Error::input(format!("unknown simulation mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub p: usize,
    /// Number of latent states `L`.
    pub latent_states: usize,
    /// Probability that any given unordered pair duels.
    pub sparsity: f64,
    pub mode: SimulationMode,
    pub utility_kernel: KernelConfig,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Defaults: RBF utilities with unit lengthscale on standardised covariates.
    pub fn new(mode: SimulationMode, n: usize, p: usize, latent_states: usize, sparsity: f64, seed: u64) -> Self {
        SyntheticSpec {
            n,
            p,
            latent_states,
            sparsity,
            mode,
            utility_kernel: KernelConfig::rbf(1.0).expect("positive lengthscale"),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::input(format!("need at least 2 items, got {}", self.n)));
        }
        if self.p < 1 {
            return Err(Error::input("need at least one covariate"));
        }
        if self.latent_states < 1 {
            return Err(Error::input("need at least one latent state"));
        }
        if !(self.sparsity > 0.0 && self.sparsity <= 1.0) {
            return Err(Error::input(format!("sparsity must lie in (0, 1], got {}", self.sparsity)));
        }
        Ok(())
    }
}

/// `sparsity · n(n-1)/2`.
pub fn expected_edge_count(spec: &SyntheticSpec) -> f64 {
    spec.sparsity * (spec.n * (spec.n - 1)) as f64 / 2.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticInstance {
    pub dataset: PreferenceDataset,
    /// Latent state per item, `0..L`.
    pub states: Vec<usize>,
    /// `alpha[a * L + b]` holds the coefficients of utility `r_ab`.
    pub alpha: Vec<DVector<f64>>,
    pub spec: SyntheticSpec,
    /// Per duel: whether its outcome came from a fair coin (cross-cluster pair
    /// or numerical tie) instead of a utility comparison.
    pub coin_flips: Vec<bool>,
    pub ties: usize,
    /// Utility values `r_ab(x_i)` for every state pair, `n x L²`.
    utilities: DMatrix<f64>,
}

/// Ground-truth sidecar written next to a simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub mode: SimulationMode,
    #[serde(rename = "L")]
    pub latent_states: usize,
    /// Item id to 1-based latent state.
    pub z: BTreeMap<String, usize>,
    pub n: usize,
    pub p: usize,
    pub sparsity: f64,
    pub alpha_digest: String,
    pub ties: usize,
}

impl GroundTruth {
    /// 0-based labels aligned to `items`.
    pub fn labels_for(&self, items: &ItemTable) -> Result<Vec<usize>> {
        items
            .ids()
            .iter()
            .map(|id| {
                self.z
                    .get(id)
                    .map(|l| l.saturating_sub(1))
                    .ok_or_else(|| Error::input(format!("ground truth has no label for item '{id}'")))
            })
            .collect()
    }
}

impl SyntheticInstance {
    pub fn latent_states(&self) -> usize {
        self.spec.latent_states
    }

    /// `r_ab(x_i)`, with `a`, `b` 0-based states.
    pub fn utility(&self, a: usize, b: usize, item: usize) -> f64 {
        self.utilities[(item, a * self.spec.latent_states + b)]
    }

    /// Recompute `r_ab(x_i)` from the stored α and covariates.
    pub fn recompute_utility(&self, a: usize, b: usize, item: usize) -> f64 {
        let z = standardize_columns(self.dataset.items().covariates());
        let base = item_gram(&z, &self.spec.utility_kernel);
        base.row(item).transpose().dot(&self.alpha[a * self.spec.latent_states + b])
    }

    pub fn alpha_digest(&self) -> String {
        let mut h = Sha256::new();
        for a in &self.alpha {
            for v in a.iter() {
                h.update(v.to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn ground_truth(&self) -> GroundTruth {
        let ids = self.dataset.items().ids();
        GroundTruth {
            seed: self.spec.seed,
            mode: self.spec.mode,
            latent_states: self.spec.latent_states,
            z: ids.iter().cloned().zip(self.states.iter().map(|s| s + 1)).collect(),
            n: self.spec.n,
            p: self.spec.p,
            sparsity: self.spec.sparsity,
            alpha_digest: self.alpha_digest(),
            ties: self.ties,
        }
    }
}

/// Cyclic / inconsistent preferences: every duel follows the utility picked
/// by the latent states of its two items.
pub fn generate_cyclic(spec: &SyntheticSpec) -> Result<SyntheticInstance> {
    if spec.mode != SimulationMode::Cyclic {
        return Err(Error::input("generate_cyclic needs a cyclic spec"));
    }
    generate_impl(spec)
}

/// Clusters of comparable items: same-state duels follow that state's
/// utility, cross-state duels are fair coins.
pub fn generate_clustered(spec: &SyntheticSpec) -> Result<SyntheticInstance> {
    if spec.mode != SimulationMode::Clustered {
        return Err(Error::input("generate_clustered needs a clustered spec"));
    }
    generate_impl(spec)
}

/// Dispatch on `spec.mode`.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticInstance> {
    generate_impl(spec)
}

fn generate_impl(spec: &SyntheticSpec) -> Result<SyntheticInstance> {
    spec.validate()?;
    let (n, p, l) = (spec.n, spec.p, spec.latent_states);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let states: Vec<usize> = (0..n).map(|_| rng.random_range(0..l)).collect();
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        let centre = (states[i] + 1) as f64;
        for d in 0..p {
            let e: f64 = rng.sample(StandardNormal);
            x[(i, d)] = centre + e;
        }
    }
    let alpha: Vec<DVector<f64>> = (0..l * l)
        .map(|_| DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal)))
        .collect();

    let base = item_gram(&standardize_columns(&x), &spec.utility_kernel);
    let mut utilities = DMatrix::zeros(n, l * l);
    for (c, a) in alpha.iter().enumerate() {
        utilities.set_column(c, &(&base * a));
    }

    let clustered = spec.mode == SimulationMode::Clustered;
    let mut duels = Vec::new();
    let mut coin_flips = Vec::new();
    let mut ties = 0;
    for i in 0..n {
        for j in i + 1..n {
            let draw: f64 = rng.random();
            if draw >= spec.sparsity {
                continue;
            }
            let (zi, zj) = (states[i], states[j]);
            let (first_wins, coin) = if clustered && zi != zj {
                (rng.random_bool(0.5), true)
            } else {
                let c = zi * l + zj;
                let delta = utilities[(i, c)] - utilities[(j, c)];
                if delta.abs() < 1e-12 {
                    ties += 1;
                    (rng.random_bool(0.5), true)
                } else {
                    (delta > 0.0, false)
                }
            };
            duels.push(Duel::new(i, j, if first_wins { Outcome::Win } else { Outcome::Loss }));
            coin_flips.push(coin);
        }
    }

    let items = ItemTable::from_matrix(x)?;
    Ok(SyntheticInstance {
        dataset: PreferenceDataset::new(items, duels)?,
        states,
        alpha,
        spec: spec.clone(),
        coin_flips,
        ties,
        utilities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Directed 3-cycle search over the tournament restricted to `keep`.
    pub(crate) fn has_three_cycle(n: usize, duels: &[Duel], keep: impl Fn(usize) -> bool) -> bool {
        let mut beats = vec![vec![false; n]; n];
        for d in duels {
            if keep(d.first) && keep(d.second) {
                beats[d.winner()][d.loser()] = true;
            }
        }
        for a in 0..n {
            for b in 0..n {
                if !beats[a][b] {
                    continue;
                }
                for c in 0..n {
                    if beats[b][c] && beats[c][a] {
                        return true;
                    }
                }
            }
        }
        false
    }

    #[test]
    fn validation() {
        let ok = SyntheticSpec::new(SimulationMode::Cyclic, 30, 5, 2, 0.6, 7);
        assert!(ok.validate().is_ok());
        for bad in [
            SyntheticSpec { n: 1, ..ok.clone() },
            SyntheticSpec { p: 0, ..ok.clone() },
            SyntheticSpec { latent_states: 0, ..ok.clone() },
            SyntheticSpec { sparsity: 0.0, ..ok.clone() },
            SyntheticSpec { sparsity: 1.5, ..ok.clone() },
        ] {
            assert!(generate(&bad).is_err());
        }
        assert!(generate_clustered(&ok).is_err());
    }

    #[test]
    fn expected_edges() {
        let s = SyntheticSpec::new(SimulationMode::Cyclic, 30, 5, 1, 1.0, 0);
        assert_eq!(expected_edge_count(&s), 435.0);
        assert_eq!(expected_edge_count(&SyntheticSpec { sparsity: 0.3, ..s.clone() }), 130.5);
        assert!(expected_edge_count(&SyntheticSpec { sparsity: 1e-300, ..s }) < 1e-290);
    }

    #[test]
    fn full_sparsity_is_complete_graph() {
        let s = SyntheticSpec::new(SimulationMode::Cyclic, 12, 3, 2, 1.0, 4);
        assert_eq!(generate(&s).unwrap().dataset.duels().len(), 66);
    }

    #[test]
    fn deterministic_given_seed() {
        let s = SyntheticSpec::new(SimulationMode::Clustered, 20, 3, 3, 0.5, 99);
        assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
        let other = generate(&SyntheticSpec { seed: 100, ..s.clone() }).unwrap();
        assert_ne!(generate(&s).unwrap().dataset, other.dataset);
    }

    #[test]
    fn single_state_is_rankable() {
        for seed in 0..10 {
            let s = SyntheticSpec::new(SimulationMode::Cyclic, 25, 4, 1, 0.7, seed);
            let inst = generate(&s).unwrap();
            assert!(!has_three_cycle(25, inst.dataset.duels(), |_| true));
        }
    }

    #[test]
    fn clustered_with_one_state_equals_cyclic() {
        let s = SyntheticSpec::new(SimulationMode::Cyclic, 15, 2, 1, 0.8, 5);
        let c = SyntheticSpec { mode: SimulationMode::Clustered, ..s.clone() };
        assert_eq!(generate(&s).unwrap().dataset, generate(&c).unwrap().dataset);
    }

    #[test]
    fn outcomes_reproduce_from_alpha() {
        let s = SyntheticSpec::new(SimulationMode::Cyclic, 20, 5, 3, 0.6, 21);
        let inst = generate(&s).unwrap();
        for (d, coin) in inst.dataset.duels().iter().zip(&inst.coin_flips) {
            assert!(!coin);
            let (a, b) = (inst.states[d.first], inst.states[d.second]);
            let delta = inst.recompute_utility(a, b, d.first) - inst.recompute_utility(a, b, d.second);
            assert_eq!(delta > 0.0, d.outcome == Outcome::Win);
        }
    }

    #[test]
    fn truth_uses_one_based_states() {
        let s = SyntheticSpec::new(SimulationMode::Clustered, 10, 2, 2, 1.0, 1);
        let inst = generate(&s).unwrap();
        let t = inst.ground_truth();
        assert!(t.z.values().all(|v| (1..=2).contains(v)));
        assert_eq!(t.labels_for(inst.dataset.items()).unwrap(), inst.states);
        assert_eq!(t.alpha_digest.len(), 64);
    }

    #[test]
    fn two_states_produce_a_three_cycle() {
        let found = (0..20).any(|seed| {
            let inst = generate(&SyntheticSpec::new(SimulationMode::Cyclic, 30, 5, 2, 1.0, seed)).unwrap();
            has_three_cycle(30, inst.dataset.duels(), |_| true)
        });
        assert!(found);
    }

    #[test]
    fn cross_cluster_pairs_are_fair_coins() {
        let (mut first_wins, mut total) = (0usize, 0usize);
        for seed in 0..15 {
            let inst = generate(&SyntheticSpec::new(SimulationMode::Clustered, 60, 3, 2, 1.0, seed)).unwrap();
            for d in inst.dataset.duels() {
                if inst.states[d.first] != inst.states[d.second] {
                    total += 1;
                    first_wins += (d.winner() == d.first) as usize;
                }
            }
            for state in 0..2 {
                assert!(!has_three_cycle(60, inst.dataset.duels(), |i| inst.states[i] == state));
            }
        }
        assert!(total >= 10_000, "{total}");
        let rate = first_wins as f64 / total as f64;
        assert!((rate - 0.5).abs() <= 0.02, "{rate}");
    }

    #[test]
    fn edge_count_matches_expectation_on_average() {
        let spec = SyntheticSpec::new(SimulationMode::Cyclic, 30, 2, 1, 0.3, 0);
        let mean = (0..200u64)
            .map(|seed| generate(&SyntheticSpec { seed, ..spec.clone() }).unwrap().dataset.duels().len() as f64)
            .sum::<f64>()
            / 200.0;
        let expected = expected_edge_count(&spec);
        assert!((mean / expected - 1.0).abs() <= 0.05, "{mean} vs {expected}");
    }
}
