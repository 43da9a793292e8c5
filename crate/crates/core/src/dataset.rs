//! Items, duels and the datasets built from them.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n` items with `p` real covariates each, one row per item.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemTable {
    ids: Vec<String>,
    covariates: DMatrix<f64>,
}

impl ItemTable {
    pub fn new(ids: Vec<String>, covariates: DMatrix<f64>) -> Result<Self> {
        if ids.len() != covariates.nrows() {
            return Err(Error::input(format!(
                "{} ids for {} covariate rows",
                ids.len(),
                covariates.nrows()
            )));
        }
        if covariates.ncols() == 0 {
            return Err(Error::input("items need at least one covariate"));
        }
        if let Some(bad) = covariates.iter().position(|v| !v.is_finite()) {
            let row = bad % covariates.nrows();
            return Err(Error::input(format!("non-finite covariate for item '{}'", ids[row])));
        }
        let mut seen = HashMap::with_capacity(ids.len());
        for (k, id) in ids.iter().enumerate() {
            if let Some(prev) = seen.insert(id.as_str(), k) {
                return Err(Error::input(format!("duplicate item id '{id}' (rows {prev} and {k})")));
            }
        }
        Ok(ItemTable { ids, covariates })
    }

    /// Items named `0..n` from a covariate matrix.
    pub fn from_matrix(covariates: DMatrix<f64>) -> Result<Self> {
        let ids = (0..covariates.nrows()).map(|k| k.to_string()).collect();
        Self::new(ids, covariates)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.covariates.ncols()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn covariates(&self) -> &DMatrix<f64> {
        &self.covariates
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.covariates.row(i).iter().copied().collect()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    /// Copy with every covariate column shifted to zero mean and scaled to unit
    /// (population) variance. Constant columns are only centred.
    pub fn standardized(&self) -> ItemTable {
        ItemTable {
            ids: self.ids.clone(),
            covariates: standardize_columns(&self.covariates),
        }
    }
}

pub(crate) fn standardize_columns(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows() as f64;
    let mut out = x.clone();
    for mut col in out.column_iter_mut() {
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        for v in col.iter_mut() {
            *v -= mean;
            if sd > 1e-12 {
                *v /= sd;
            }
        }
    }
    out
}

/// Duel outcome; `Win` means the first-listed item won.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Win,
    Loss,
}

impl Outcome {
    pub fn from_sign(y: i8) -> Option<Self> {
        match y {
            1 => Some(Outcome::Win),
            -1 => Some(Outcome::Loss),
            _ => None,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Outcome::Win => 1.0,
            Outcome::Loss => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Outcome::Win => Outcome::Loss,
            Outcome::Loss => Outcome::Win,
        }
    }
}

/// One observed comparison `(i, j, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Duel {
    pub first: usize,
    pub second: usize,
    pub outcome: Outcome,
}

impl Duel {
    pub fn new(first: usize, second: usize, outcome: Outcome) -> Self {
        Duel { first, second, outcome }
    }

    pub fn won(winner: usize, loser: usize) -> Self {
        Duel::new(winner, loser, Outcome::Win)
    }

    pub fn winner(&self) -> usize {
        match self.outcome {
            Outcome::Win => self.first,
            Outcome::Loss => self.second,
        }
    }

    pub fn loser(&self) -> usize {
        match self.outcome {
            Outcome::Win => self.second,
            Outcome::Loss => self.first,
        }
    }

    /// Same event stored with the items swapped.
    pub fn reversed(&self) -> Self {
        Duel::new(self.second, self.first, self.outcome.flip())
    }

    /// `(min, max, y)` with `y` re-expressed for that orientation.
    pub fn canonical(&self) -> (usize, usize, f64) {
        if self.first < self.second {
            (self.first, self.second, self.outcome.sign())
        } else {
            (self.second, self.first, -self.outcome.sign())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceDataset {
    items: ItemTable,
    duels: Vec<Duel>,
}

impl PreferenceDataset {
    /// Validates indices and rejects self-duels. An empty duel list is allowed
    /// here; model fitting rejects it.
    pub fn new(items: ItemTable, duels: Vec<Duel>) -> Result<Self> {
        let n = items.len();
        for (k, d) in duels.iter().enumerate() {
            if d.first >= n || d.second >= n {
                return Err(Error::input(format!(
                    "duel {k} references item {} but only {n} items exist",
                    d.first.max(d.second)
                )));
            }
            if d.first == d.second {
                return Err(Error::input(format!("duel {k} is a self-duel on item {}", d.first)));
            }
        }
        Ok(PreferenceDataset { items, duels })
    }

    pub fn items(&self) -> &ItemTable {
        &self.items
    }

    pub fn duels(&self) -> &[Duel] {
        &self.duels
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    /// Same items, different duel list.
    pub fn with_duels(&self, duels: Vec<Duel>) -> Result<Self> {
        PreferenceDataset::new(self.items.clone(), duels)
    }

    /// Observed comparison matrix: `Y[i][j]` is wins of `i` over `j` minus
    /// wins of `j` over `i`. Zero where no duel was played.
    pub fn comparison_matrix(&self) -> DMatrix<f64> {
        let n = self.n_items();
        let mut y = DMatrix::zeros(n, n);
        for d in &self.duels {
            let (w, l) = (d.winner(), d.loser());
            y[(w, l)] += 1.0;
            y[(l, w)] -= 1.0;
        }
        y
    }
}
