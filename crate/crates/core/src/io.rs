//! CSV and JSON formats.
//!
//! Items: header `id,c1,...,cp`. Duels: either `winner,loser` or the oriented
//! form `i,j,y` with `y = ±1` meaning item `i` won (+1) or lost (-1).

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::dataset::{Duel, ItemTable, Outcome, PreferenceDataset};
use crate::error::{Error, Result};
use crate::synthetic::{GroundTruth, SyntheticInstance};

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line: line as usize, message: message.into() }
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path)?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn record_line(rec: &csv::StringRecord) -> u64 {
    rec.position().map(|p| p.line()).unwrap_or(0)
}

pub fn load_items(path: &Path) -> Result<ItemTable> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 || !headers[0].eq_ignore_ascii_case("id") {
        return Err(parse_err(path, 1, "expected header 'id,c1,...,cp' with at least one covariate"));
    }
    let p = headers.len() - 1;
    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut seen: HashMap<String, u64> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(path, line, e.to_string())
        })?;
        let line = record_line(&rec);
        let id = rec[0].to_string();
        if id.is_empty() {
            return Err(parse_err(path, line, "empty item id"));
        }
        if let Some(prev) = seen.insert(id.clone(), line) {
            return Err(parse_err(path, line, format!("duplicate item id '{id}' (first seen on line {prev})")));
        }
        for (k, field) in rec.iter().skip(1).enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(path, line, format!("covariate '{}' is not a number: '{field}'", &headers[k + 1])))?;
            if !v.is_finite() {
                return Err(parse_err(path, line, format!("covariate '{}' is not finite", &headers[k + 1])));
            }
            values.push(v);
        }
        ids.push(id);
    }
    if ids.is_empty() {
        return Err(Error::input(format!("{}: no items", path.display())));
    }
    let x = DMatrix::from_row_slice(ids.len(), p, &values);
    ItemTable::new(ids, x)
}

#[derive(Clone, Copy)]
enum DuelLayout {
    WinnerLoser { winner: usize, loser: usize },
    Oriented { i: usize, j: usize, y: usize },
}

fn duel_layout(path: &Path, headers: &csv::StringRecord) -> Result<DuelLayout> {
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    if let (Some(winner), Some(loser)) = (col("winner"), col("loser")) {
        return Ok(DuelLayout::WinnerLoser { winner, loser });
    }
    if let (Some(i), Some(j)) = (col("i"), col("j")) {
        return match col("y") {
            Some(y) => Ok(DuelLayout::Oriented { i, j, y }),
            // `i,j` without labels reads as winner, loser.
            None => Ok(DuelLayout::WinnerLoser { winner: i, loser: j }),
        };
    }
    Err(parse_err(path, 1, "expected header 'winner,loser' or 'i,j,y'"))
}

pub fn load_duels(path: &Path, items: &ItemTable) -> Result<Vec<Duel>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    let layout = duel_layout(path, &headers)?;
    let index: HashMap<&str, usize> = items.ids().iter().enumerate().map(|(k, id)| (id.as_str(), k)).collect();
    let mut duels = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(path, line, e.to_string())
        })?;
        let line = record_line(&rec);
        let lookup = |c: usize| -> Result<usize> {
            let id = rec.get(c).unwrap_or("");
            index.get(id).copied().ok_or_else(|| parse_err(path, line, format!("unknown item id '{id}'")))
        };
        let duel = match layout {
            DuelLayout::WinnerLoser { winner, loser } => Duel::won(lookup(winner)?, lookup(loser)?),
            DuelLayout::Oriented { i, j, y } => {
                let raw = rec.get(y).unwrap_or("");
                let sign: i8 = raw
                    .trim_start_matches('+')
                    .parse()
                    .map_err(|_| parse_err(path, line, format!("label must be +1 or -1, got '{raw}'")))?;
                let outcome = Outcome::from_sign(sign)
                    .ok_or_else(|| parse_err(path, line, format!("label must be +1 or -1, got '{raw}'")))?;
                Duel::new(lookup(i)?, lookup(j)?, outcome)
            }
        };
        if duel.first == duel.second {
            return Err(parse_err(path, line, format!("self-duel on item '{}'", items.ids()[duel.first])));
        }
        duels.push(duel);
    }
    if duels.is_empty() {
        return Err(Error::input(format!("{}: no duels", path.display())));
    }
    Ok(duels)
}

pub fn load_dataset(items_path: &Path, duels_path: &Path) -> Result<PreferenceDataset> {
    let items = load_items(items_path)?;
    let duels = load_duels(duels_path, &items)?;
    PreferenceDataset::new(items, duels)
}

pub fn items_csv(items: &ItemTable) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["id".to_string()];
    header.extend((1..=items.dim()).map(|k| format!("c{k}")));
    w.write_record(&header)?;
    for (r, id) in items.ids().iter().enumerate() {
        let mut row = vec![id.clone()];
        row.extend(items.covariates().row(r).iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    finish(w)
}

/// Oriented `i,j,y` form, keeping the stored orientation of each duel.
pub fn duels_csv(ds: &PreferenceDataset) -> Result<Vec<u8>> {
    let ids = ds.items().ids();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["i", "j", "y"])?;
    for d in ds.duels() {
        let y = match d.outcome {
            Outcome::Win => "1",
            Outcome::Loss => "-1",
        };
        w.write_record([ids[d.first].as_str(), ids[d.second].as_str(), y])?;
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

pub fn load_truth(path: &Path) -> Result<GroundTruth> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e.line() as u64, e.to_string()))
}

/// Write via a temporary sibling file and rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| Error::input(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = dir.join(tmp_name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Paths of a simulated instance written by [`write_instance`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceFiles {
    pub items: PathBuf,
    pub duels: PathBuf,
    pub truth: PathBuf,
}

impl InstanceFiles {
    pub fn in_dir(dir: &Path) -> Self {
        InstanceFiles { items: dir.join("items.csv"), duels: dir.join("duels.csv"), truth: dir.join("truth.json") }
    }
}

pub fn write_instance(inst: &SyntheticInstance, dir: &Path) -> Result<InstanceFiles> {
    let files = InstanceFiles::in_dir(dir);
    write_atomic(&files.items, &items_csv(inst.dataset.items())?)?;
    write_atomic(&files.duels, &duels_csv(&inst.dataset)?)?;
    write_atomic(&files.truth, &to_json_bytes(&inst.ground_truth())?)?;
    Ok(files)
}
