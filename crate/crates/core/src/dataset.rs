//! Weekly GSI composition data for a genetic mark-recapture season, plus
//! the flat-file schema it is read from.
//!
//! Two CSV tables describe a season. The long-form composition table has one
//! row per `(week, stock)` with columns `week,stock,p_hat,se`; the side table
//! has one row per week with `week,weight,n`. The lake-type escapement count
//! and the list of lake-type stocks come from a [`DatasetConfig`].

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::composition::{close_composition, Composition, CompositionEstimate};
use crate::error::{Error, Result};

pub const MAX_STOCKS: usize = 64;
pub const MAX_WEEKS: usize = 128;

/// Largest row-sum deviation that is silently re-closed.
pub const RECLOSE_TOLERANCE: f64 = 1e-6;
/// Tolerance on the run weights summing to one.
pub const WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionRow {
    pub week: i64,
    pub stock: String,
    pub p_hat: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRow {
    pub week: i64,
    pub weight: f64,
    pub n: u32,
}

/// Scalars that are not part of either table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    /// Lake-type escapement count from the counting weirs.
    #[serde(rename = "M")]
    pub lake_count: f64,
    pub lake_stocks: Vec<String>,
}

/// A validated season of weekly composition estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmrDataset {
    pub weeks: Vec<CompositionEstimate>,
    pub weights: Vec<f64>,
    pub lake_mask: Vec<bool>,
    pub lake_count: f64,
    pub stock_names: Vec<String>,
    pub week_ids: Vec<i64>,
}

impl GmrDataset {
    /// Checks every dataset invariant.
    pub fn new(
        weeks: Vec<CompositionEstimate>,
        weights: Vec<f64>,
        lake_mask: Vec<bool>,
        lake_count: f64,
        stock_names: Vec<String>,
        week_ids: Vec<i64>,
    ) -> Result<Self> {
        let t = weeks.len();
        if t == 0 {
            return Err(Error::Schema("dataset has no weeks".into()));
        }
        if t > MAX_WEEKS {
            return Err(Error::Limit(format!("{t} weeks exceeds the limit of {MAX_WEEKS}")));
        }
        let k = weeks[0].k();
        if k > MAX_STOCKS {
            return Err(Error::Limit(format!("{k} stocks exceeds the limit of {MAX_STOCKS}")));
        }
        if let Some(w) = weeks.iter().position(|w| w.k() != k) {
            return Err(Error::Schema(format!("week index {w} has a different stock count")));
        }
        if weights.len() != t || week_ids.len() != t {
            return Err(Error::LengthMismatch(format!(
                "{t} weeks, {} weights, {} week ids",
                weights.len(),
                week_ids.len()
            )));
        }
        if lake_mask.len() != k || stock_names.len() != k {
            return Err(Error::LengthMismatch(format!(
                "{k} stocks, {} mask entries, {} names",
                lake_mask.len(),
                stock_names.len()
            )));
        }
        check_weights(&weights)?;
        let lakes = lake_mask.iter().filter(|&&m| m).count();
        if lakes == 0 {
            return Err(Error::Mask("no lake-type stock".into()));
        }
        if lakes == k {
            return Err(Error::Mask("no river-type stock".into()));
        }
        if !(lake_count.is_finite() && lake_count > 0.0) {
            return Err(Error::Invariant(format!("lake count M = {lake_count} must be positive")));
        }
        Ok(Self { weeks, weights, lake_mask, lake_count, stock_names, week_ids })
    }

    pub fn num_weeks(&self) -> usize {
        self.weeks.len()
    }

    pub fn num_stocks(&self) -> usize {
        self.lake_mask.len()
    }

    pub fn num_lake_stocks(&self) -> usize {
        self.lake_mask.iter().filter(|&&m| m).count()
    }

    /// Reported lake-type proportion per week.
    pub fn lake_proportions(&self) -> Vec<f64> {
        self.weeks.iter().map(|w| w.p_hat.masked_sum(&self.lake_mask)).collect()
    }

    pub fn sample_sizes(&self) -> Vec<u32> {
        self.weeks.iter().map(|w| w.n).collect()
    }

    pub fn config(&self) -> DatasetConfig {
        DatasetConfig {
            lake_count: self.lake_count,
            lake_stocks: self
                .stock_names
                .iter()
                .zip(&self.lake_mask)
                .filter(|(_, &m)| m)
                .map(|(s, _)| s.clone())
                .collect(),
        }
    }

    pub fn composition_rows(&self) -> Vec<CompositionRow> {
        let mut rows = Vec::with_capacity(self.num_weeks() * self.num_stocks());
        for (week, est) in self.week_ids.iter().zip(&self.weeks) {
            for (k, stock) in self.stock_names.iter().enumerate() {
                rows.push(CompositionRow {
                    week: *week,
                    stock: stock.clone(),
                    p_hat: est.p_hat[k],
                    se: est.se[k],
                });
            }
        }
        rows
    }

    pub fn weight_rows(&self) -> Vec<WeightRow> {
        self.week_ids
            .iter()
            .zip(&self.weights)
            .zip(&self.weeks)
            .map(|((&week, &weight), est)| WeightRow { week, weight, n: est.n })
            .collect()
    }

    pub fn write_composition_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_rows(writer, &self.composition_rows())
    }

    pub fn write_weights_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_rows(writer, &self.weight_rows())
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if let Some((t, w)) = weights.iter().enumerate().find(|(_, w)| !w.is_finite() || **w < 0.0) {
        return Err(Error::Invariant(format!("weight for week index {t} is {w}")));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(Error::Invariant(format!("weights sum to {sum}, not 1")));
    }
    Ok(())
}

fn write_rows<W: Write, R: Serialize>(writer: W, rows: &[R]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_composition_rows<R: Read>(reader: R) -> Result<Vec<CompositionRow>> {
    read_rows(reader)
}

pub fn read_weight_rows<R: Read>(reader: R) -> Result<Vec<WeightRow>> {
    read_rows(reader)
}

fn read_rows<R: Read, T: for<'de> Deserialize<'de>>(reader: R) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        out.push(row.map_err(|e| Error::Schema(e.to_string()))?);
    }
    Ok(out)
}

/// Reads both tables from disk and validates them against `config`.
pub fn load_dataset(
    composition_csv: &Path,
    weights_csv: &Path,
    config: &DatasetConfig,
) -> Result<GmrDataset> {
    let rows = read_composition_rows(std::fs::File::open(composition_csv)?)?;
    let weights = read_weight_rows(std::fs::File::open(weights_csv)?)?;
    validate_dataset(&rows, &weights, config)
}

/// Assembles parsed table rows into a [`GmrDataset`].
///
/// Stocks keep the order of their first appearance in `rows`; weeks are
/// sorted by number. Rows whose proportions miss 1 by at most
/// [`RECLOSE_TOLERANCE`] are re-closed, larger deviations are rejected.
pub fn validate_dataset(
    rows: &[CompositionRow],
    weight_rows: &[WeightRow],
    config: &DatasetConfig,
) -> Result<GmrDataset> {
    let mut stock_names: Vec<String> = Vec::new();
    let mut stock_index: HashMap<&str, usize> = HashMap::new();
    for row in rows {
        if !stock_index.contains_key(row.stock.as_str()) {
            stock_index.insert(row.stock.as_str(), stock_names.len());
            stock_names.push(row.stock.clone());
        }
    }
    let k = stock_names.len();
    if k < 2 {
        return Err(Error::Schema(format!("need at least two stocks, found {k}")));
    }
    if k > MAX_STOCKS {
        return Err(Error::Limit(format!("{k} stocks exceeds the limit of {MAX_STOCKS}")));
    }

    let mut side: BTreeMap<i64, &WeightRow> = BTreeMap::new();
    for w in weight_rows {
        if side.insert(w.week, w).is_some() {
            return Err(Error::Schema(format!("week {} repeated in weight table", w.week)));
        }
    }
    if side.is_empty() {
        return Err(Error::Schema("weight table is empty".into()));
    }
    if side.len() > MAX_WEEKS {
        return Err(Error::Limit(format!(
            "{} weeks exceeds the limit of {MAX_WEEKS}",
            side.len()
        )));
    }

    let mut cells: BTreeMap<i64, Vec<Option<(f64, f64)>>> = BTreeMap::new();
    for row in rows {
        if !side.contains_key(&row.week) {
            return Err(Error::Schema(format!("week {} missing from weight table", row.week)));
        }
        let slot = &mut cells.entry(row.week).or_insert_with(|| vec![None; k])
            [stock_index[row.stock.as_str()]];
        if slot.is_some() {
            return Err(Error::Schema(format!(
                "duplicate row for week {} stock {}",
                row.week, row.stock
            )));
        }
        *slot = Some((row.p_hat, row.se));
    }

    let mut weeks = Vec::with_capacity(side.len());
    let mut weights = Vec::with_capacity(side.len());
    let mut week_ids = Vec::with_capacity(side.len());
    for (&week, w) in &side {
        let Some(cells) = cells.get(&week) else {
            return Err(Error::Schema(format!("week {week} has no composition rows")));
        };
        let mut p = Vec::with_capacity(k);
        let mut se = Vec::with_capacity(k);
        for (j, cell) in cells.iter().enumerate() {
            let Some((ph, s)) = cell else {
                return Err(Error::Schema(format!(
                    "week {week} is missing stock {}",
                    stock_names[j]
                )));
            };
            if !ph.is_finite() || *ph < 0.0 {
                return Err(Error::Invariant(format!(
                    "week {week} stock {}: p_hat = {ph}",
                    stock_names[j]
                )));
            }
            if !s.is_finite() || *s < 0.0 {
                return Err(Error::Invariant(format!(
                    "week {week} stock {}: se = {s}",
                    stock_names[j]
                )));
            }
            p.push(*ph);
            se.push(*s);
        }
        let sum: f64 = p.iter().sum();
        let deviation = (sum - 1.0).abs();
        if deviation > RECLOSE_TOLERANCE {
            return Err(Error::Invariant(format!(
                "week {week}: proportions sum to {sum}"
            )));
        }
        // Values already closed to rounding precision are kept bit-for-bit.
        let p_hat = if deviation > 1e-12 {
            close_composition(&p)?
        } else {
            Composition::new(p)?
        };
        if w.n == 0 {
            return Err(Error::Invariant(format!("week {week}: sample size is zero")));
        }
        weeks.push(CompositionEstimate::new(p_hat, se, w.n)?);
        weights.push(w.weight);
        week_ids.push(week);
    }

    let mut lake_mask = vec![false; k];
    for name in &config.lake_stocks {
        match stock_index.get(name.as_str()) {
            Some(&j) => lake_mask[j] = true,
            None => return Err(Error::Mask(format!("lake stock {name} not present in data"))),
        }
    }

    GmrDataset::new(weeks, weights, lake_mask, config.lake_count, stock_names, week_ids)
}
