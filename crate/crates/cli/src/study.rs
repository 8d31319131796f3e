//! Study configuration for `rdm-gmr simulate`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gmr_core::calibration::CalibrationMode;
use gmr_core::inference::{McmcConfig, DEFAULT_PSI};
use gmr_core::simulation::{SeRule, SimulationTruth};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudyConfig {
    pub replicates: usize,
    pub seed: Option<u64>,
    pub methods: Vec<String>,
    pub truth: TruthConfig,
    pub mcmc: McmcConfig,
    pub psi: f64,
    pub se_rule: SeRule,
    pub calibration: CalibrationMode,
    pub paper_z: bool,
    pub level: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            replicates: 200,
            seed: None,
            methods: vec!["all".into()],
            truth: TruthConfig::default(),
            mcmc: McmcConfig::default(),
            psi: DEFAULT_PSI,
            se_rule: SeRule::default(),
            calibration: CalibrationMode::default(),
            paper_z: false,
            level: 0.95,
        }
    }
}

/// Where the true season comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum TruthConfig {
    /// A named built-in truth; only `taku` exists.
    Builtin { name: String },
    Inline(SimulationTruth),
    /// Long-form table `week,stock,pi,lake,weight,n,lambda`.
    Csv { path: PathBuf, n_true: f64 },
}

impl Default for TruthConfig {
    fn default() -> Self {
        TruthConfig::Builtin { name: "taku".into() }
    }
}

#[derive(Debug, Deserialize)]
struct TruthRow {
    week: i64,
    stock: String,
    pi: f64,
    lake: bool,
    weight: f64,
    n: u32,
    lambda: f64,
}

impl TruthConfig {
    /// Resolves relative CSV paths against `base`.
    pub fn rebase(&mut self, base: &Path) {
        if let TruthConfig::Csv { path, .. } = self {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }

    pub fn input_path(&self) -> Option<&Path> {
        match self {
            TruthConfig::Csv { path, .. } => Some(path),
            _ => None,
        }
    }

    pub fn resolve(&self) -> Result<SimulationTruth> {
        let truth = match self {
            TruthConfig::Builtin { name } if name.eq_ignore_ascii_case("taku") => SimulationTruth::taku_shaped(),
            TruthConfig::Builtin { name } => bail!("unknown built-in truth {name:?}; the only one is \"taku\""),
            TruthConfig::Inline(t) => t.clone(),
            TruthConfig::Csv { path, n_true } => read_truth_csv(path, *n_true)?,
        };
        truth.validate().context("invalid simulation truth")?;
        Ok(truth)
    }
}

fn read_truth_csv(path: &Path, n_true: f64) -> Result<SimulationTruth> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let rows: Vec<TruthRow> = reader.deserialize().collect::<Result<_, _>>()?;
    let mut stocks: Vec<(String, bool)> = Vec::new();
    let mut weeks: BTreeMap<i64, (f64, u32, f64, BTreeMap<usize, f64>)> = BTreeMap::new();
    for r in &rows {
        let k = match stocks.iter().position(|(s, _)| *s == r.stock) {
            Some(k) => {
                if stocks[k].1 != r.lake {
                    bail!("stock {:?} is marked both lake and river", r.stock);
                }
                k
            }
            None => {
                stocks.push((r.stock.clone(), r.lake));
                stocks.len() - 1
            }
        };
        let week = weeks.entry(r.week).or_insert((r.weight, r.n, r.lambda, BTreeMap::new()));
        if (week.0, week.1, week.2) != (r.weight, r.n, r.lambda) {
            bail!("week {} has inconsistent weight, n or lambda", r.week);
        }
        if week.3.insert(k, r.pi).is_some() {
            bail!("duplicate row for week {} stock {:?}", r.week, r.stock);
        }
    }
    let mut truth = SimulationTruth {
        pi: Vec::new(),
        n_true,
        weights: Vec::new(),
        n: Vec::new(),
        lambda: Vec::new(),
        lake_mask: stocks.iter().map(|s| s.1).collect(),
        stock_names: stocks.iter().map(|s| s.0.clone()).collect(),
    };
    for (week, (w, n, l, cells)) in weeks {
        if cells.len() != stocks.len() {
            bail!("week {week} lists {} of {} stocks", cells.len(), stocks.len());
        }
        truth.pi.push(cells.into_values().collect());
        truth.weights.push(w);
        truth.n.push(n);
        truth.lambda.push(l);
    }
    Ok(truth)
}
