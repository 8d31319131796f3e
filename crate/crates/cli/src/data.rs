use std::path::Path;

use anyhow::{bail, Context, Result};
use gmr_core::dataset::{load_dataset, DatasetConfig};
use gmr_core::GmrDataset;
use serde::de::DeserializeOwned;

use crate::DataArgs;

/// Parses a TOML or JSON file, chosen by extension.
pub fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        serde_json::from_str(&text).map_err(anyhow::Error::from)
    } else {
        toml::from_str(&text).map_err(anyhow::Error::from)
    };
    parsed.with_context(|| format!("parsing {}", path.display()))
}

#[derive(serde::Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct PartialConfig {
    #[serde(rename = "M")]
    lake_count: Option<f64>,
    lake_stocks: Option<Vec<String>>,
}

pub fn dataset_config(args: &DataArgs) -> Result<DatasetConfig> {
    let file: PartialConfig = match &args.config {
        Some(p) => read_config(p)?,
        None => PartialConfig::default(),
    };
    let lake_count = args.lake_count.or(file.lake_count);
    let lake_stocks = if args.mask.is_empty() { file.lake_stocks } else { Some(args.mask.clone()) };
    match (lake_count, lake_stocks) {
        (Some(lake_count), Some(lake_stocks)) => Ok(DatasetConfig { lake_count, lake_stocks }),
        (None, _) => bail!("the lake-type count is missing: pass --M or set M in --config"),
        (_, None) => bail!("the lake-type stocks are missing: pass --mask or set lake_stocks in --config"),
    }
}

pub fn load(args: &DataArgs) -> Result<(GmrDataset, DatasetConfig)> {
    let config = dataset_config(args)?;
    let ds = load_dataset(&args.data, &args.weights, &config)
        .with_context(|| format!("loading {} and {}", args.data.display(), args.weights.display()))?;
    Ok((ds, config))
}
