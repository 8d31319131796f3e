//! Method-of-moments escapement and its variance estimators.

use log::debug;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::calibration::CalibrationResult;
use crate::composition::CompositionEstimate;
use crate::dataset::GmrDataset;
use crate::error::{Error, Result};
use crate::method::Method;

/// Interval half-width multiplier printed in published GMR tables.
pub const PAPER_Z: f64 = 1.96;

const MIN_LAKE_PROPORTION: f64 = 1e-12;

/// Point estimate and interval for the season's total escapement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapementEstimate {
    pub method: Method,
    pub n_hat: f64,
    pub sd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// `beta_tilde * p * (1 - p)`.
pub fn sigma2_plugin(p_hat: f64, beta_tilde: f64) -> f64 {
    beta_tilde * p_hat * (1.0 - p_hat)
}

/// `(1 + lambda / n) * s^2`; never smaller than `s^2`.
pub fn sigma2_alt(s2: f64, lambda: f64, n: u32) -> f64 {
    (1.0 + lambda / n as f64) * s2
}

/// Standard error of the summed lake-type proportion when only per-stock
/// errors are reported.
///
/// Takes the larger of the Dirichlet-implied value (cross terms
/// `-beta_tilde p_k p_l`) and the perfect negative correlation bound. Negative
/// radicands are clamped to zero.
pub fn pooled_lake_se(week: &CompositionEstimate, beta_tilde: f64, lake_mask: &[bool]) -> f64 {
    let lakes: Vec<usize> = lake_mask
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(k, _)| k)
        .collect();
    if lakes.len() == 1 {
        return week.se[lakes[0]];
    }
    let var_sum: f64 = lakes.iter().map(|&k| week.se[k].powi(2)).sum();
    let mut dirichlet_cross = 0.0;
    let mut bound_cross = 0.0;
    for (i, &k) in lakes.iter().enumerate() {
        for &l in &lakes[i + 1..] {
            dirichlet_cross += beta_tilde * week.p_hat[k] * week.p_hat[l];
            bound_cross += week.se[k] * week.se[l];
        }
    }
    let r1 = var_sum - 2.0 * dirichlet_cross;
    let r2 = var_sum - 2.0 * bound_cross;
    if r1 < 0.0 || r2 < 0.0 {
        debug!("pooled lake SE: clamping negative radicand ({r1:.3e}, {r2:.3e})");
    }
    r1.max(0.0).sqrt().max(r2.max(0.0).sqrt())
}

fn weighted_lake(weights: &[f64], p_lake: &[f64]) -> Result<f64> {
    if weights.len() != p_lake.len() {
        return Err(Error::LengthMismatch(format!(
            "{} weights, {} lake proportions",
            weights.len(),
            p_lake.len()
        )));
    }
    let d: f64 = weights.iter().zip(p_lake).map(|(w, p)| w * p).sum();
    if d <= MIN_LAKE_PROPORTION {
        return Err(Error::ZeroLakeProportion(d));
    }
    Ok(d)
}

/// `M / sum_t w_t p_t^lake`.
pub fn mom_escapement(lake_count: f64, weights: &[f64], p_lake: &[f64]) -> Result<f64> {
    Ok(lake_count / weighted_lake(weights, p_lake)?)
}

/// Delta-method variance `(N / sum w p)^2 * sum w^2 sigma^2`.
pub fn mom_variance(n_hat: f64, weights: &[f64], p_lake: &[f64], sigma2_lake: &[f64]) -> Result<f64> {
    let d = weighted_lake(weights, p_lake)?;
    if sigma2_lake.len() != weights.len() {
        return Err(Error::LengthMismatch(format!(
            "{} weights, {} lake variances",
            weights.len(),
            sigma2_lake.len()
        )));
    }
    if let Some(v) = sigma2_lake.iter().find(|v| v.is_nan() || **v < 0.0) {
        return Err(Error::InvalidArgument(format!("lake variance {v} is negative")));
    }
    let s: f64 = weights.iter().zip(sigma2_lake).map(|(w, v)| w * w * v).sum();
    Ok((n_hat / d).powi(2) * s)
}

/// Which weekly lake-proportion variance feeds [`mom_variance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MomVariant {
    /// `beta_tilde p (1 - p)`.
    Plugin,
    /// `(1 + lambda / n) (s^lake)^2`.
    Alt,
    /// `(s^lake)^2`, sample-level only.
    Naive,
}

impl MomVariant {
    pub fn method(self) -> Method {
        match self {
            MomVariant::Plugin => Method::Mom,
            MomVariant::Alt => Method::MomAlt,
            MomVariant::Naive => Method::MomNaive,
        }
    }
}

/// Per-week variance of the lake-type proportion under `variant`.
///
/// `reported_lake_se` is used when the data source supplies lake-level
/// standard errors; otherwise they are pooled from the per-stock errors.
pub fn lake_variances(
    dataset: &GmrDataset,
    calibration: &[CalibrationResult],
    variant: MomVariant,
    reported_lake_se: Option<&[f64]>,
) -> Result<Vec<f64>> {
    if calibration.len() != dataset.num_weeks() {
        return Err(Error::LengthMismatch(format!(
            "{} weeks, {} calibrations",
            dataset.num_weeks(),
            calibration.len()
        )));
    }
    let p_lake = dataset.lake_proportions();
    Ok((0..dataset.num_weeks())
        .map(|t| {
            let cal = &calibration[t];
            let s_lake = || match reported_lake_se {
                Some(se) => se[t],
                None => pooled_lake_se(&dataset.weeks[t], cal.beta_tilde, &dataset.lake_mask),
            };
            match variant {
                MomVariant::Plugin => sigma2_plugin(p_lake[t], cal.beta_tilde),
                MomVariant::Alt => sigma2_alt(s_lake().powi(2), cal.lambda_hat, cal.n),
                MomVariant::Naive => s_lake().powi(2),
            }
        })
        .collect())
}

/// Two-sided standard normal quantile for a central interval.
pub fn z_for_level(level: f64) -> f64 {
    assert!(level > 0.0 && level < 1.0, "level must lie in (0, 1)");
    Normal::standard().inverse_cdf((1.0 + level) / 2.0)
}

/// `n_hat -/+ z sqrt(variance)`.
pub fn wald_interval(n_hat: f64, variance: f64, z: f64) -> (f64, f64) {
    let h = z * variance.max(0.0).sqrt();
    (n_hat - h, n_hat + h)
}

/// Full method-of-moments estimate for one variance variant.
pub fn mom_estimate(
    dataset: &GmrDataset,
    calibration: &[CalibrationResult],
    variant: MomVariant,
    z: f64,
) -> Result<EscapementEstimate> {
    let p_lake = dataset.lake_proportions();
    let n_hat = mom_escapement(dataset.lake_count, &dataset.weights, &p_lake)?;
    let sigma2 = lake_variances(dataset, calibration, variant, None)?;
    let var = mom_variance(n_hat, &dataset.weights, &p_lake, &sigma2)?;
    let (ci_low, ci_high) = wald_interval(n_hat, var, z);
    Ok(EscapementEstimate { method: variant.method(), n_hat, sd: var.sqrt(), ci_low, ci_high })
}
