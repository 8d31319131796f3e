//! Plug-in Dirichlet concentration from reported standard errors.
//!
//! Each week's squared standard errors are regressed through the origin on
//! `q_k = p_k (1 - p_k)`. The slope is `beta = 1 / (lambda + 1)`; the
//! population-level counterpart `beta_tilde` folds in multinomial sampling of
//! `n` fish.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::composition::{Composition, CompositionEstimate};
use crate::dataset::GmrDataset;
use crate::error::{Error, Result};

/// One `(q, s^2)` point of the mean-variance regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub q: f64,
    pub s2: f64,
}

pub fn fit_points(p_obs: &Composition, s_obs: &[f64]) -> Vec<FitPoint> {
    p_obs
        .as_slice()
        .iter()
        .zip(s_obs)
        .map(|(&p, &s)| FitPoint { q: p * (1.0 - p), s2: s * s })
        .collect()
}

/// Least-squares slope through the origin, clamped to `(0, 1]`.
fn slope_from_points(points: &[FitPoint]) -> Result<(f64, bool)> {
    let sxx: f64 = points.iter().map(|p| p.q * p.q).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit);
    }
    let sxy: f64 = points.iter().map(|p| p.q * p.s2).sum();
    if sxy <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let beta = sxy / sxx;
    if beta > 1.0 {
        warn!("fitted beta {beta:.4} exceeds 1; clamping to 1 (lambda = 0)");
        return Ok((1.0, true));
    }
    Ok((beta, false))
}

/// Minimiser of `sum_k (s_k^2 - beta q_k)^2`, clamped to `(0, 1]`.
pub fn estimate_beta(p_obs: &Composition, s_obs: &[f64]) -> Result<f64> {
    check_lengths(p_obs, s_obs)?;
    slope_from_points(&fit_points(p_obs, s_obs)).map(|(b, _)| b)
}

/// `lambda = 1 / beta - 1` for the fitted slope.
pub fn estimate_lambda(p_obs: &Composition, s_obs: &[f64]) -> Result<f64> {
    estimate_beta(p_obs, s_obs).map(|b| 1.0 / b - 1.0)
}

fn check_lengths(p_obs: &Composition, s_obs: &[f64]) -> Result<()> {
    if p_obs.len() != s_obs.len() {
        return Err(Error::LengthMismatch(format!(
            "{} proportions, {} standard errors",
            p_obs.len(),
            s_obs.len()
        )));
    }
    Ok(())
}

/// Population-level variance multiplier `((n - 1) / n) beta + 1 / n`.
pub fn beta_tilde(beta: f64, n: u32) -> f64 {
    debug_assert!(beta > 0.0 && beta <= 1.0 && n >= 1);
    let n = n as f64;
    (n - 1.0) / n * beta + 1.0 / n
}

/// `1 + lambda / n`, the ratio `beta_tilde / beta`.
pub fn inflation_factor(lambda: f64, n: u32) -> f64 {
    debug_assert!(lambda >= 0.0);
    1.0 + lambda / n as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub n: u32,
    pub beta_hat: f64,
    pub lambda_hat: f64,
    pub beta_tilde: f64,
    pub lambda_tilde: f64,
    pub inflation: f64,
    /// True when the raw slope exceeded 1 and was clamped.
    pub clamped: bool,
    pub fit_points: Vec<FitPoint>,
}

impl CalibrationResult {
    fn from_beta(beta_hat: f64, clamped: bool, n: u32, fit_points: Vec<FitPoint>) -> Self {
        let lambda_hat = 1.0 / beta_hat - 1.0;
        let bt = beta_tilde(beta_hat, n);
        Self {
            n,
            beta_hat,
            lambda_hat,
            beta_tilde: bt,
            lambda_tilde: 1.0 / bt - 1.0,
            inflation: inflation_factor(lambda_hat, n),
            clamped,
            fit_points,
        }
    }
}

pub fn calibrate_week(week: &CompositionEstimate) -> Result<CalibrationResult> {
    let points = fit_points(&week.p_hat, &week.se);
    let (beta, clamped) = slope_from_points(&points)?;
    Ok(CalibrationResult::from_beta(beta, clamped, week.n, points))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CalibrationMode {
    /// One slope per week from that week's K points.
    #[default]
    PerWeek,
    /// A single slope fitted to every week's points.
    Pooled,
}

/// Calibrates every week; failures stay per-week so callers can report them.
pub fn calibrate_dataset(
    dataset: &GmrDataset,
    mode: CalibrationMode,
) -> Vec<Result<CalibrationResult>> {
    match mode {
        CalibrationMode::PerWeek => dataset.weeks.iter().map(calibrate_week).collect(),
        CalibrationMode::Pooled => {
            let all: Vec<FitPoint> = dataset
                .weeks
                .iter()
                .flat_map(|w| fit_points(&w.p_hat, &w.se))
                .collect();
            match slope_from_points(&all) {
                Ok((beta, clamped)) => dataset
                    .weeks
                    .iter()
                    .map(|w| {
                        Ok(CalibrationResult::from_beta(
                            beta,
                            clamped,
                            w.n,
                            fit_points(&w.p_hat, &w.se),
                        ))
                    })
                    .collect(),
                Err(e) => {
                    let msg = e.to_string();
                    dataset
                        .weeks
                        .iter()
                        .map(|_| Err(pooled_error(&e, &msg)))
                        .collect()
                }
            }
        }
    }
}

fn pooled_error(e: &Error, msg: &str) -> Error {
    match e {
        Error::DegenerateFit => Error::DegenerateFit,
        Error::ZeroVariance => Error::ZeroVariance,
        _ => Error::InvalidArgument(msg.to_string()),
    }
}

/// Calibrates every week, failing on the first degenerate week.
pub fn calibrate_all(dataset: &GmrDataset, mode: CalibrationMode) -> Result<Vec<CalibrationResult>> {
    calibrate_dataset(dataset, mode)
        .into_iter()
        .zip(&dataset.week_ids)
        .map(|(r, week)| {
            r.map_err(|e| Error::InvalidArgument(format!("calibration failed for week {week}: {e}")))
        })
        .collect()
}

/// Per-week fit report for the `s^2 ~ q` proportionality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeekDiagnostic {
    pub week: i64,
    pub points: Vec<FitPoint>,
    pub slope: Option<f64>,
    /// Centered coefficient of determination of the through-origin fit.
    pub r_squared: Option<f64>,
    pub warning: Option<String>,
}

pub const DEFAULT_R2_THRESHOLD: f64 = 0.8;

/// Centered `1 - SSE / SST` for the fit `s2 = slope * q`.
///
/// A week whose variances are all equal has no spread to explain; it scores 1
/// only when the fit is exact and 0 otherwise.
pub fn r_squared(points: &[FitPoint], slope: f64) -> f64 {
    let m = points.len() as f64;
    let mean = points.iter().map(|p| p.s2).sum::<f64>() / m;
    let sse: f64 = points.iter().map(|p| (p.s2 - slope * p.q).powi(2)).sum();
    let sst: f64 = points.iter().map(|p| (p.s2 - mean).powi(2)).sum();
    if sst <= 0.0 {
        return if sse <= f64::EPSILON * f64::EPSILON { 1.0 } else { 0.0 };
    }
    1.0 - sse / sst
}

pub fn mean_variance_diagnostic(dataset: &GmrDataset, threshold: f64) -> Vec<WeekDiagnostic> {
    dataset
        .weeks
        .iter()
        .zip(&dataset.week_ids)
        .map(|(w, &week)| {
            let points = fit_points(&w.p_hat, &w.se);
            let sxx: f64 = points.iter().map(|p| p.q * p.q).sum();
            if sxx <= 0.0 {
                return WeekDiagnostic {
                    week,
                    points,
                    slope: None,
                    r_squared: None,
                    warning: Some("degenerate: every p_hat is 0 or 1".into()),
                };
            }
            let slope = points.iter().map(|p| p.q * p.s2).sum::<f64>() / sxx;
            let r2 = r_squared(&points, slope);
            let warning = (r2 < threshold).then(|| {
                format!("R^2 = {r2:.3} below {threshold}; Dirichlet mean-variance relation is doubtful")
            });
            WeekDiagnostic { week, points, slope: Some(slope), r_squared: Some(r2), warning }
        })
        .collect()
}
