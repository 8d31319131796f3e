//! Replicated simulation study comparing every escapement estimator.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generator::{simulate_dataset, SeRule, SimulationTruth};
use super::random::stream_rng;
use crate::calibration::{calibrate_all, CalibrationMode};
use crate::error::{Error, Result};
use crate::estimators::{mom_estimate, MomVariant};
use crate::inference::{bayes_estimate, McmcConfig, DEFAULT_PSI};
use crate::method::Method;

/// Largest fraction of failed replicates tolerated per method.
pub const MAX_FAILURE_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyOptions {
    pub mcmc: McmcConfig,
    pub psi: f64,
    pub se_rule: SeRule,
    pub calibration: CalibrationMode,
    /// Normal quantile used by the Wald intervals.
    pub z: f64,
    /// Credible level of the Bayesian intervals.
    pub level: f64,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            mcmc: McmcConfig::default(),
            psi: DEFAULT_PSI,
            se_rule: SeRule::default(),
            calibration: CalibrationMode::default(),
            z: 1.959_964,
            level: 0.95,
        }
    }
}

/// One method's result on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub method: Method,
    pub n_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seconds: f64,
    /// `None` for the moment estimators.
    pub converged: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateFailure {
    pub replicate: usize,
    pub method: Method,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyMetrics {
    pub method: Method,
    pub rbias: f64,
    pub rrmse: f64,
    pub cp: f64,
    pub lci: f64,
    pub mean_time: f64,
    /// Replicates that produced an estimate.
    pub replicates: usize,
    pub failures: usize,
}

impl StudyMetrics {
    /// Aggregates the records of `method` in the order given.
    ///
    /// Coverage uses strict inequalities, so a zero-width interval never
    /// covers.
    pub fn from_records<'a>(
        method: Method,
        n_true: f64,
        records: impl IntoIterator<Item = &'a ReplicateRecord>,
        failures: usize,
    ) -> Self {
        let (mut bias, mut sq, mut cover, mut len, mut time, mut m) = (0.0, 0.0, 0usize, 0.0, 0.0, 0usize);
        for r in records.into_iter().filter(|r| r.method == method) {
            let rel = (r.n_hat - n_true) / n_true;
            bias += rel;
            sq += rel * rel;
            cover += usize::from(r.ci_low < n_true && n_true < r.ci_high);
            len += r.ci_high - r.ci_low;
            time += r.seconds;
            m += 1;
        }
        let d = m.max(1) as f64;
        Self {
            method,
            rbias: bias / d,
            rrmse: (sq / d).sqrt(),
            cp: cover as f64 / d,
            lci: len / d,
            mean_time: time / d,
            replicates: m,
            failures,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyOutcome {
    pub metrics: Vec<StudyMetrics>,
    pub records: Vec<ReplicateRecord>,
    pub failures: Vec<ReplicateFailure>,
}

fn run_replicate(
    truth: &SimulationTruth,
    methods: &[Method],
    replicate: usize,
    seed: u64,
    options: &StudyOptions,
) -> Result<Vec<std::result::Result<ReplicateRecord, ReplicateFailure>>> {
    let mut rng = stream_rng(seed, replicate as u64);
    let season = simulate_dataset(truth, options.se_rule, &mut rng)?;
    let mcmc_seed: u64 = rng.random();
    let fail = |method: Method, e: &dyn std::fmt::Display| ReplicateFailure { replicate, method, error: e.to_string() };
    let calib = match calibrate_all(&season.dataset, options.calibration) {
        Ok(c) => c,
        Err(e) => return Ok(methods.iter().map(|&m| Err(fail(m, &e))).collect()),
    };
    Ok(methods
        .iter()
        .enumerate()
        .map(|(i, &method)| {
            let start = Instant::now();
            let outcome = match method {
                Method::Mom | Method::MomAlt | Method::MomNaive => {
                    let variant = match method {
                        Method::Mom => MomVariant::Plugin,
                        Method::MomAlt => MomVariant::Alt,
                        _ => MomVariant::Naive,
                    };
                    mom_estimate(&season.dataset, &calib, variant, options.z).map(|e| (e, None))
                }
                Method::Bayes { likelihood, prior } => {
                    let config = McmcConfig {
                        seed: mcmc_seed.wrapping_add((i as u64) << 32),
                        ..options.mcmc.clone()
                    };
                    bayes_estimate(&season.dataset, &calib, likelihood, prior, options.psi, &config, options.level)
                        .map(|fit| (fit.estimate, Some(fit.chains.converged)))
                }
            };
            let seconds = start.elapsed().as_secs_f64();
            match outcome {
                Ok((e, converged)) if e.n_hat.is_finite() => Ok(ReplicateRecord {
                    replicate,
                    method,
                    n_hat: e.n_hat,
                    ci_low: e.ci_low,
                    ci_high: e.ci_high,
                    seconds,
                    converged,
                }),
                Ok((e, _)) => Err(fail(method, &format!("non-finite estimate {}", e.n_hat))),
                Err(e) => Err(fail(method, &e)),
            }
        })
        .collect())
}

/// Simulates `replicates` datasets from `truth` and runs every method on
/// each. Replicate `r` draws from stream `(seed, r)`, so results do not
/// depend on scheduling; aggregation follows replicate order.
pub fn run_study(
    truth: &SimulationTruth,
    methods: &[Method],
    replicates: usize,
    seed: u64,
    options: &StudyOptions,
) -> Result<StudyOutcome> {
    truth.validate()?;
    if replicates == 0 || methods.is_empty() {
        return Err(Error::InvalidArgument("need at least one replicate and one method".into()));
    }
    let per_rep: Vec<_> = (0..replicates)
        .into_par_iter()
        .map(|r| run_replicate(truth, methods, r, seed, options))
        .collect::<Result<_>>()?;

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for outcome in per_rep.into_iter().flatten() {
        match outcome {
            Ok(r) => records.push(r),
            Err(f) => {
                log::warn!("replicate {} {}: {}", f.replicate, f.method, f.error);
                failures.push(f);
            }
        }
    }
    let mut metrics = Vec::with_capacity(methods.len());
    for &method in methods {
        let failed = failures.iter().filter(|f| f.method == method).count();
        if failed as f64 > MAX_FAILURE_FRACTION * replicates as f64 {
            return Err(Error::TooManyFailures { method: method.to_string(), failures: failed, replicates });
        }
        metrics.push(StudyMetrics::from_records(method, truth.n_true, &records, failed));
    }
    Ok(StudyOutcome { metrics, records, failures })
}
