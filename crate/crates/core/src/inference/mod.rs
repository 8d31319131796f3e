//! Bayesian escapement under the RDM and MMD likelihoods.

mod density;
mod diagnostics;
mod sampler;

pub use density::{
    ar1_log_prior, clamp_observation, dirichlet_log_density, log_exp_gamma1, mmd_log_likelihood,
    multinomial_log_pmf, rdm_log_likelihood, softmax, softmax_rows, CLAMP_HIGH, CLAMP_LOW,
};
pub use diagnostics::{
    escapement_for_draw, escapement_from_draws, gelman_rubin, posterior_summary, quantile_sorted,
    PosteriorSummary, MAX_REJECTED_FRACTION,
};
pub use sampler::{run_mcmc, ChainDraws, McmcConfig, ModelSpec, PosteriorChains, DEFAULT_PSI};

use crate::calibration::CalibrationResult;
use crate::dataset::GmrDataset;
use crate::error::Result;
use crate::estimators::EscapementEstimate;
use crate::method::{Likelihood, Method, Prior};

/// Posterior escapement estimate plus the chains it came from.
#[derive(Debug, Clone)]
pub struct BayesFit {
    pub estimate: EscapementEstimate,
    pub summary: PosteriorSummary,
    pub chains: PosteriorChains,
}

/// Runs the sampler and summarises the escapement draws with an
/// equal-tailed credible interval at `level`.
pub fn bayes_estimate(
    dataset: &GmrDataset,
    calibration: &[CalibrationResult],
    likelihood: Likelihood,
    prior: Prior,
    psi: f64,
    config: &McmcConfig,
    level: f64,
) -> Result<BayesFit> {
    let spec = ModelSpec::from_calibration(likelihood, prior, psi, calibration)?;
    let chains = run_mcmc(dataset, &spec, config)?;
    let summary = posterior_summary(&chains.n_draws(), level)?;
    let estimate = EscapementEstimate {
        method: Method::Bayes { likelihood, prior },
        n_hat: summary.mean,
        sd: summary.sd,
        ci_low: summary.ci_low,
        ci_high: summary.ci_high,
    };
    Ok(BayesFit { estimate, summary, chains })
}
