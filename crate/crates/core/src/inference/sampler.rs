//! Metropolis-within-Gibbs sampler over the softmax pre-image of the weekly
//! compositions.
//!
//! Each sweep updates every `z[t][k]` with an adaptive random-walk proposal,
//! shifts each week's row along the softmax-invariant direction, moves latent
//! counts for the RDM likelihood, and updates `phi` on the `atanh` scale for
//! the AR(1) prior. Proposal scales adapt by Robbins-Monro during the first
//! half of the initial run and stay frozen afterwards. If the chains have not
//! converged, the run is doubled until `max_iters`; only the second half of
//! the full run is ever kept.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::density::{clamp_observation, dirichlet_log_density_ln, log_exp_gamma1, normal_log_pdf, softmax_into};
use super::diagnostics::{escapement_for_draw, gelman_rubin};
use crate::calibration::CalibrationResult;
use crate::dataset::GmrDataset;
use crate::error::{Error, Result};
use crate::method::{Likelihood, Prior};

pub const DEFAULT_PSI: f64 = 2.0;

/// Observation model, prior and plug-in concentrations for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub likelihood: Likelihood,
    pub prior: Prior,
    /// Marginal standard deviation of the AR(1) field.
    pub psi: f64,
    /// `lambda_hat` per week for RDM, `lambda_tilde` for MMD.
    pub lambda_per_week: Vec<f64>,
}

impl ModelSpec {
    pub fn new(likelihood: Likelihood, prior: Prior, psi: f64, lambda_per_week: Vec<f64>) -> Result<Self> {
        if !(psi > 0.0 && psi.is_finite()) {
            return Err(Error::InvalidArgument(format!("psi = {psi} must be positive")));
        }
        if let Some(l) = lambda_per_week.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "concentration {l} must be positive for a Dirichlet likelihood"
            )));
        }
        Ok(Self { likelihood, prior, psi, lambda_per_week })
    }

    /// Picks `lambda_hat` or `lambda_tilde` from calibration output.
    pub fn from_calibration(
        likelihood: Likelihood,
        prior: Prior,
        psi: f64,
        calibration: &[CalibrationResult],
    ) -> Result<Self> {
        let lambda = calibration
            .iter()
            .map(|c| match likelihood {
                Likelihood::Rdm => c.lambda_hat,
                Likelihood::Mmd => c.lambda_tilde,
            })
            .collect();
        Self::new(likelihood, prior, psi, lambda)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcConfig {
    pub chains: usize,
    /// Length of the first run; adaptation covers its first half.
    pub initial_iters: usize,
    /// Upper bound on the doubled run length.
    pub max_iters: usize,
    /// Kept draws per chain after thinning.
    pub keep: usize,
    pub target_accept: f64,
    pub rhat_threshold: f64,
    pub seed: u64,
    /// Drops the likelihood so the chains sample the prior.
    pub prior_only: bool,
    /// Standard deviation of the per-chain jitter on initial `z`.
    pub init_jitter: f64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            chains: 3,
            initial_iters: 4_000,
            max_iters: 64_000,
            keep: 10_000,
            target_accept: 0.44,
            rhat_threshold: 1.1,
            seed: 0,
            prior_only: false,
            init_jitter: 1.0,
        }
    }
}

/// Kept draws of one chain.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainDraws {
    /// Row-major `weeks x stocks` block per draw.
    pub pi: Vec<f64>,
    pub n: Vec<f64>,
    /// Empty under the flat Dirichlet prior.
    pub phi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorChains {
    pub weeks: usize,
    pub stocks: usize,
    pub chains: Vec<ChainDraws>,
    pub thin: usize,
    pub total_iters: usize,
    pub seed: u64,
    pub rhat_n: Option<f64>,
    pub rhat_phi: Option<f64>,
    pub converged: bool,
    pub acceptance_rate: f64,
}

impl PosteriorChains {
    pub fn kept_per_chain(&self) -> usize {
        self.chains.first().map_or(0, |c| c.n.len())
    }

    /// Escapement draws of every chain, concatenated.
    pub fn n_draws(&self) -> Vec<f64> {
        self.chains.iter().flat_map(|c| c.n.iter().copied()).collect()
    }

    /// Every kept `pi` block, chain by chain.
    pub fn pi_draws(&self) -> impl Iterator<Item = &[f64]> {
        let block = self.weeks * self.stocks;
        self.chains.iter().flat_map(move |c| c.pi.chunks_exact(block))
    }

    /// Draws of `pi[t][k]` across all chains.
    pub fn pi_cell(&self, t: usize, k: usize) -> Vec<f64> {
        let i = t * self.stocks + k;
        self.pi_draws().map(|d| d[i]).collect()
    }

    /// Posterior mean of every `pi[t][k]`, row-major.
    pub fn pi_mean(&self) -> Vec<f64> {
        let block = self.weeks * self.stocks;
        let mut acc = vec![0.0; block];
        let mut m = 0usize;
        for d in self.pi_draws() {
            acc.iter_mut().zip(d).for_each(|(a, v)| *a += v);
            m += 1;
        }
        acc.iter_mut().for_each(|a| *a /= m as f64);
        acc
    }
}

struct Model<'a> {
    weeks: usize,
    stocks: usize,
    ln_p: Vec<f64>,
    n: Vec<u32>,
    lambda: Vec<f64>,
    likelihood: Likelihood,
    prior: Prior,
    psi2: f64,
    prior_only: bool,
    weights: &'a [f64],
    lake_mask: &'a [bool],
    lake_count: f64,
    target: f64,
}

impl Model<'_> {
    fn uses_counts(&self) -> bool {
        self.likelihood == Likelihood::Rdm && !self.prior_only
    }

    /// Likelihood terms of week `t` that depend on `pi`.
    fn week_loglik(&self, t: usize, pi: &[f64], x: &[u32]) -> f64 {
        if self.prior_only {
            return 0.0;
        }
        let k = self.stocks;
        match self.likelihood {
            Likelihood::Mmd => {
                let lam = self.lambda[t];
                dirichlet_log_density_ln(&self.ln_p[t * k..(t + 1) * k], pi.iter().map(|&p| lam * p))
            }
            Likelihood::Rdm => x.iter().zip(pi).map(|(&c, &p)| c as f64 * p.ln()).sum(),
        }
    }

    /// Prior terms that involve `z[t][k] = v`, neighbours held fixed.
    fn prior_local(&self, z: &[f64], phi: f64, t: usize, k: usize, v: f64) -> f64 {
        match self.prior {
            Prior::DirichletFlat => log_exp_gamma1(v),
            Prior::Ar1 => {
                let s = self.stocks;
                let var_e = (1.0 - phi * phi) * self.psi2;
                let mut acc = if t == 0 {
                    normal_log_pdf(v, 0.0, self.psi2)
                } else {
                    normal_log_pdf(v, phi * z[(t - 1) * s + k], var_e)
                };
                if t + 1 < self.weeks {
                    acc += normal_log_pdf(z[(t + 1) * s + k], phi * v, var_e);
                }
                acc
            }
        }
    }

    fn ar1_full(&self, z: &[f64], phi: f64) -> f64 {
        let s = self.stocks;
        let var_e = (1.0 - phi * phi) * self.psi2;
        let mut acc = 0.0;
        for t in 0..self.weeks {
            for k in 0..s {
                let v = z[t * s + k];
                acc += if t == 0 {
                    normal_log_pdf(v, 0.0, self.psi2)
                } else {
                    normal_log_pdf(v, phi * z[(t - 1) * s + k], var_e)
                };
            }
        }
        acc
    }

    /// Change in the full RDM week term when `delta` counts move `from -> to`.
    fn count_move_delta(&self, t: usize, x: &[u32], pi: &[f64], from: usize, to: usize, delta: u32) -> f64 {
        let s = self.stocks;
        let scale = self.lambda[t] / self.n[t] as f64;
        let ln_p = &self.ln_p[t * s..(t + 1) * s];
        let term = |j: usize, c: u32| -> f64 {
            let a = scale * c as f64;
            (a - 1.0) * ln_p[j] - ln_gamma(a) + c as f64 * pi[j].ln() - ln_gamma(c as f64 + 1.0)
        };
        term(from, x[from] - delta) + term(to, x[to] + delta) - term(from, x[from]) - term(to, x[to])
    }
}

struct Chain {
    rng: ChaCha8Rng,
    z: Vec<f64>,
    pi: Vec<f64>,
    x: Vec<u32>,
    phi: f64,
    week_ll: Vec<f64>,
    ls_z: Vec<f64>,
    ls_shift: Vec<f64>,
    ls_phi: f64,
    iter: usize,
    accepted: u64,
    proposed: u64,
    row: Vec<f64>,
    row_pi: Vec<f64>,
}

fn initial_counts(n: u32, p: &[f64]) -> Result<Vec<u32>> {
    let k = p.len();
    if (n as usize) < k {
        return Err(Error::Initialization(format!(
            "sample size {n} is smaller than the {k} stocks that each need a count"
        )));
    }
    let mut x: Vec<u32> = p.iter().map(|&v| ((v * n as f64).round() as u32).max(1)).collect();
    let mut sum: u32 = x.iter().sum();
    while sum > n {
        let j = (0..k).filter(|&j| x[j] > 1).max_by_key(|&j| x[j]).expect("sum > n >= k");
        x[j] -= 1;
        sum -= 1;
    }
    while sum < n {
        let j = (0..k)
            .max_by(|&a, &b| {
                let da = p[a] * n as f64 - x[a] as f64;
                let db = p[b] * n as f64 - x[b] as f64;
                da.total_cmp(&db)
            })
            .expect("k >= 1");
        x[j] += 1;
        sum += 1;
    }
    Ok(x)
}

impl Chain {
    fn new(model: &Model, seed: u64, init_counts: &[u32], jitter: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (t_len, k) = (model.weeks, model.stocks);
        let z: Vec<f64> = model
            .ln_p
            .iter()
            .map(|&lp| lp.max(-20.0) + jitter * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let mut pi = vec![0.0; t_len * k];
        for t in 0..t_len {
            softmax_into(&z[t * k..(t + 1) * k], &mut pi[t * k..(t + 1) * k]);
        }
        let phi = if model.prior == Prior::Ar1 { rng.random_range(-0.5..0.5) } else { 0.0 };
        let x = init_counts.to_vec();
        let week_ll = (0..t_len)
            .map(|t| model.week_loglik(t, &pi[t * k..(t + 1) * k], x.get(t * k..(t + 1) * k).unwrap_or(&[])))
            .collect();
        Self {
            rng,
            z,
            pi,
            x,
            phi,
            week_ll,
            ls_z: vec![(0.3f64).ln(); t_len * k],
            ls_shift: vec![(0.5f64).ln(); t_len],
            ls_phi: (0.3f64).ln(),
            iter: 0,
            accepted: 0,
            proposed: 0,
            row: vec![0.0; k],
            row_pi: vec![0.0; k],
        }
    }

    fn counts(&self, t: usize, k: usize) -> &[u32] {
        self.x.get(t * k..(t + 1) * k).unwrap_or(&[])
    }

    fn accept(&mut self, log_ratio: f64) -> bool {
        let u: f64 = self.rng.random();
        u.ln() < log_ratio
    }

    fn sweep(&mut self, model: &Model, adapt: bool) {
        let (t_len, k) = (model.weeks, model.stocks);
        let gamma = (self.iter as f64 + 1.0).powf(-0.6);
        let target = model.target;

        for t in 0..t_len {
            for j in 0..k {
                let i = t * k + j;
                let old = self.z[i];
                let step: f64 = self.rng.sample(StandardNormal);
                let prop = old + self.ls_z[i].exp() * step;
                self.row.copy_from_slice(&self.z[t * k..(t + 1) * k]);
                self.row[j] = prop;
                softmax_into(&self.row, &mut self.row_pi);
                let new_ll = model.week_loglik(t, &self.row_pi, self.counts(t, k));
                let log_ratio = new_ll - self.week_ll[t] + model.prior_local(&self.z, self.phi, t, j, prop)
                    - model.prior_local(&self.z, self.phi, t, j, old);
                let ok = self.accept(log_ratio);
                if ok {
                    self.z[i] = prop;
                    self.pi[t * k..(t + 1) * k].copy_from_slice(&self.row_pi);
                    self.week_ll[t] = new_ll;
                }
                self.proposed += 1;
                self.accepted += ok as u64;
                if adapt {
                    self.ls_z[i] += gamma * (ok as u8 as f64 - target);
                }
            }

            // Shift along the direction softmax cannot see; only the prior moves.
            let step: f64 = self.rng.sample(StandardNormal);
            let c = self.ls_shift[t].exp() * step;
            let mut log_ratio = 0.0;
            for j in 0..k {
                let v = self.z[t * k + j];
                log_ratio += model.prior_local(&self.z, self.phi, t, j, v + c)
                    - model.prior_local(&self.z, self.phi, t, j, v);
            }
            let ok = self.accept(log_ratio);
            if ok {
                self.z[t * k..(t + 1) * k].iter_mut().for_each(|v| *v += c);
            }
            if adapt {
                self.ls_shift[t] += gamma * (ok as u8 as f64 - target);
            }

            if model.uses_counts() {
                for _ in 0..k {
                    let from = self.rng.random_range(0..k);
                    let mut to = self.rng.random_range(0..k - 1);
                    if to >= from {
                        to += 1;
                    }
                    let delta = self.rng.random_range(1..=2u32);
                    if self.x[t * k + from] < 1 + delta {
                        continue;
                    }
                    let log_ratio = model.count_move_delta(
                        t,
                        &self.x[t * k..(t + 1) * k],
                        &self.pi[t * k..(t + 1) * k],
                        from,
                        to,
                        delta,
                    );
                    if self.accept(log_ratio) {
                        self.x[t * k + from] -= delta;
                        self.x[t * k + to] += delta;
                        self.week_ll[t] =
                            model.week_loglik(t, &self.pi[t * k..(t + 1) * k], &self.x[t * k..(t + 1) * k]);
                    }
                }
            }
        }

        if model.prior == Prior::Ar1 {
            let u = self.phi.atanh();
            let step: f64 = self.rng.sample(StandardNormal);
            let prop = (u + self.ls_phi.exp() * step).tanh();
            let ok = if prop.abs() < 1.0 {
                let log_ratio = model.ar1_full(&self.z, prop) - model.ar1_full(&self.z, self.phi)
                    + (1.0 - prop * prop).ln()
                    - (1.0 - self.phi * self.phi).ln();
                self.accept(log_ratio)
            } else {
                false
            };
            if ok {
                self.phi = prop;
            }
            if adapt {
                self.ls_phi += gamma * (ok as u8 as f64 - target);
            }
        }
        self.iter += 1;
    }

    /// Runs `iters` sweeps, keeping every `thin`-th draw from `record_from` on.
    fn run(&mut self, model: &Model, iters: usize, adapt_until: usize, record_from: usize, thin: usize) -> ChainDraws {
        let mut draws = ChainDraws::default();
        for _ in 0..iters {
            let global = self.iter;
            self.sweep(model, global < adapt_until);
            if global >= record_from && (global - record_from) % thin == thin - 1 {
                let n = escapement_for_draw(&self.pi, model.weights, model.lake_mask, model.lake_count)
                    .unwrap_or(f64::NAN);
                draws.pi.extend_from_slice(&self.pi);
                draws.n.push(n);
                if model.prior == Prior::Ar1 {
                    draws.phi.push(self.phi);
                }
            }
        }
        draws
    }
}

/// Samples the posterior of the weekly compositions and the total escapement.
pub fn run_mcmc(dataset: &GmrDataset, spec: &ModelSpec, config: &McmcConfig) -> Result<PosteriorChains> {
    let (t_len, k) = (dataset.num_weeks(), dataset.num_stocks());
    if spec.lambda_per_week.len() != t_len {
        return Err(Error::LengthMismatch(format!(
            "{t_len} weeks but {} concentrations",
            spec.lambda_per_week.len()
        )));
    }
    if config.chains == 0 || config.keep == 0 || config.initial_iters < 20 {
        return Err(Error::InvalidArgument("need chains >= 1, keep >= 1 and initial_iters >= 20".into()));
    }
    if spec.prior == Prior::Ar1 && k != 4 {
        log::warn!("psi = {} was calibrated for four stocks; this dataset has {k}", spec.psi);
    }

    let ln_p: Vec<f64> = dataset
        .weeks
        .iter()
        .flat_map(|w| clamp_observation(w.p_hat.as_slice()))
        .map(f64::ln)
        .collect();
    let model = Model {
        weeks: t_len,
        stocks: k,
        ln_p,
        n: dataset.sample_sizes(),
        lambda: spec.lambda_per_week.clone(),
        likelihood: spec.likelihood,
        prior: spec.prior,
        psi2: spec.psi * spec.psi,
        prior_only: config.prior_only,
        weights: &dataset.weights,
        lake_mask: &dataset.lake_mask,
        lake_count: dataset.lake_count,
        target: config.target_accept,
    };

    let counts: Vec<u32> = if model.uses_counts() {
        let mut all = Vec::with_capacity(t_len * k);
        for (w, week) in dataset.weeks.iter().zip(&dataset.week_ids) {
            let x = initial_counts(w.n, w.p_hat.as_slice())
                .map_err(|e| Error::Initialization(format!("week {week}: {e}")))?;
            all.extend(x);
        }
        all
    } else {
        Vec::new()
    };

    let mut chains: Vec<Chain> = (0..config.chains)
        .map(|c| Chain::new(&model, config.seed.wrapping_add(c as u64), &counts, config.init_jitter))
        .collect();

    let thin_for = |span: usize| span.div_ceil(config.keep).max(1);
    let first = config.initial_iters;
    let adapt_until = first / 2;
    let mut thin = thin_for(first - adapt_until);
    let mut draws: Vec<ChainDraws> = chains
        .par_iter_mut()
        .map(|c| c.run(&model, first, adapt_until, adapt_until, thin))
        .collect();
    let mut total = first;

    let monitor = |draws: &[ChainDraws]| -> (Option<f64>, Option<f64>) {
        if draws.len() < 2 {
            return (None, None);
        }
        let n: Vec<&[f64]> = draws.iter().map(|d| d.n.as_slice()).collect();
        let phi: Vec<&[f64]> = draws.iter().map(|d| d.phi.as_slice()).collect();
        let rn = gelman_rubin(&n).ok().or(Some(f64::INFINITY));
        let rp = if spec.prior == Prior::Ar1 { gelman_rubin(&phi).ok() } else { None };
        (rn, rp)
    };

    let (mut rhat_n, mut rhat_phi) = monitor(&draws);
    let converged = |r: Option<f64>| r.is_none_or(|r| r < config.rhat_threshold);
    while !converged(rhat_n) && total * 2 <= config.max_iters {
        thin = thin_for(total);
        let from = total;
        draws = chains
            .par_iter_mut()
            .map(|c| c.run(&model, from, adapt_until, from, thin))
            .collect();
        total *= 2;
        (rhat_n, rhat_phi) = monitor(&draws);
    }
    let is_converged = converged(rhat_n);
    if !is_converged {
        log::warn!("chains did not converge after {total} iterations (R-hat on N = {rhat_n:?})");
    }

    let (acc, prop) = chains.iter().fold((0u64, 0u64), |(a, p), c| (a + c.accepted, p + c.proposed));
    let total_draws: usize = draws.iter().map(|d| d.n.len()).sum();
    let bad = draws.iter().flat_map(|d| &d.n).filter(|n| !n.is_finite()).count();
    if bad as f64 > super::diagnostics::MAX_REJECTED_FRACTION * total_draws as f64 {
        return Err(Error::DegeneratePosterior { rejected: bad, total: total_draws });
    }

    Ok(PosteriorChains {
        weeks: t_len,
        stocks: k,
        chains: draws,
        thin,
        total_iters: total,
        seed: config.seed,
        rhat_n,
        rhat_phi,
        converged: is_converged,
        acceptance_rate: acc as f64 / prop.max(1) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_counts_respect_floor_and_sum() {
        let x = initial_counts(13, &[0.96, 0.01, 0.02, 0.01]).unwrap();
        assert_eq!(x.iter().sum::<u32>(), 13);
        assert!(x.iter().all(|&c| c >= 1));
        let x = initial_counts(10, &[0.25, 0.25, 0.25, 0.25]).unwrap();
        assert_eq!(x.iter().sum::<u32>(), 10);
        assert!(initial_counts(3, &[0.25; 4]).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(ModelSpec::new(Likelihood::Mmd, Prior::Ar1, 0.0, vec![1.0]).is_err());
        assert!(ModelSpec::new(Likelihood::Rdm, Prior::Ar1, 2.0, vec![0.0]).is_err());
        assert!(ModelSpec::new(Likelihood::Rdm, Prior::Ar1, 2.0, vec![3.0]).is_ok());
    }
}
