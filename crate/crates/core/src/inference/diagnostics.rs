use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Classic potential scale reduction factor over equal-length chains.
///
/// Chains are truncated to the shortest one.
pub fn gelman_rubin<C: AsRef<[f64]>>(chains: &[C]) -> Result<f64> {
    if chains.len() < 2 {
        return Err(Error::InvalidArgument("need at least two chains".into()));
    }
    let m = chains.iter().map(|c| c.as_ref().len()).min().unwrap_or(0);
    if m < 10 {
        return Err(Error::InvalidArgument(format!("chains of length {m} are too short")));
    }
    let c = chains.len() as f64;
    let mf = m as f64;
    let mut means = Vec::with_capacity(chains.len());
    let mut within = 0.0;
    for chain in chains {
        let xs = &chain.as_ref()[..m];
        let mean = xs.iter().sum::<f64>() / mf;
        within += xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (mf - 1.0);
        means.push(mean);
    }
    let w = within / c;
    if w.is_nan() || w <= 0.0 {
        return Err(Error::DegenerateChains);
    }
    let grand = means.iter().sum::<f64>() / c;
    let b = mf / (c - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let var_plus = (mf - 1.0) / mf * w + b / mf;
    Ok((var_plus / w).sqrt())
}

/// Total escapement for one draw of `pi` (row-major, weeks by stocks).
///
/// Returns `None` when the weighted lake-type proportion is not positive.
pub fn escapement_for_draw(pi: &[f64], weights: &[f64], lake_mask: &[bool], lake_count: f64) -> Option<f64> {
    let k = lake_mask.len();
    let mut denom = 0.0;
    for (row, w) in pi.chunks_exact(k).zip(weights) {
        let lake: f64 = row.iter().zip(lake_mask).filter(|(_, &m)| m).map(|(p, _)| p).sum();
        denom += w * lake;
    }
    (denom > 1e-12).then(|| lake_count / denom)
}

/// Largest fraction of draws that may be dropped for lacking lake mass.
pub const MAX_REJECTED_FRACTION: f64 = 0.01;

/// Applies [`escapement_for_draw`] to every draw.
pub fn escapement_from_draws(
    pi_draws: &[Vec<f64>],
    weights: &[f64],
    lake_mask: &[bool],
    lake_count: f64,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(pi_draws.len());
    for draw in pi_draws {
        if let Some(n) = escapement_for_draw(draw, weights, lake_mask, lake_count) {
            out.push(n);
        }
    }
    let rejected = pi_draws.len() - out.len();
    if rejected as f64 > MAX_REJECTED_FRACTION * pi_draws.len() as f64 {
        return Err(Error::DegeneratePosterior { rejected, total: pi_draws.len() });
    }
    Ok(out)
}

/// Linear-interpolation sample quantile (type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

pub fn posterior_summary(draws: &[f64], level: f64) -> Result<PosteriorSummary> {
    if draws.len() < 100 {
        return Err(Error::InvalidArgument(format!("{} draws is too few to summarise", draws.len())));
    }
    let m = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / m;
    let sd = (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(PosteriorSummary {
        mean,
        sd,
        median: quantile_sorted(&sorted, 0.5),
        ci_low: quantile_sorted(&sorted, (1.0 - level) / 2.0),
        ci_high: quantile_sorted(&sorted, (1.0 + level) / 2.0),
    })
}
