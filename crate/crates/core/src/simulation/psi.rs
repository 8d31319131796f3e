//! Prior-predictive checks for the AR(1) scale `psi`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{quantile_sorted, softmax};

/// Histogram plus summaries of prior draws of `pi[0][0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiSummary {
    pub k: usize,
    pub psi: f64,
    pub draws: usize,
    /// `bins + 1` equally spaced edges on `[0, 1]`.
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
    pub mean: f64,
    /// Quantiles at 2.5%, 25%, 50%, 75% and 97.5%.
    pub quantiles: [f64; 5],
    pub p_above_half: f64,
    pub p_middle: f64,
}

pub const PSI_QUANTILES: [f64; 5] = [0.025, 0.25, 0.5, 0.75, 0.975];

/// Draws `pi[0][0]` = softmax of `K` iid `N(0, psi^2)` values, `draws` times.
pub fn psi_prior_predictive<R: Rng + ?Sized>(
    k: usize,
    psi: f64,
    draws: usize,
    bins: usize,
    rng: &mut R,
) -> Result<PsiSummary> {
    if k < 2 {
        return Err(Error::TooFewComponents(k));
    }
    if draws < 1000 || bins == 0 {
        return Err(Error::InvalidArgument("need at least 1000 draws and one bin".into()));
    }
    let normal = Normal::new(0.0, psi).map_err(|e| Error::InvalidArgument(format!("psi {psi}: {e}")))?;
    let mut z = vec![0.0; k];
    let mut values: Vec<f64> = (0..draws)
        .map(|_| {
            z.iter_mut().for_each(|v| *v = normal.sample(rng));
            softmax(&z)[0]
        })
        .collect();

    let mut counts = vec![0usize; bins];
    for &v in &values {
        counts[((v * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let m = draws as f64;
    let width = 1.0 / bins as f64;
    let frac = |f: &dyn Fn(f64) -> bool| values.iter().filter(|&&v| f(v)).count() as f64 / m;
    let mean = values.iter().sum::<f64>() / m;
    let p_above_half = frac(&|v| v > 0.5);
    let p_middle = frac(&|v| v > 0.25 && v < 0.75);
    values.sort_by(f64::total_cmp);
    Ok(PsiSummary {
        k,
        psi,
        draws,
        edges: (0..=bins).map(|i| i as f64 * width).collect(),
        density: counts.iter().map(|&c| c as f64 / (m * width)).collect(),
        mean,
        quantiles: PSI_QUANTILES.map(|p| quantile_sorted(&values, p)),
        p_above_half,
        p_middle,
    })
}

/// One draw of the latent AR(1) field `z[t][k]`.
pub fn ar1_prior_draw<R: Rng + ?Sized>(weeks: usize, k: usize, phi: f64, psi: f64, rng: &mut R) -> Vec<Vec<f64>> {
    assert!(phi.abs() < 1.0 && psi > 0.0);
    let start = Normal::new(0.0, psi).expect("positive scale");
    let innov = Normal::new(0.0, psi * (1.0 - phi * phi).sqrt()).expect("positive scale");
    let mut z: Vec<Vec<f64>> = Vec::with_capacity(weeks);
    for t in 0..weeks {
        let row = if t == 0 {
            (0..k).map(|_| start.sample(rng)).collect()
        } else {
            z[t - 1].iter().map(|&prev| phi * prev + innov.sample(rng)).collect()
        };
        z.push(row);
    }
    z
}
