//! Synthetic seasons drawn from the reverse Dirichlet-multinomial model.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::random::{draw_dirichlet, draw_multinomial};
use crate::composition::{Composition, CompositionEstimate, LatentCounts};
use crate::dataset::GmrDataset;
use crate::error::{Error, Result};

/// Redraws allowed per week before the truth is declared degenerate.
pub const REJECTION_BUDGET: u64 = 1_000_000;
/// Simulated proportions must lie in `[P_HAT_LOW, P_HAT_HIGH]`.
pub const P_HAT_LOW: f64 = 1e-10;
pub const P_HAT_HIGH: f64 = 1.0 - 1e-7;
/// Latent sample proportions must exceed this.
pub const RHO_FLOOR: f64 = 1e-10;

/// True parameters of a simulated season.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTruth {
    /// Weekly compositions, `pi[t][k]`.
    pub pi: Vec<Vec<f64>>,
    pub n_true: f64,
    pub weights: Vec<f64>,
    pub n: Vec<u32>,
    pub lambda: Vec<f64>,
    pub lake_mask: Vec<bool>,
    #[serde(default)]
    pub stock_names: Vec<String>,
}

/// How synthetic standard errors are attached to simulated proportions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeRule {
    /// `s^2 = beta p_hat (1 - p_hat)`: exactly proportional.
    #[default]
    AtEstimate,
    /// `s^2 = beta rho (1 - rho)`: the conditional variance given the latent
    /// sample, which is not exactly proportional to `p_hat (1 - p_hat)`.
    AtLatent,
}

impl SimulationTruth {
    pub fn validate(&self) -> Result<()> {
        let t = self.pi.len();
        if t == 0 {
            return Err(Error::InvalidArgument("truth has no weeks".into()));
        }
        if self.weights.len() != t || self.n.len() != t || self.lambda.len() != t {
            return Err(Error::LengthMismatch(format!(
                "{t} weeks but {} weights, {} sample sizes, {} concentrations",
                self.weights.len(),
                self.n.len(),
                self.lambda.len()
            )));
        }
        for row in &self.pi {
            Composition::new(row.clone())?;
            if row.len() != self.lake_mask.len() {
                return Err(Error::LengthMismatch("pi row and lake mask differ in length".into()));
            }
        }
        if let Some(l) = self.lambda.iter().find(|l| l.is_nan() || **l <= 0.0) {
            return Err(Error::InvalidArgument(format!("lambda {l} must be positive")));
        }
        if self.n.contains(&0) {
            return Err(Error::InvalidArgument("sample sizes must be positive".into()));
        }
        if self.n_true.is_nan() || self.n_true <= 0.0 {
            return Err(Error::InvalidArgument("true escapement must be positive".into()));
        }
        if !self.stock_names.is_empty() && self.stock_names.len() != self.lake_mask.len() {
            return Err(Error::LengthMismatch("stock names and lake mask differ in length".into()));
        }
        if !self.lake_count().is_finite() || self.lake_count() <= 0.0 {
            return Err(Error::InvalidArgument("truth implies no lake-type escapement".into()));
        }
        Ok(())
    }

    pub fn weeks(&self) -> usize {
        self.pi.len()
    }

    pub fn stocks(&self) -> usize {
        self.lake_mask.len()
    }

    /// Lake-type escapement implied by the truth: `N sum_t w_t sum_lake pi`.
    pub fn lake_count(&self) -> f64 {
        self.n_true * self.weighted_lake_proportion()
    }

    pub fn weighted_lake_proportion(&self) -> f64 {
        self.pi
            .iter()
            .zip(&self.weights)
            .map(|(row, w)| w * row.iter().zip(&self.lake_mask).filter(|(_, &m)| m).map(|(p, _)| p).sum::<f64>())
            .sum()
    }

    pub fn lake_proportions(&self) -> Vec<f64> {
        self.pi
            .iter()
            .map(|row| row.iter().zip(&self.lake_mask).filter(|(_, &m)| m).map(|(p, _)| p).sum())
            .collect()
    }

    /// Dirichlet slope `1 / (lambda_t + 1)` per week.
    pub fn beta(&self) -> Vec<f64> {
        self.lambda.iter().map(|l| 1.0 / (l + 1.0)).collect()
    }

    pub fn names(&self) -> Vec<String> {
        if self.stock_names.is_empty() {
            (1..=self.stocks()).map(|k| format!("stock{k}")).collect()
        } else {
            self.stock_names.clone()
        }
    }

    /// A twelve-week, four-stock season shaped like a Taku River sockeye run.
    ///
    /// Weights, sample sizes and concentrations follow the published weekly
    /// table (weights renormalised, `lambda_t = (f_t - 1) n_t` from the
    /// inflation factors `f_t`). The compositions are synthetic, with trends
    /// in three stocks, tuned so that `N = 60,000` implies `M` of 41,326
    /// after rounding. Stocks are US River and Taku River (river-type),
    /// Tatsamenie Lake and Other Lakes (lake-type).
    pub fn taku_shaped() -> Self {
        const WEIGHTS: [f64; 12] = [0.02, 0.01, 0.04, 0.03, 0.18, 0.18, 0.11, 0.11, 0.09, 0.16, 0.04, 0.04];
        const N: [u32; 12] = [17, 13, 38, 26, 172, 178, 112, 105, 84, 146, 43, 42];
        const INFLATION: [f64; 12] = [1.88, 1.76, 1.89, 1.89, 1.92, 1.91, 2.01, 1.94, 1.94, 1.93, 1.97, 1.83];
        const PI: [[f64; 4]; 12] = [
            [0.1600, 0.1732, 0.1200, 0.5468],
            [0.1527, 0.1864, 0.1345, 0.5264],
            [0.1455, 0.1983, 0.1491, 0.5071],
            [0.1382, 0.2076, 0.1636, 0.4906],
            [0.1309, 0.2132, 0.1782, 0.4777],
            [0.1236, 0.2144, 0.1927, 0.4693],
            [0.1164, 0.2107, 0.2073, 0.4656],
            [0.1091, 0.2023, 0.2218, 0.4668],
            [0.1018, 0.1894, 0.2364, 0.4724],
            [0.0945, 0.1729, 0.2509, 0.4817],
            [0.0873, 0.1537, 0.2655, 0.4935],
            [0.0800, 0.1332, 0.2800, 0.5068],
        ];
        let wsum: f64 = WEIGHTS.iter().sum();
        Self {
            pi: PI.iter().map(|r| r.to_vec()).collect(),
            n_true: 60_000.0,
            weights: WEIGHTS.iter().map(|w| w / wsum).collect(),
            n: N.to_vec(),
            lambda: INFLATION.iter().zip(N).map(|(f, n)| (f - 1.0) * n as f64).collect(),
            lake_mask: vec![false, false, true, true],
            stock_names: ["US River", "Taku River", "Tatsamenie Lake", "Other Lakes"]
                .map(String::from)
                .to_vec(),
        }
    }
}

/// A simulated season together with its latent counts.
#[derive(Debug, Clone)]
pub struct SimulatedSeason {
    pub dataset: GmrDataset,
    pub latent: Vec<LatentCounts>,
}

fn within_bounds(p: &Composition) -> bool {
    p.as_slice().iter().all(|&v| (P_HAT_LOW..=P_HAT_HIGH).contains(&v))
}

/// Draws one week's `(X, p_hat)` pair, redrawing both until the latent
/// proportions and the simulated proportions clear the thresholds.
pub fn simulate_week<R: Rng + ?Sized>(
    n: u32,
    pi: &[f64],
    lambda: f64,
    rng: &mut R,
) -> Result<Option<(LatentCounts, Composition)>> {
    for _ in 0..REJECTION_BUDGET {
        let x = draw_multinomial(n, pi, rng)?;
        let rho = x.proportions();
        if rho.iter().any(|&r| r <= RHO_FLOOR) {
            continue;
        }
        let alpha: Vec<f64> = rho.iter().map(|r| lambda * r).collect();
        let p = draw_dirichlet(&alpha, rng)?;
        if within_bounds(&p) {
            return Ok(Some((x, p)));
        }
    }
    Ok(None)
}

#[allow(clippy::needless_range_loop)]
pub fn simulate_dataset<R: Rng + ?Sized>(truth: &SimulationTruth, se_rule: SeRule, rng: &mut R) -> Result<SimulatedSeason> {
    truth.validate()?;
    let beta = truth.beta();
    let mut weeks = Vec::with_capacity(truth.weeks());
    let mut latent = Vec::with_capacity(truth.weeks());
    for t in 0..truth.weeks() {
        let Some((x, p)) = simulate_week(truth.n[t], &truth.pi[t], truth.lambda[t], rng)? else {
            return Err(Error::RejectionBudgetExceeded { week: t + 1, attempts: REJECTION_BUDGET });
        };
        let base = match se_rule {
            SeRule::AtEstimate => p.as_slice().to_vec(),
            SeRule::AtLatent => x.proportions(),
        };
        let se = base.iter().map(|v| (beta[t] * v * (1.0 - v)).sqrt()).collect();
        weeks.push(CompositionEstimate::new(p, se, truth.n[t])?);
        latent.push(x);
    }
    let dataset = GmrDataset::new(
        weeks,
        truth.weights.clone(),
        truth.lake_mask.clone(),
        truth.lake_count(),
        truth.names(),
        (1..=truth.weeks() as i64).collect(),
    )?;
    Ok(SimulatedSeason { dataset, latent })
}
