//! Simplex-valued domain types.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the component sum of a [`Composition`].
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// A point on the probability simplex with at least two components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Composition(Vec<f64>);

impl Composition {
    /// Wraps values that already sum to one.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_entries(&values)?;
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::NotClosed { sum });
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Sum of the components selected by `mask`.
    pub fn masked_sum(&self, mask: &[bool]) -> f64 {
        self.0
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(v, _)| v)
            .sum()
    }
}

impl std::ops::Index<usize> for Composition {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.0[index]
    }
}

impl TryFrom<Vec<f64>> for Composition {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<Composition> for Vec<f64> {
    fn from(c: Composition) -> Self {
        c.0
    }
}

fn check_entries(values: &[f64]) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::TooFewComponents(values.len()));
    }
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index, value });
        }
        if value < 0.0 {
            return Err(Error::NegativeEntry { index, value });
        }
    }
    Ok(())
}

/// Divides nonnegative values by their sum.
pub fn close_composition(values: &[f64]) -> Result<Composition> {
    check_entries(values)?;
    let sum: f64 = values.iter().sum();
    if sum <= 0.0 {
        return Err(Error::ZeroSum);
    }
    Ok(Composition(values.iter().map(|v| v / sum).collect()))
}

/// One week's reported stock composition: point estimates, sample-level
/// standard errors and the GSI sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionEstimate {
    pub p_hat: Composition,
    pub se: Vec<f64>,
    pub n: u32,
}

impl CompositionEstimate {
    pub fn new(p_hat: Composition, se: Vec<f64>, n: u32) -> Result<Self> {
        if se.len() != p_hat.len() {
            return Err(Error::LengthMismatch(format!(
                "{} proportions but {} standard errors",
                p_hat.len(),
                se.len()
            )));
        }
        if let Some((k, &s)) = se.iter().enumerate().find(|(_, s)| !s.is_finite() || **s < 0.0) {
            return Err(Error::Invariant(format!("standard error {k} is {s}")));
        }
        if n == 0 {
            return Err(Error::Invariant("sample size must be positive".into()));
        }
        Ok(Self { p_hat, se, n })
    }

    pub fn k(&self) -> usize {
        self.p_hat.len()
    }

    pub fn variances(&self) -> Vec<f64> {
        self.se.iter().map(|s| s * s).collect()
    }
}

/// Unobserved per-stock sample counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatentCounts {
    counts: Vec<u32>,
    n: u32,
}

impl LatentCounts {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        let n: u32 = counts.iter().sum();
        if n == 0 {
            return Err(Error::Invariant("latent counts must sum to a positive n".into()));
        }
        Ok(Self { counts, n })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Sample proportions `X / n`.
    pub fn proportions(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}
