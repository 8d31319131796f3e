//! Log densities used by the sampler.

use statrs::function::gamma::ln_gamma;

use crate::composition::{Composition, LatentCounts};
use crate::error::{Error, Result};

/// Observed proportions are clamped into this range before any likelihood
/// evaluation; the Dirichlet log density is undefined on the boundary.
pub const CLAMP_LOW: f64 = 1e-10;
pub const CLAMP_HIGH: f64 = 1.0 - 1e-7;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Clamps each entry into `[CLAMP_LOW, CLAMP_HIGH]` without re-closing.
pub fn clamp_observation(p: &[f64]) -> Vec<f64> {
    p.iter().map(|v| v.clamp(CLAMP_LOW, CLAMP_HIGH)).collect()
}

/// Row softmax with max subtraction, written into `out`.
pub fn softmax_into(row: &[f64], out: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &z) in out.iter_mut().zip(row) {
        *o = (z - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

pub fn softmax(row: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; row.len()];
    softmax_into(row, &mut out);
    out
}

/// Softmax of every row of `z` (weeks by stocks).
pub fn softmax_rows(z: &[Vec<f64>]) -> Result<Vec<Composition>> {
    z.iter()
        .map(|row| {
            if let Some((index, &value)) = row.iter().enumerate().find(|(_, v)| !v.is_finite()) {
                return Err(Error::NonFinite { index, value });
            }
            let mut p = softmax(row);
            // Re-normalise so rounding never pushes the sum outside tolerance.
            let s: f64 = p.iter().sum();
            p.iter_mut().for_each(|v| *v /= s);
            Composition::new(p)
        })
        .collect()
}

/// Dirichlet log density with a precomputed `ln x`.
///
/// A zero concentration on an interior point has zero density, so the
/// result is negative infinity.
pub(crate) fn dirichlet_log_density_ln(ln_x: &[f64], alpha: impl Iterator<Item = f64> + Clone) -> f64 {
    let mut total = 0.0;
    let mut acc = 0.0;
    for (a, lx) in alpha.zip(ln_x) {
        if a <= 0.0 {
            return f64::NEG_INFINITY;
        }
        total += a;
        acc += (a - 1.0) * lx - ln_gamma(a);
    }
    acc + ln_gamma(total)
}

pub fn dirichlet_log_density(x: &[f64], alpha: &[f64]) -> f64 {
    let ln_x: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    dirichlet_log_density_ln(&ln_x, alpha.iter().copied())
}

fn check_clamped(p: &[f64]) -> Result<()> {
    for (index, &value) in p.iter().enumerate() {
        if !(CLAMP_LOW..=CLAMP_HIGH).contains(&value) {
            return Err(Error::BoundaryValue { index, value });
        }
    }
    Ok(())
}

/// `ln Dirichlet(p_hat; lambda_tilde * pi)`.
pub fn mmd_log_likelihood(p_hat: &[f64], pi: &[f64], lambda_tilde: f64) -> Result<f64> {
    check_clamped(p_hat)?;
    if p_hat.len() != pi.len() {
        return Err(Error::LengthMismatch(format!("{} vs {}", p_hat.len(), pi.len())));
    }
    let ln_p: Vec<f64> = p_hat.iter().map(|v| v.ln()).collect();
    Ok(dirichlet_log_density_ln(&ln_p, pi.iter().map(|&v| lambda_tilde * v)))
}

/// `ln Dirichlet(p_hat; lambda * X / n)`; negative infinity when a zero
/// count meets a positive observed proportion.
pub fn rdm_log_likelihood(p_hat: &[f64], counts: &LatentCounts, lambda: f64) -> f64 {
    let n = counts.n() as f64;
    let ln_p: Vec<f64> = p_hat.iter().map(|v| v.ln()).collect();
    dirichlet_log_density_ln(&ln_p, counts.counts().iter().map(|&x| lambda * x as f64 / n))
}

/// `ln Multinomial(x; n, pi)`.
pub fn multinomial_log_pmf(x: &[u32], pi: &[f64]) -> f64 {
    let n: u32 = x.iter().sum();
    let mut acc = ln_gamma(n as f64 + 1.0);
    for (&c, &p) in x.iter().zip(pi) {
        if c > 0 {
            acc += c as f64 * p.ln() - ln_gamma(c as f64 + 1.0);
        }
    }
    acc
}

#[inline]
pub(crate) fn normal_log_pdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (LN_2PI + var.ln()) - (x - mean).powi(2) / (2.0 * var)
}

/// Log density of the latent AR(1) field, `z` indexed `[week][stock]`.
///
/// Week one is `N(0, psi^2)`; later weeks follow `z_t = phi z_{t-1} + e_t`
/// with innovation variance `(1 - phi^2) psi^2`, so every margin is
/// `N(0, psi^2)`.
pub fn ar1_log_prior(z: &[Vec<f64>], phi: f64, psi: f64) -> f64 {
    assert!(phi.abs() < 1.0 && psi > 0.0);
    let var0 = psi * psi;
    let var_e = (1.0 - phi * phi) * var0;
    let mut acc = 0.0;
    for (t, row) in z.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            acc += if t == 0 {
                normal_log_pdf(v, 0.0, var0)
            } else {
                normal_log_pdf(v, phi * z[t - 1][k], var_e)
            };
        }
    }
    acc
}

/// Log density of `ln G` for `G ~ Exp(1)`. Softmax of iid draws from this
/// density is uniform on the simplex.
#[inline]
pub fn log_exp_gamma1(z: f64) -> f64 {
    z - z.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn softmax_examples() {
        let rows = softmax_rows(&[vec![0.0; 4], vec![2f64.ln(), 0.0]]).unwrap();
        assert_eq!(rows[0].as_slice(), &[0.25; 4]);
        assert_relative_eq!(rows[1][0], 2.0 / 3.0, epsilon = 1e-15);
        let big = softmax(&[1000.0, 0.0]);
        assert!((big[0] - 1.0).abs() < 1e-12 && big[1] < 1e-300 && big.iter().all(|v| v.is_finite()));
        assert!(softmax_rows(&[vec![f64::NAN, 0.0]]).is_err());
    }

    #[test]
    fn mmd_examples() {
        let ll = mmd_log_likelihood(&[0.3, 0.7], &[0.5, 0.5], 2.0).unwrap();
        assert_relative_eq!(ll, 0.0, epsilon = 1e-12);
        // Beta(2, 2) density 6 p (1 - p) at 0.5
        let ll = mmd_log_likelihood(&[0.5, 0.5], &[0.5, 0.5], 4.0).unwrap();
        assert_relative_eq!(ll, 1.5f64.ln(), epsilon = 1e-12);
        assert!(matches!(
            mmd_log_likelihood(&[0.0, 1.0], &[0.5, 0.5], 4.0),
            Err(Error::BoundaryValue { index: 0, .. })
        ));
    }

    #[test]
    fn rdm_examples() {
        let x = LatentCounts::new(vec![1, 1]).unwrap();
        assert_relative_eq!(rdm_log_likelihood(&[0.2, 0.8], &x, 2.0), 0.0, epsilon = 1e-12);
        let x = LatentCounts::new(vec![2, 2]).unwrap();
        assert_relative_eq!(rdm_log_likelihood(&[0.5, 0.5], &x, 4.0), 1.5f64.ln(), epsilon = 1e-12);
        let x = LatentCounts::new(vec![0, 4]).unwrap();
        assert_eq!(rdm_log_likelihood(&[0.3, 0.7], &x, 4.0), f64::NEG_INFINITY);
    }

    #[test]
    fn rdm_matches_mmd_with_equal_parameters() {
        let x = LatentCounts::new(vec![3, 5, 2]).unwrap();
        let p = [0.25, 0.55, 0.2];
        let rdm = rdm_log_likelihood(&p, &x, 7.5);
        let mmd = mmd_log_likelihood(&p, &x.proportions(), 7.5).unwrap();
        assert_relative_eq!(rdm, mmd, epsilon = 1e-12);
    }

    #[test]
    fn ar1_examples() {
        let z = vec![vec![0.0], vec![0.0]];
        assert_relative_eq!(ar1_log_prior(&z, 0.0, 2.0), -(8.0 * std::f64::consts::PI).ln(), epsilon = 1e-12);
        assert_relative_eq!(ar1_log_prior(&z, 0.0, 2.0), -3.224171, epsilon = 1e-6);

        let z = vec![vec![0.3, -1.2, 2.0], vec![0.7, 0.1, -0.4]];
        let iid: f64 = z.iter().flatten().map(|&v| normal_log_pdf(v, 0.0, 4.0)).sum();
        assert_relative_eq!(ar1_log_prior(&z, 0.0, 2.0), iid, epsilon = 1e-12);
    }

    #[test]
    fn multinomial_pmf() {
        // 4!/(2!2!) 0.5^4 = 6/16
        assert_relative_eq!(multinomial_log_pmf(&[2, 2], &[0.5, 0.5]), (6.0f64 / 16.0).ln(), epsilon = 1e-12);
    }
}
