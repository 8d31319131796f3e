use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Gamma};

use crate::composition::{Composition, LatentCounts};
use crate::error::{Error, Result};

/// Independent stream `(seed, stream)` of a counter-based generator.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `Multinomial(n, pi)` by sequential conditional binomials.
pub fn draw_multinomial<R: Rng + ?Sized>(n: u32, pi: &[f64], rng: &mut R) -> Result<LatentCounts> {
    if n == 0 {
        return Err(Error::InvalidArgument("multinomial size must be positive".into()));
    }
    let mut counts = vec![0u32; pi.len()];
    let mut remaining = n as u64;
    let mut mass = 1.0;
    for (k, &p) in pi.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k + 1 == pi.len() {
            counts[k] = remaining as u32;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let x = Binomial::new(remaining, q)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .sample(rng);
        counts[k] = x as u32;
        remaining -= x;
        mass -= p;
    }
    LatentCounts::new(counts)
}

/// `ln G` for `G ~ Gamma(shape, 1)`, boosted for `shape < 1` so small shapes
/// do not underflow.
fn log_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        Gamma::new(shape, 1.0).expect("positive shape").sample(rng).ln()
    } else {
        let g = Gamma::new(shape + 1.0, 1.0).expect("positive shape").sample(rng);
        let u: f64 = 1.0 - rng.random::<f64>();
        g.ln() + u.ln() / shape
    }
}

/// `Dirichlet(alpha)` as normalised independent gamma variates.
pub fn draw_dirichlet<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Result<Composition> {
    if alpha.len() < 2 {
        return Err(Error::TooFewComponents(alpha.len()));
    }
    if let Some(a) = alpha.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidArgument(format!("Dirichlet parameter {a} must be positive")));
    }
    let logs: Vec<f64> = alpha.iter().map(|&a| log_gamma_variate(a, rng)).collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut v: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    Composition::new(v)
}
