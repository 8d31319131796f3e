//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` are implemented faithfully but do not
//! hold; they still print FAIL, and only an unexpected failure makes this
//! target exit non-zero. The README explains each known failure.

#![allow(clippy::needless_range_loop)]

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use gmr_core::calibration::estimate_beta;
use gmr_core::estimators::{mom_escapement, wald_interval, PAPER_Z};
use gmr_core::inference::{run_mcmc, McmcConfig, ModelSpec};
use gmr_core::simulation::{
    ar1_prior_draw, draw_dirichlet, draw_multinomial, psi_prior_predictive, run_study, simulate_dataset, stream_rng,
    SeRule, SimulationTruth, StudyOptions,
};
use gmr_core::{Composition, Likelihood, Method, Prior};

const KNOWN_FAILURES: &[&str] = &["3", "5b", "5c"];

struct Line {
    id: &'static str,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn line(id: &'static str, name: &'static str, pass: bool, detail: String) -> Line {
    Line { id, name, pass, detail }
}

/// Uniform `[0, 1)` variate from the library's Dirichlet sampler, so the
/// suite needs no extra random-number dependencies.
fn unif(rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
    draw_dirichlet(&[1.0, 1.0], rng).unwrap()[0]
}

fn random_simplex(k: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
    draw_dirichlet(&vec![1.0; k], rng).unwrap().into_inner()
}

fn criterion_1() -> Vec<Line> {
    let start = Instant::now();
    let mut rng = stream_rng(1001, 0);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let t = 1 + (unif(&mut rng) * 12.0) as usize;
        let k = 2 + (unif(&mut rng) * 5.0) as usize;
        let lake: Vec<bool> = {
            let mut m: Vec<bool> = (0..k).map(|_| unif(&mut rng) < 0.5).collect();
            m[(unif(&mut rng) * k as f64) as usize] = true;
            m
        };
        let pi: Vec<Vec<f64>> = (0..t).map(|_| random_simplex(k, &mut rng)).collect();
        let w = random_simplex(t.max(2), &mut rng)[..t].to_vec();
        let w: Vec<f64> = w.iter().map(|v| v / w.iter().sum::<f64>()).collect();
        let n_true = 1_000.0 + 99_000.0 * unif(&mut rng);
        let p_lake: Vec<f64> =
            pi.iter().map(|r| r.iter().zip(&lake).filter(|(_, &l)| l).map(|(p, _)| p).sum()).collect();
        let m = n_true * w.iter().zip(&p_lake).map(|(a, b)| a * b).sum::<f64>();
        let n = mom_escapement(m, &w, &p_lake).unwrap();
        worst = worst.max((n - n_true).abs() / n_true);
    }
    let secs = start.elapsed().as_secs_f64();
    vec![line(
        "1",
        "round-trip exactness",
        worst <= 1e-9 && secs < 1.0,
        format!("max relative error {worst:.2e} over 100 configurations (tol 1e-9), {secs:.3} s"),
    )]
}

/// Minimises the squared-deviation objective on a 10^4-point grid over
/// (0, 1], then on a second 10^4-point grid spanning the two neighbouring
/// cells of the best coarse point.
fn grid_beta(q: &[f64], s2: &[f64]) -> f64 {
    let obj = |b: f64| q.iter().zip(s2).map(|(q, s)| (s - b * q).powi(2)).sum::<f64>();
    let argmin = |lo: f64, hi: f64| {
        let step = (hi - lo) / 9_999.0;
        (0..10_000)
            .map(|i| lo + i as f64 * step)
            .min_by(|a, b| obj(*a).total_cmp(&obj(*b)))
            .unwrap()
    };
    let coarse = argmin(1e-4, 1.0);
    argmin((coarse - 1e-4).max(1e-8), (coarse + 1e-4).min(1.0))
}

fn criterion_2() -> Vec<Line> {
    let start = Instant::now();
    let mut rng = stream_rng(1002, 0);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let k = 2 + (unif(&mut rng) * 7.0) as usize;
        let p = random_simplex(k, &mut rng);
        let beta = 0.002 + 1.2 * unif(&mut rng);
        let q: Vec<f64> = p.iter().map(|v| v * (1.0 - v)).collect();
        let s2: Vec<f64> = q.iter().map(|q| beta * q * (0.5 + unif(&mut rng))).collect();
        let se: Vec<f64> = s2.iter().map(|v| v.sqrt()).collect();
        let fitted = estimate_beta(&Composition::new(p).unwrap(), &se).unwrap();
        let s2_used: Vec<f64> = se.iter().map(|s| s * s).collect();
        worst = worst.max((fitted - grid_beta(&q, &s2_used)).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    vec![line(
        "2",
        "calibration oracle",
        worst <= 1e-6 && secs < 10.0,
        format!("max |beta - grid argmin| {worst:.2e} over 1000 inputs (tol 1e-6), {secs:.1} s"),
    )]
}

struct Moments {
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
    mean_se: Vec<f64>,
    cov_se: Vec<Vec<f64>>,
}

fn moments(draws: &[Vec<f64>]) -> Moments {
    let m = draws.len() as f64;
    let k = draws[0].len();
    let mean: Vec<f64> = (0..k).map(|j| draws.iter().map(|d| d[j]).sum::<f64>() / m).collect();
    let mut cov = vec![vec![0.0; k]; k];
    let mut cov_se = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in 0..k {
            let prod: Vec<f64> = draws.iter().map(|d| (d[a] - mean[a]) * (d[b] - mean[b])).collect();
            let c = prod.iter().sum::<f64>() / (m - 1.0);
            let v = prod.iter().map(|x| (x - c).powi(2)).sum::<f64>() / (m - 1.0);
            cov[a][b] = c;
            cov_se[a][b] = (v / m).sqrt();
        }
    }
    let mean_se = (0..k).map(|j| (cov[j][j] / m).sqrt()).collect();
    Moments { mean, cov, mean_se, cov_se }
}

fn beta_tilde_oracle(lambda: f64, n: u32) -> f64 {
    (lambda + n as f64) / (n as f64 * (lambda + 1.0))
}

/// Exact moments of `p_hat` conditional on every latent count being
/// positive, by enumerating the multinomial support.
fn truncated_moments(n: u32, pi: &[f64], lambda: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let k = pi.len();
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=n).scan(0.0, |acc, i| {
            *acc += (i as f64).ln();
            Some(*acc)
        }))
        .collect();
    let mut z = 0.0;
    let mut m1 = vec![0.0; k];
    let mut m2 = vec![vec![0.0; k]; k];
    let mut x = vec![0u32; k];
    fn visit(
        j: usize,
        left: u32,
        x: &mut Vec<u32>,
        f: &mut dyn FnMut(&[u32]),
    ) {
        if j + 1 == x.len() {
            if left >= 1 {
                x[j] = left;
                f(x);
            }
            return;
        }
        let slots = (x.len() - j - 1) as u32;
        for v in 1..=left.saturating_sub(slots) {
            x[j] = v;
            visit(j + 1, left - v, x, f);
        }
    }
    let nf = n as f64;
    visit(0, n, &mut x, &mut |x| {
        let lw: f64 = ln_fact[n as usize]
            + x.iter().zip(pi).map(|(&c, p)| c as f64 * p.ln() - ln_fact[c as usize]).sum::<f64>();
        let w = lw.exp();
        z += w;
        for a in 0..k {
            let pa = x[a] as f64 / nf;
            m1[a] += w * pa;
            for b in 0..k {
                let pb = x[b] as f64 / nf;
                let within = (if a == b { pa } else { 0.0 } - pa * pb) / (lambda + 1.0);
                m2[a][b] += w * (within + pa * pb);
            }
        }
    });
    let mean: Vec<f64> = m1.iter().map(|v| v / z).collect();
    let cov = (0..k).map(|a| (0..k).map(|b| m2[a][b] / z - mean[a] * mean[b]).collect()).collect();
    (mean, cov)
}

/// Cells beyond 3 MC SE of the reference, and the largest |z| with its cell.
fn count_outside(mo: &Moments, mean: &[f64], cov: &[Vec<f64>]) -> (usize, f64, String) {
    let k = mean.len();
    let (mut bad, mut worst, mut cell) = (0, 0.0f64, String::new());
    let mut check = |z: f64, name: String| {
        bad += usize::from(z.abs() > 3.0);
        if z.abs() > worst {
            worst = z.abs();
            cell = name;
        }
    };
    for a in 0..k {
        check((mo.mean[a] - mean[a]) / mo.mean_se[a], format!("mean[{a}]"));
        for b in a..k {
            check((mo.cov[a][b] - cov[a][b]) / mo.cov_se[a][b], format!("cov[{a}][{b}]"));
        }
    }
    (bad, worst, cell)
}

/// Two-sided normal quantile holding the family-wise error of 168 cells at
/// the 3-sigma rate (0.0027).
const Z_FAMILY_168: f64 = 4.3135;

fn criterion_3() -> Vec<Line> {
    let start = Instant::now();
    let truth = SimulationTruth::taku_shaped();
    let mut rng = stream_rng(1003, 0);
    let reps = 10_000;
    let mut per_week: Vec<Vec<Vec<f64>>> = (0..12).map(|_| Vec::with_capacity(reps)).collect();
    for _ in 0..reps {
        let s = simulate_dataset(&truth, SeRule::AtEstimate, &mut rng).unwrap();
        for (t, w) in s.dataset.weeks.iter().enumerate() {
            per_week[t].push(w.p_hat.as_slice().to_vec());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let (mut bad_weeks, mut bad_cells) = (Vec::new(), 0);
    let (mut bad_weeks_trunc, mut bad_cells_trunc) = (Vec::new(), 0);
    let mut worst_trunc = (0.0f64, String::new());
    for t in 0..12 {
        let mo = moments(&per_week[t]);
        let (n, pi, lambda) = (truth.n[t], &truth.pi[t], truth.lambda[t]);
        let bt = beta_tilde_oracle(lambda, n);
        let cov: Vec<Vec<f64>> =
            (0..4).map(|a| (0..4).map(|b| bt * (if a == b { pi[a] } else { 0.0 } - pi[a] * pi[b])).collect()).collect();
        let (bad, _, _) = count_outside(&mo, pi, &cov);
        if bad > 0 {
            bad_weeks.push(format!("{}(n={n})", t + 1));
        }
        bad_cells += bad;
        let (tm, tc) = truncated_moments(n, pi, lambda);
        let (bad, z, cell) = count_outside(&mo, &tm, &tc);
        if z > worst_trunc.0 {
            worst_trunc = (z, format!("week {} {cell}", t + 1));
        }
        if bad > 0 {
            bad_weeks_trunc.push(format!("{}(n={n})", t + 1));
        }
        bad_cells_trunc += bad;
    }
    let weeks = |w: Vec<String>| if w.is_empty() { "none".to_string() } else { w.join(", ") };
    vec![
        line(
            "3",
            "generator moments",
            bad_cells == 0 && secs < 60.0,
            format!(
                "{bad_cells} of 168 mean/covariance cells beyond 3 MC SE of the unconditional moments; weeks {}; {secs:.1} s",
                weeks(bad_weeks)
            ),
        ),
        line(
            "3t",
            "generator moments given zero-count rejection",
            worst_trunc.0 <= Z_FAMILY_168,
            format!(
                "vs exact moments conditional on all latent counts > 0: {bad_cells_trunc} of 168 cells beyond 3 MC SE (weeks {}), max |z| {:.2} at {} (family-wise bound {Z_FAMILY_168})",
                weeks(bad_weeks_trunc),
                worst_trunc.0,
                worst_trunc.1
            ),
        ),
    ]
}

/// Two-stage draw without rejection: stocks with a zero latent count get
/// exactly zero, the rest a Dirichlet over the positive parameters.
fn rdm_two_stage(n: u32, pi: &[f64], lambda: f64, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
    let x = draw_multinomial(n, pi, rng).unwrap();
    let pos: Vec<usize> = (0..pi.len()).filter(|&k| x.counts()[k] > 0).collect();
    let mut out = vec![0.0; pi.len()];
    if pos.len() == 1 {
        out[pos[0]] = 1.0;
        return out;
    }
    let alpha: Vec<f64> = pos.iter().map(|&k| lambda * x.counts()[k] as f64 / n as f64).collect();
    for (&k, v) in pos.iter().zip(draw_dirichlet(&alpha, rng).unwrap().as_slice()) {
        out[k] = *v;
    }
    out
}

fn criterion_4() -> Vec<Line> {
    let start = Instant::now();
    let truth = SimulationTruth::taku_shaped();
    let mut rng = stream_rng(1004, 0);
    let reps = 20_000;
    let mut bad = 0;
    for t in 0..12 {
        let (n, pi, lam) = (truth.n[t], &truth.pi[t], truth.lambda[t]);
        let lt = 1.0 / beta_tilde_oracle(lam, n) - 1.0;
        let alpha: Vec<f64> = pi.iter().map(|p| lt * p).collect();
        let rdm: Vec<Vec<f64>> = (0..reps).map(|_| rdm_two_stage(n, pi, lam, &mut rng)).collect();
        let mmd: Vec<Vec<f64>> = (0..reps).map(|_| draw_dirichlet(&alpha, &mut rng).unwrap().into_inner()).collect();
        let (a, b) = (moments(&rdm), moments(&mmd));
        for i in 0..4 {
            let se = a.mean_se[i].hypot(b.mean_se[i]);
            bad += usize::from((a.mean[i] - b.mean[i]).abs() > 3.0 * se);
            for j in i..4 {
                let se = a.cov_se[i][j].hypot(b.cov_se[i][j]);
                bad += usize::from((a.cov[i][j] - b.cov[i][j]).abs() > 3.0 * se);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    vec![line(
        "4",
        "MMD ~ RDM moment matching",
        bad == 0 && secs < 60.0,
        format!("{bad} of 168 first/second-moment cells beyond 3 MC SE; {secs:.1} s"),
    )]
}

fn criterion_5() -> Vec<Line> {
    let start = Instant::now();
    let truth = SimulationTruth::taku_shaped();
    let options = StudyOptions {
        mcmc: McmcConfig { initial_iters: 4_000, keep: 1_000, ..Default::default() },
        ..Default::default()
    };
    let out = run_study(&truth, &Method::ALL, 200, 2024, &options).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let get = |m: Method| out.metrics.iter().find(|x| x.method == m).unwrap();
    let (mom, alt, naive) = (get(Method::Mom), get(Method::MomAlt), get(Method::MomNaive));
    let mmd_ar1 = get(Method::Bayes { likelihood: Likelihood::Mmd, prior: Prior::Ar1 });
    let table: Vec<String> = out
        .metrics
        .iter()
        .map(|m| {
            format!(
                "{} {}: RBias {:.3} RRMSE {:.3} CP {:.3} LCI {:.0}",
                m.method.model_label(),
                m.method.prior_label(),
                m.rbias,
                m.rrmse,
                m.cp,
                m.lci
            )
        })
        .collect();
    println!("      study, 200 replicates, {secs:.0} s wall:\n        {}", table.join("\n        "));
    let max_bias = [mom, alt, naive].iter().map(|m| m.rbias.abs()).fold(0.0, f64::max);
    vec![
        line("5a", "MoM variants unbiased", max_bias <= 0.01, format!("max |RBias| {max_bias:.4} (tol 0.01)")),
        line(
            "5b",
            "naive coverage low, corrected coverage nominal",
            naive.cp <= 0.85 && mom.cp >= 0.90 && alt.cp >= 0.90,
            format!("CP naive {:.3} (<= 0.85), MoM {:.3} (>= 0.90), Alt {:.3} (>= 0.90)", naive.cp, mom.cp, alt.cp),
        ),
        line(
            "5c",
            "interval length ordering Alt > MoM > Naive",
            alt.lci > mom.lci && mom.lci > naive.lci,
            format!("LCI Alt {:.0}, MoM {:.0}, Naive {:.0}", alt.lci, mom.lci, naive.lci),
        ),
        line(
            "5d",
            "MMD-AR(1) coverage",
            (0.90..=0.99).contains(&mmd_ar1.cp),
            format!("CP {:.3} in [0.90, 0.99]", mmd_ar1.cp),
        ),
    ]
}

fn batch_mean_se(xs: &[f64], batches: usize) -> (f64, f64) {
    let size = xs.len() / batches;
    let means: Vec<f64> = xs.chunks_exact(size).map(|c| c.iter().sum::<f64>() / size as f64).collect();
    let b = means.len() as f64;
    let mean = means.iter().sum::<f64>() / b;
    (mean, (means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1.0) / b).sqrt())
}

fn criterion_6() -> Vec<Line> {
    let start = Instant::now();
    let truth = SimulationTruth::taku_shaped();
    let season = simulate_dataset(&truth, SeRule::AtEstimate, &mut stream_rng(1006, 0)).unwrap();
    let ds = &season.dataset;
    let (t_len, k) = (ds.num_weeks(), ds.num_stocks());

    // Weeks are independent a priori, so each stock's week-averaged draw has
    // mean 1/K too. Ten independent runs give the Monte Carlo error directly.
    let spec = ModelSpec::new(Likelihood::Mmd, Prior::DirichletFlat, 2.0, vec![50.0; t_len]).unwrap();
    let runs = 10;
    let per_run: Vec<Vec<f64>> = (0..runs)
        .map(|r| {
            let cfg = McmcConfig { prior_only: true, initial_iters: 20_000, seed: 6_100 + 10 * r, ..Default::default() };
            let mean = run_mcmc(ds, &spec, &cfg).unwrap().pi_mean();
            (0..k).map(|j| (0..t_len).map(|t| mean[t * k + j]).sum::<f64>() / t_len as f64).collect()
        })
        .collect();
    let mut off = 0;
    let mut worst_z = 0.0f64;
    for j in 0..k {
        let xs: Vec<f64> = per_run.iter().map(|r| r[j]).collect();
        let (m, se) = batch_mean_se(&xs, runs as usize);
        let z = (m - 1.0 / k as f64).abs() / se;
        worst_z = worst_z.max(z);
        off += usize::from(z > 3.0);
    }

    let spec = ModelSpec::new(Likelihood::Mmd, Prior::DirichletFlat, 2.0, vec![1e5; t_len]).unwrap();
    let cfg = McmcConfig { initial_iters: 4_000, keep: 2_000, seed: 62, ..Default::default() };
    let sharp = run_mcmc(ds, &spec, &cfg).unwrap();
    let mean = sharp.pi_mean();
    let p_hat: Vec<f64> = ds.weeks.iter().flat_map(|w| w.p_hat.as_slice().to_vec()).collect();
    let dev = mean.iter().zip(&p_hat).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let rhat = sharp.rhat_n.unwrap_or(f64::INFINITY);
    let secs = start.elapsed().as_secs_f64();
    vec![line(
        "6",
        "posterior sanity",
        off == 0 && dev <= 0.02 && rhat < 1.1 && sharp.chains.len() == 3 && secs < 300.0,
        format!(
            "prior-only: {off} of {k} stock means beyond 3 MC SE of 1/K (max z {worst_z:.2}); sharp likelihood: max |E pi - p_hat| {dev:.4} (tol 0.02), R-hat(N) {rhat:.3} over 3 chains; {secs:.1} s"
        ),
    )]
}

fn criterion_7() -> Vec<Line> {
    let start = Instant::now();
    let mut rng = stream_rng(1007, 0);
    let psi = 2.0;
    let draws = 100_000;
    let mut worst = 0.0f64;
    for phi in [-0.9, 0.0, 0.9] {
        let (mut first, mut last) = (0.0, 0.0);
        for _ in 0..draws {
            let z = ar1_prior_draw(12, 1, phi, psi, &mut rng);
            first += z[0][0] * z[0][0];
            last += z[11][0] * z[11][0];
        }
        for v in [first, last] {
            worst = worst.max((v / draws as f64 / (psi * psi) - 1.0).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    vec![line(
        "7",
        "AR(1) prior stationarity",
        worst <= 0.02 && secs < 30.0,
        format!("max relative deviation of Var Z from psi^2 at t = 1, T: {worst:.4} (tol 0.02); {secs:.2} s"),
    )]
}

fn criterion_8() -> Vec<Line> {
    let start = Instant::now();
    let s: Vec<_> = [0.5, 2.0, 5.0, 10.0]
        .iter()
        .enumerate()
        .map(|(i, &psi)| psi_prior_predictive(4, psi, 10_000, 50, &mut stream_rng(1008, i as u64)).unwrap())
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let pass = s[0].p_above_half < 0.05 && s[1].p_middle > s[2].p_middle && s[1].p_middle > s[3].p_middle;
    vec![line(
        "8",
        "psi prior-predictive",
        pass && secs < 10.0,
        format!(
            "psi 0.5: P(pi > 0.5) {:.3} (< 0.05); P(0.25 < pi < 0.75) psi 2 {:.3} vs psi 5 {:.3}, psi 10 {:.3}; {secs:.2} s",
            s[0].p_above_half, s[1].p_middle, s[2].p_middle, s[3].p_middle
        ),
    )]
}

fn criterion_9() -> Vec<Line> {
    let (lo, hi) = wald_interval(49_873.0, 1_498f64.powi(2), PAPER_Z);
    vec![line(
        "9",
        "interval arithmetic",
        lo.round() == 46_937.0 && hi.round() == 52_809.0,
        format!("({lo:.2}, {hi:.2}) rounds to ({:.0}, {:.0}); expected (46937, 52809)", lo.round(), hi.round()),
    )]
}

fn simulate_once(config: &Path, out: &Path, format: &str) {
    let status = Command::new(env!("CARGO_BIN_EXE_rdm-gmr"))
        .args(["simulate", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(["--format", format])
        .env_remove("RDM_GMR_SEED")
        .stdout(std::process::Stdio::null())
        .status()
        .expect("run rdm-gmr");
    assert!(status.success());
}

fn criterion_10() -> Vec<Line> {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("study.toml");
    std::fs::write(
        &config,
        "replicates = 12\nseed = 99\nmethods = [\"mom\", \"mom-alt\", \"mom-naive\", \"mmd-ar1\", \"rdm-dir\"]\n\n[mcmc]\ninitial_iters = 1000\nkeep = 200\n",
    )
    .unwrap();
    let mut same = true;
    let mut compared = 0;
    for format in ["csv", "json"] {
        let (a, b) = (dir.path().join(format!("a-{format}")), dir.path().join(format!("b-{format}")));
        simulate_once(&config, &a, format);
        simulate_once(&config, &b, format);
        for entry in std::fs::read_dir(&a).unwrap() {
            let name = entry.unwrap().file_name();
            if name == "timing.csv" {
                continue;
            }
            let (x, y) = (std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).unwrap());
            same &= x == y;
            compared += 1;
        }
    }
    vec![line(
        "10",
        "reproducibility",
        same && compared >= 4,
        format!("{compared} report files compared byte for byte across two runs"),
    )]
}

fn main() {
    let criteria: [fn() -> Vec<Line>; 10] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
    ];
    let mut unexpected = Vec::new();
    let mut passed = 0;
    let mut total = 0;
    println!("\nacceptance criteria");
    for run in criteria {
        for l in run() {
            total += 1;
            let known = KNOWN_FAILURES.contains(&l.id);
            let tag = match (l.pass, known) {
                (true, _) => "PASS",
                (false, true) => "FAIL (known)",
                (false, false) => "FAIL",
            };
            println!("  [{tag}] {:<3} {}: {}", l.id, l.name, l.detail);
            if l.pass {
                passed += 1;
            } else if !known {
                unexpected.push(l.id);
            }
        }
    }
    println!("\n{passed} of {total} criteria pass; unexpected failures: {unexpected:?}\n");
    if !unexpected.is_empty() {
        std::process::exit(1);
    }
}
