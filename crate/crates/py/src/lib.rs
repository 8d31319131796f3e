//! Python bindings: datasets, calibration, the escapement estimators, the
//! simulator and the psi prior-predictive check.

use std::path::PathBuf;

use gmr_core::calibration::{calibrate_all, CalibrationMode, CalibrationResult};
use gmr_core::estimators::{mom_estimate as core_mom, wald_interval as core_wald, z_for_level, MomVariant, PAPER_Z};
use gmr_core::inference::{bayes_estimate as core_bayes, McmcConfig};
use gmr_core::simulation::{
    psi_prior_predictive as core_psi, run_study as core_study, simulate_dataset, stream_rng, SeRule,
    SimulationTruth, StudyOptions,
};
use gmr_core::{dataset, Composition, CompositionEstimate, GmrDataset, Likelihood, Method, Prior};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: gmr_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse<T: std::str::FromStr<Err = gmr_core::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

/// A validated season of weekly stock-composition estimates.
#[pyclass(name = "Dataset", module = "rdm_gmr", from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: GmrDataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    #[pyo3(signature = (p_hat, se, n, weights, lake_stocks, lake_count, stock_names=None, week_ids=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        p_hat: Vec<Vec<f64>>,
        se: Vec<Vec<f64>>,
        n: Vec<u32>,
        weights: Vec<f64>,
        lake_stocks: Vec<bool>,
        lake_count: f64,
        stock_names: Option<Vec<String>>,
        week_ids: Option<Vec<i64>>,
    ) -> PyResult<Self> {
        if se.len() != p_hat.len() || n.len() != p_hat.len() {
            return Err(PyValueError::new_err("p_hat, se and n need one entry per week"));
        }
        let weeks = p_hat
            .into_iter()
            .zip(se)
            .zip(&n)
            .map(|((p, s), &n)| CompositionEstimate::new(Composition::new(p)?, s, n))
            .collect::<gmr_core::Result<Vec<_>>>()
            .map_err(err)?;
        let k = lake_stocks.len();
        let names = stock_names.unwrap_or_else(|| (1..=k).map(|i| format!("stock{i}")).collect());
        let ids = week_ids.unwrap_or_else(|| (1..=weeks.len() as i64).collect());
        let inner = GmrDataset::new(weeks, weights, lake_stocks, lake_count, names, ids).map_err(err)?;
        Ok(Self { inner })
    }

    /// Reads the composition and weight tables from CSV files.
    #[staticmethod]
    fn load(composition: PathBuf, weights: PathBuf, lake_stocks: Vec<String>, lake_count: f64) -> PyResult<Self> {
        let config = dataset::DatasetConfig { lake_count, lake_stocks };
        let inner = dataset::load_dataset(&composition, &weights, &config).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn weeks(&self) -> usize {
        self.inner.num_weeks()
    }

    #[getter]
    fn stocks(&self) -> usize {
        self.inner.num_stocks()
    }

    #[getter]
    fn stock_names(&self) -> Vec<String> {
        self.inner.stock_names.clone()
    }

    #[getter]
    fn week_ids(&self) -> Vec<i64> {
        self.inner.week_ids.clone()
    }

    #[getter]
    fn lake_count(&self) -> f64 {
        self.inner.lake_count
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights.clone()
    }

    #[getter]
    fn lake_stocks(&self) -> Vec<bool> {
        self.inner.lake_mask.clone()
    }

    #[getter]
    fn sample_sizes(&self) -> Vec<u32> {
        self.inner.sample_sizes()
    }

    #[getter]
    fn p_hat(&self) -> Vec<Vec<f64>> {
        self.inner.weeks.iter().map(|w| w.p_hat.as_slice().to_vec()).collect()
    }

    #[getter]
    fn se(&self) -> Vec<Vec<f64>> {
        self.inner.weeks.iter().map(|w| w.se.clone()).collect()
    }

    fn lake_proportions(&self) -> Vec<f64> {
        self.inner.lake_proportions()
    }

    /// Writes `composition.csv` and `weights.csv` into `directory`.
    fn to_csv(&self, directory: PathBuf) -> PyResult<()> {
        let open = |name: &str| {
            std::fs::File::create(directory.join(name)).map_err(|e| PyValueError::new_err(e.to_string()))
        };
        self.inner.write_composition_csv(open("composition.csv")?).map_err(err)?;
        self.inner.write_weights_csv(open("weights.csv")?).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(weeks={}, stocks={}, lake_count={})",
            self.inner.num_weeks(),
            self.inner.num_stocks(),
            self.inner.lake_count
        )
    }
}

/// Calibrated concentration of one week.
#[pyclass(name = "Calibration", module = "rdm_gmr", get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyCalibration {
    week: i64,
    n: u32,
    beta_hat: f64,
    lambda_hat: f64,
    beta_tilde: f64,
    lambda_tilde: f64,
    inflation: f64,
    clamped: bool,
}

#[pymethods]
impl PyCalibration {
    fn __repr__(&self) -> String {
        format!(
            "Calibration(week={}, n={}, beta_hat={:.4}, lambda_hat={:.3}, inflation={:.3})",
            self.week, self.n, self.beta_hat, self.lambda_hat, self.inflation
        )
    }
}

fn calibration_mode(pooled: bool) -> CalibrationMode {
    if pooled {
        CalibrationMode::Pooled
    } else {
        CalibrationMode::PerWeek
    }
}

fn calibrate_inner(ds: &GmrDataset, pooled: bool) -> PyResult<Vec<CalibrationResult>> {
    calibrate_all(ds, calibration_mode(pooled)).map_err(err)
}

/// Per-week plug-in calibration; raises if any week cannot be fitted.
#[pyfunction]
#[pyo3(signature = (dataset, pooled=false))]
fn calibrate(dataset: &PyDataset, pooled: bool) -> PyResult<Vec<PyCalibration>> {
    let cal = calibrate_inner(&dataset.inner, pooled)?;
    Ok(cal
        .into_iter()
        .zip(&dataset.inner.week_ids)
        .map(|(c, &week)| PyCalibration {
            week,
            n: c.n,
            beta_hat: c.beta_hat,
            lambda_hat: c.lambda_hat,
            beta_tilde: c.beta_tilde,
            lambda_tilde: c.lambda_tilde,
            inflation: c.inflation,
            clamped: c.clamped,
        })
        .collect())
}

/// Escapement estimate with its interval; MCMC fields are `None` for the
/// moment estimators.
#[pyclass(name = "Estimate", module = "rdm_gmr", get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyEstimate {
    method: String,
    estimate: f64,
    sd: f64,
    ci_low: f64,
    ci_high: f64,
    rhat_n: Option<f64>,
    rhat_phi: Option<f64>,
    converged: Option<bool>,
    iterations: Option<usize>,
    draws: Option<Vec<f64>>,
}

#[pymethods]
impl PyEstimate {
    fn __repr__(&self) -> String {
        format!(
            "Estimate(method={:?}, estimate={:.1}, sd={:.1}, ci=({:.1}, {:.1}))",
            self.method, self.estimate, self.sd, self.ci_low, self.ci_high
        )
    }
}

fn z_value(paper_z: bool, level: f64) -> PyResult<f64> {
    if paper_z {
        Ok(PAPER_Z)
    } else if level > 0.0 && level < 1.0 {
        Ok(z_for_level(level))
    } else {
        Err(PyValueError::new_err(format!("level {level} must lie in (0, 1)")))
    }
}

/// Method-of-moments estimate; `variant` is `mom`, `alt` or `naive`.
#[pyfunction]
#[pyo3(signature = (dataset, variant="mom", level=0.95, paper_z=false, pooled=false))]
fn mom_estimate(dataset: &PyDataset, variant: &str, level: f64, paper_z: bool, pooled: bool) -> PyResult<PyEstimate> {
    let variant = match variant.to_ascii_lowercase().as_str() {
        "mom" | "plugin" => MomVariant::Plugin,
        "alt" | "mom-alt" => MomVariant::Alt,
        "naive" | "mom-naive" => MomVariant::Naive,
        other => return Err(PyValueError::new_err(format!("unknown variant {other:?}"))),
    };
    let cal = calibrate_inner(&dataset.inner, pooled)?;
    let e = core_mom(&dataset.inner, &cal, variant, z_value(paper_z, level)?).map_err(err)?;
    Ok(PyEstimate {
        method: e.method.to_string(),
        estimate: e.n_hat,
        sd: e.sd,
        ci_low: e.ci_low,
        ci_high: e.ci_high,
        rhat_n: None,
        rhat_phi: None,
        converged: None,
        iterations: None,
        draws: None,
    })
}

/// Posterior mean escapement and equal-tailed credible interval.
#[pyfunction]
#[pyo3(signature = (
    dataset, likelihood="mmd", prior="ar1", psi=2.0, chains=3, initial_iters=4000,
    max_iters=64000, keep=10000, seed=0, level=0.95, pooled=false, keep_draws=false
))]
#[allow(clippy::too_many_arguments)]
fn bayes_estimate(
    py: Python<'_>,
    dataset: &PyDataset,
    likelihood: &str,
    prior: &str,
    psi: f64,
    chains: usize,
    initial_iters: usize,
    max_iters: usize,
    keep: usize,
    seed: u64,
    level: f64,
    pooled: bool,
    keep_draws: bool,
) -> PyResult<PyEstimate> {
    let likelihood = match likelihood.to_ascii_lowercase().as_str() {
        "rdm" => Likelihood::Rdm,
        "mmd" => Likelihood::Mmd,
        other => return Err(PyValueError::new_err(format!("unknown likelihood {other:?}"))),
    };
    let prior: Prior = parse(prior)?;
    let cal = calibrate_inner(&dataset.inner, pooled)?;
    let config = McmcConfig { chains, initial_iters, max_iters, keep, seed, ..Default::default() };
    let ds = &dataset.inner;
    let fit = py.detach(|| core_bayes(ds, &cal, likelihood, prior, psi, &config, level)).map_err(err)?;
    Ok(PyEstimate {
        method: fit.estimate.method.to_string(),
        estimate: fit.estimate.n_hat,
        sd: fit.estimate.sd,
        ci_low: fit.estimate.ci_low,
        ci_high: fit.estimate.ci_high,
        rhat_n: fit.chains.rhat_n,
        rhat_phi: fit.chains.rhat_phi,
        converged: Some(fit.chains.converged),
        iterations: Some(fit.chains.total_iters),
        draws: keep_draws.then(|| fit.chains.n_draws()),
    })
}

/// `(n_hat - z sd, n_hat + z sd)`.
#[pyfunction]
#[pyo3(signature = (n_hat, variance, level=0.95, paper_z=false))]
fn wald_interval(n_hat: f64, variance: f64, level: f64, paper_z: bool) -> PyResult<(f64, f64)> {
    Ok(core_wald(n_hat, variance, z_value(paper_z, level)?))
}

/// True weekly compositions and sampling design for simulation.
#[pyclass(name = "Truth", module = "rdm_gmr", from_py_object)]
#[derive(Clone)]
struct PyTruth {
    inner: SimulationTruth,
}

#[pymethods]
impl PyTruth {
    #[new]
    #[pyo3(signature = (pi, n_true, weights, n, lam, lake_stocks, stock_names=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        pi: Vec<Vec<f64>>,
        n_true: f64,
        weights: Vec<f64>,
        n: Vec<u32>,
        lam: Vec<f64>,
        lake_stocks: Vec<bool>,
        stock_names: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let k = lake_stocks.len();
        let inner = SimulationTruth {
            pi,
            n_true,
            weights,
            n,
            lambda: lam,
            lake_mask: lake_stocks,
            stock_names: stock_names.unwrap_or_else(|| (1..=k).map(|i| format!("stock{i}")).collect()),
        };
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    /// Twelve weeks and four stocks with realistic sample sizes and
    /// concentrations; the default simulation design.
    #[staticmethod]
    fn taku_shaped() -> Self {
        Self { inner: SimulationTruth::taku_shaped() }
    }

    #[getter]
    fn pi(&self) -> Vec<Vec<f64>> {
        self.inner.pi.clone()
    }

    #[getter]
    fn n_true(&self) -> f64 {
        self.inner.n_true
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights.clone()
    }

    #[getter]
    fn n(&self) -> Vec<u32> {
        self.inner.n.clone()
    }

    #[getter]
    fn lam(&self) -> Vec<f64> {
        self.inner.lambda.clone()
    }

    #[getter]
    fn lake_count(&self) -> f64 {
        self.inner.lake_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "Truth(weeks={}, stocks={}, n_true={})",
            self.inner.weeks(),
            self.inner.stocks(),
            self.inner.n_true
        )
    }
}

fn se_rule(s: &str) -> PyResult<SeRule> {
    match s {
        "at-estimate" => Ok(SeRule::AtEstimate),
        "at-latent" => Ok(SeRule::AtLatent),
        other => Err(PyValueError::new_err(format!("unknown se_rule {other:?}"))),
    }
}

/// Draws one synthetic season from `truth`.
#[pyfunction]
#[pyo3(signature = (truth, seed=0, se_rule="at-estimate"))]
fn simulate(truth: &PyTruth, seed: u64, se_rule: &str) -> PyResult<PyDataset> {
    let rule = self::se_rule(se_rule)?;
    let season = simulate_dataset(&truth.inner, rule, &mut stream_rng(seed, 0)).map_err(err)?;
    Ok(PyDataset { inner: season.dataset })
}

/// One row of a simulation-study table.
#[pyclass(name = "StudyRow", module = "rdm_gmr", get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyStudyRow {
    method: String,
    rbias: f64,
    rrmse: f64,
    cp: f64,
    lci: f64,
    mean_time: f64,
    replicates: usize,
    failures: usize,
}

#[pymethods]
impl PyStudyRow {
    fn __repr__(&self) -> String {
        format!(
            "StudyRow(method={:?}, rbias={:.3}, rrmse={:.3}, cp={:.3}, lci={:.0})",
            self.method, self.rbias, self.rrmse, self.cp, self.lci
        )
    }
}

/// Replicated comparison of estimators against a known truth.
#[pyfunction]
#[pyo3(signature = (
    truth, methods=None, replicates=200, seed=0, initial_iters=4000, keep=1000, psi=2.0,
    se_rule="at-estimate", level=0.95, paper_z=false
))]
#[allow(clippy::too_many_arguments)]
fn run_study(
    py: Python<'_>,
    truth: &PyTruth,
    methods: Option<Vec<String>>,
    replicates: usize,
    seed: u64,
    initial_iters: usize,
    keep: usize,
    psi: f64,
    se_rule: &str,
    level: f64,
    paper_z: bool,
) -> PyResult<Vec<PyStudyRow>> {
    let methods: Vec<Method> = match methods {
        None => Method::ALL.to_vec(),
        Some(m) => m.iter().map(|s| parse(s)).collect::<PyResult<_>>()?,
    };
    let options = StudyOptions {
        mcmc: McmcConfig { initial_iters, keep, ..Default::default() },
        psi,
        se_rule: self::se_rule(se_rule)?,
        z: z_value(paper_z, level)?,
        level,
        ..Default::default()
    };
    let t = &truth.inner;
    let out = py.detach(|| core_study(t, &methods, replicates, seed, &options)).map_err(err)?;
    Ok(out
        .metrics
        .into_iter()
        .map(|m| PyStudyRow {
            method: m.method.to_string(),
            rbias: m.rbias,
            rrmse: m.rrmse,
            cp: m.cp,
            lci: m.lci,
            mean_time: m.mean_time,
            replicates: m.replicates,
            failures: m.failures,
        })
        .collect())
}

/// Prior-predictive summary of one composition cell under the AR(1) prior.
#[pyclass(name = "PsiSummary", module = "rdm_gmr", get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyPsiSummary {
    k: usize,
    psi: f64,
    draws: usize,
    edges: Vec<f64>,
    density: Vec<f64>,
    mean: f64,
    quantiles: Vec<f64>,
    p_above_half: f64,
    p_middle: f64,
}

#[pyfunction]
#[pyo3(signature = (psi, k=4, draws=10000, bins=50, seed=0))]
fn psi_prior_predictive(psi: f64, k: usize, draws: usize, bins: usize, seed: u64) -> PyResult<PyPsiSummary> {
    let s = core_psi(k, psi, draws, bins, &mut stream_rng(seed, 0)).map_err(err)?;
    Ok(PyPsiSummary {
        k: s.k,
        psi: s.psi,
        draws: s.draws,
        edges: s.edges,
        density: s.density,
        mean: s.mean,
        quantiles: s.quantiles.to_vec(),
        p_above_half: s.p_above_half,
        p_middle: s.p_middle,
    })
}

#[pymodule]
fn rdm_gmr(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyCalibration>()?;
    m.add_class::<PyEstimate>()?;
    m.add_class::<PyTruth>()?;
    m.add_class::<PyStudyRow>()?;
    m.add_class::<PyPsiSummary>()?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(mom_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(bayes_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(wald_interval, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    m.add_function(wrap_pyfunction!(psi_prior_predictive, m)?)?;
    m.add("PAPER_Z", PAPER_Z)?;
    Ok(())
}
