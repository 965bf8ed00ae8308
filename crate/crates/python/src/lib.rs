//! Python bindings for `gainloss`.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use gainloss::asymmetry::{asymmetry_curve, theta_fit};
use gainloss::inverse_stats::{self as inv, ReturnLevel};
use gainloss::market_data::{self as md, CsvSchema};
use gainloss::rng::RngStream;
use gainloss::shuffler::{self, Signs, SweepConfig};
use gainloss::synth::{SynthKind, SynthSpec};
use gainloss::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json(v: &impl serde::Serialize) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))
}

type CurveRow = (usize, f64, Option<f64>, Option<f64>);

/// Daily log returns with their volatility.
#[pyclass(name = "ReturnSeries", module = "pygainloss", frozen)]
pub struct PyReturnSeries {
    inner: md::ReturnSeries,
}

#[pymethods]
impl PyReturnSeries {
    #[new]
    fn new(values: Vec<f64>) -> PyResult<Self> {
        md::ReturnSeries::new(values).map(|inner| Self { inner }).map_err(to_py)
    }

    /// Log returns of a `date,close` CSV file.
    #[staticmethod]
    #[pyo3(signature = (path, date_column = "date", close_column = "close"))]
    fn from_csv(path: &str, date_column: &str, close_column: &str) -> PyResult<Self> {
        let schema = CsvSchema { date_column: date_column.into(), close_column: close_column.into() };
        let p = md::load_csv(path, &schema).map_err(to_py)?;
        let inner = md::daily_returns(&md::to_log(&p)).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Log returns of a sequence of closing prices.
    #[staticmethod]
    fn from_prices(close: Vec<f64>) -> PyResult<Self> {
        if close.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(PyValueError::new_err("prices must be positive and finite"));
        }
        let s = md::LogSeries::new(close.iter().map(|c| c.ln()).collect(), None).map_err(to_py)?;
        md::daily_returns(&s).map(|inner| Self { inner }).map_err(to_py)
    }

    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    #[getter]
    fn sigma(&self) -> PyResult<f64> {
        md::volatility(&self.inner).map_err(to_py)
    }

    /// Cumulative log index starting at `s0`.
    #[pyo3(signature = (s0 = 0.0))]
    fn index(&self, s0: f64) -> Vec<f64> {
        md::rebuild_index(&self.inner, s0).values().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("ReturnSeries(len={}, sigma={:?})", self.inner.len(), self.inner.sigma_cache())
    }
}

/// Synthetic returns. `kind` is "gaussian", "student_t" or "drop_rebound".
#[pyfunction]
#[pyo3(signature = (kind, n = 20000, seed = 0, sigma = 0.01, nu = 3.0, scale = 0.01, drop = 0.05, rebound_len = 10, drop_prob = 0.02))]
#[allow(clippy::too_many_arguments)]
fn synth(
    kind: &str,
    n: usize,
    seed: u64,
    sigma: f64,
    nu: f64,
    scale: f64,
    drop: f64,
    rebound_len: usize,
    drop_prob: f64,
) -> PyResult<PyReturnSeries> {
    let kind = match kind {
        "gaussian" => SynthKind::Gaussian { sigma },
        "student_t" => SynthKind::StudentT { nu, scale },
        "drop_rebound" => SynthKind::DropRebound { sigma, drop_magnitude: drop, rebound_len, drop_prob },
        other => return Err(PyValueError::new_err(format!("unknown kind '{other}'"))),
    };
    let inner = SynthSpec { kind, n, seed }.generate().map_err(to_py)?;
    Ok(PyReturnSeries { inner })
}

/// First-passage time histogram for one return level.
#[pyclass(name = "FptDistribution", module = "pygainloss", frozen)]
pub struct PyFpt {
    inner: inv::FptDistribution,
}

#[pymethods]
impl PyFpt {
    /// Counts indexed by tau (index 0 is always 0).
    fn counts(&self) -> Vec<u64> {
        self.inner.counts().to_vec()
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.inner.level.rho
    }

    #[getter]
    fn censored(&self) -> u64 {
        self.inner.censored
    }

    #[getter]
    fn total_starts(&self) -> u64 {
        self.inner.total_starts
    }

    fn probability(&self, tau: usize) -> f64 {
        self.inner.probability(tau)
    }

    #[pyo3(signature = (smooth = inv::DEFAULT_SMOOTH_WINDOW))]
    fn mode(&self, smooth: usize) -> PyResult<usize> {
        inv::mode_tau(&self.inner, smooth).map_err(to_py)
    }

    /// Tail exponent and its standard error over `[lo, hi]`.
    fn tail_exponent(&self, lo: usize, hi: usize) -> PyResult<(f64, f64)> {
        inv::tail_exponent(&self.inner, lo, hi).map(|f| (f.value, f.stderr)).map_err(to_py)
    }
}

/// Histogram of first-passage times to `k * sigma` (or absolute `rho`).
#[pyfunction]
#[pyo3(signature = (returns, k = None, rho = None, tau_max = inv::DEFAULT_TAU_MAX))]
fn fpt_distribution(returns: &PyReturnSeries, k: Option<f64>, rho: Option<f64>, tau_max: usize) -> PyResult<PyFpt> {
    let level = match (k, rho) {
        (Some(k), None) => ReturnLevel::new(k, md::volatility(&returns.inner).map_err(to_py)?),
        (None, Some(rho)) => ReturnLevel::absolute(rho),
        _ => return Err(PyValueError::new_err("give exactly one of k or rho")),
    }
    .map_err(to_py)?;
    let s = md::rebuild_index(&returns.inner, 0.0);
    let inner = inv::fpt_distribution(&s, &level, tau_max).map_err(to_py)?;
    Ok(PyFpt { inner })
}

#[pyfunction]
fn brownian_fpt_pdf(rho: f64, diffusion: f64, tau: f64) -> PyResult<f64> {
    inv::brownian_fpt_pdf(rho, diffusion, tau).map_err(to_py)
}

#[pyfunction]
fn brownian_mode(rho: f64, diffusion: f64) -> f64 {
    inv::brownian_mode(rho, diffusion)
}

/// Half-open block bounds for a window length and leading offset.
#[pyfunction]
fn partition(len: usize, window: usize, offset: usize) -> PyResult<Vec<(usize, usize)>> {
    shuffler::partition(len, window, offset).map(|p| p.blocks).map_err(to_py)
}

#[pyfunction]
fn shuffle_blocks(returns: &PyReturnSeries, window: usize, offset: usize, seed: u64) -> PyResult<PyReturnSeries> {
    let p = shuffler::partition_returns(&returns.inner, window, offset).map_err(to_py)?;
    let inner = shuffler::shuffle_blocks(&p, &returns.inner, &RngStream::new(seed, vec![])).map_err(to_py)?;
    Ok(PyReturnSeries { inner })
}

/// Result of a window-shuffling sweep.
#[pyclass(name = "Sweep", module = "pygainloss", frozen)]
pub struct PySweep {
    inner: shuffler::SweepResult,
}

#[pymethods]
impl PySweep {
    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma
    }

    /// `(T, k, tau_star_plus, tau_star_minus)` rows; missing signs are None.
    fn cells(&self) -> Vec<CurveRow> {
        self.inner
            .cells
            .iter()
            .map(|c| (c.window, c.k, c.plus.as_ref().map(|s| s.tau_star), c.minus.as_ref().map(|s| s.tau_star)))
            .collect()
    }

    /// `(T, w, w_plus, w_minus)` for level `k_index`.
    #[pyo3(signature = (k_index = 0, t_inf = 1000))]
    fn asymmetry(&self, k_index: usize, t_inf: usize) -> PyResult<Vec<CurveRow>> {
        let c = asymmetry_curve(&self.inner, k_index, t_inf).map_err(to_py)?;
        Ok(c.points.iter().map(|p| (p.window, p.w, p.w_plus, p.w_minus)).collect())
    }

    /// θ and its standard error from windows shorter than `t_hi`.
    #[pyo3(signature = (k_index = 0, t_inf = 1000, t_hi = 30))]
    fn theta(&self, k_index: usize, t_inf: usize, t_hi: usize) -> PyResult<(f64, f64)> {
        let c = asymmetry_curve(&self.inner, k_index, t_inf).map_err(to_py)?;
        theta_fit(&c, t_hi).map(|f| (f.theta, f.stderr)).map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        json(&self.inner)
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_csv(&mut buf).map_err(to_py)?;
        String::from_utf8(buf).map_err(|e| PyValueError::new_err(e.to_string()))
    }
}

#[pyfunction]
#[pyo3(signature = (returns, windows, ks, n_p = 100, seed = 0, tau_max = inv::DEFAULT_TAU_MAX, smooth = inv::DEFAULT_SMOOTH_WINDOW, workers = 0))]
#[allow(clippy::too_many_arguments)]
fn sweep(
    py: Python<'_>,
    returns: &PyReturnSeries,
    windows: Vec<usize>,
    ks: Vec<f64>,
    n_p: usize,
    seed: u64,
    tau_max: usize,
    smooth: usize,
    workers: usize,
) -> PyResult<PySweep> {
    let cfg = SweepConfig { windows, ks, signs: Signs::Both, n_p, tau_max, smooth, master_seed: seed };
    let r = &returns.inner;
    let inner = py
        .detach(|| shuffler::with_workers(workers, || shuffler::sweep(r, &cfg)))
        .map_err(to_py)?
        .map_err(to_py)?;
    Ok(PySweep { inner })
}

/// `(tau, L, stderr)` rows of the leverage correlation.
#[pyfunction]
#[pyo3(signature = (returns, tau_lo = -50, tau_hi = 50))]
fn leverage(returns: &PyReturnSeries, tau_lo: i64, tau_hi: i64) -> PyResult<Vec<(i64, f64, f64)>> {
    let c = gainloss::leverage::leverage(&returns.inner, tau_lo, tau_hi).map_err(to_py)?;
    Ok(c.points.iter().map(|p| (p.tau, p.value, p.stderr)).collect())
}

#[pyfunction]
fn gamma_scaling(levels: Vec<(f64, f64)>, fit_min_abs_rho: f64) -> PyResult<(f64, f64)> {
    inv::gamma_scaling(&levels, fit_min_abs_rho).map(|f| (f.value, f.stderr)).map_err(to_py)
}

#[pymodule]
fn pygainloss(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyReturnSeries>()?;
    m.add_class::<PyFpt>()?;
    m.add_class::<PySweep>()?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(fpt_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(brownian_fpt_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(brownian_mode, m)?)?;
    m.add_function(wrap_pyfunction!(partition, m)?)?;
    m.add_function(wrap_pyfunction!(shuffle_blocks, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(leverage, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_scaling, m)?)?;
    Ok(())
}
