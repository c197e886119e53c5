//! Python bindings: series parsing, scaling, the swarm optimizer, training,
//! evaluation and forecasting.

use forecast::config::RunConfig;
use forecast::experiments::{self, ForecastModel, Trainer};
use forecast::swarm::{self, FnObjective, PSOConfig, Variant};
use forecast::timeseries::{self, NormalizationParams, TimeSeries, YearMonth};
use forecast::Error;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    if e.is_numeric() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn month(text: &str) -> PyResult<YearMonth> {
    text.parse().map_err(PyValueError::new_err)
}

/// Monthly series starting at `start` ("YYYY-MM").
#[pyclass(name = "Series", module = "swarm_forecast", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySeries {
    inner: TimeSeries,
}

#[pymethods]
impl PySeries {
    #[new]
    fn new(start: &str, values: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: TimeSeries::new(month(start)?, values).map_err(to_py)? })
    }

    #[getter]
    fn start(&self) -> String {
        self.inner.start().to_string()
    }

    #[getter]
    fn end(&self) -> String {
        self.inner.end().to_string()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn months(&self) -> Vec<String> {
        self.inner.months().map(|m| m.to_string()).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Returns `(train, test)` split at `boundary`, the first test month.
    fn split(&self, boundary: &str) -> PyResult<(PySeries, PySeries)> {
        let (a, b) = timeseries::split_train_test(&self.inner, month(boundary)?).map_err(to_py)?;
        Ok((PySeries { inner: a }, PySeries { inner: b }))
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn __repr__(&self) -> String {
        format!("Series({}..{}, {} months)", self.inner.start(), self.inner.end(), self.inner.len())
    }
}

#[pyfunction]
fn parse_series_csv(text: &str) -> PyResult<PySeries> {
    Ok(PySeries { inner: timeseries::parse_series_csv(text).map_err(to_py)? })
}

#[pyfunction]
fn sample_series() -> PySeries {
    PySeries { inner: forecast::sample::sample_series() }
}

/// Min-max scaling fitted on a series.
#[pyclass(name = "Normalization", module = "swarm_forecast", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyNormalization {
    inner: NormalizationParams,
}

#[pymethods]
impl PyNormalization {
    #[new]
    fn new(min: f64, max: f64) -> PyResult<Self> {
        Ok(Self { inner: NormalizationParams::new(min, max).map_err(to_py)? })
    }

    #[staticmethod]
    fn fit(series: &PySeries) -> PyResult<Self> {
        Ok(Self { inner: timeseries::fit_normalization(&series.inner).map_err(to_py)? })
    }

    #[getter]
    fn min(&self) -> f64 {
        self.inner.min
    }

    #[getter]
    fn max(&self) -> f64 {
        self.inner.max
    }

    fn normalize(&self, value: f64) -> f64 {
        self.inner.normalize(value)
    }

    fn denormalize(&self, scaled: f64) -> f64 {
        self.inner.denormalize(scaled)
    }
}

#[pyfunction]
#[pyo3(signature = (k, omega0 = 0.9, sigma = 0.8, k_max = 1000))]
fn inertia_weight(k: usize, omega0: f64, sigma: f64, k_max: usize) -> f64 {
    swarm::inertia_weight(k, &PSOConfig { omega0, sigma, k_max, ..PSOConfig::default() })
}

#[pyfunction]
#[pyo3(signature = (v_base, n, sub_steps = 3, cap = 5.0, floor = 0.1, sign = 1.0))]
fn speed_coefficient(v_base: f64, n: usize, sub_steps: usize, cap: f64, floor: f64, sign: f64) -> f64 {
    let cfg = PSOConfig { sub_steps, n_i1: Some(cap), n_i2: Some(floor), ..PSOConfig::default() };
    swarm::speed_coefficient(v_base, n, &cfg, sign)
}

#[pyfunction]
fn relative_error(true_value: f64, predicted: f64) -> PyResult<f64> {
    experiments::relative_error(true_value, predicted).map_err(to_py)
}

#[pyfunction]
fn accuracy_percent(true_value: f64, predicted: f64) -> PyResult<f64> {
    experiments::accuracy_percent(true_value, predicted).map_err(to_py)
}

/// Minimizes a Python callable over `[z_min, z_max]^dim`. Returns a dict with
/// `best_position`, `best_fitness`, `iterations`, `reached_target`, `trace`.
#[pyfunction]
#[pyo3(signature = (f, dim, variant = "mpso", seed = 0, swarm_size = 50, k_max = 1000, target_fitness = 0.005, z_min = -5.0, z_max = 5.0))]
#[allow(clippy::too_many_arguments)]
fn minimize<'py>(
    py: Python<'py>,
    f: Py<PyAny>,
    dim: usize,
    variant: &str,
    seed: u64,
    swarm_size: usize,
    k_max: usize,
    target_fitness: f64,
    z_min: f64,
    z_max: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let variant: Variant = variant.parse().map_err(to_py)?;
    let cfg = PSOConfig { seed, swarm_size, k_max, target_fitness, z_min, z_max, ..PSOConfig::default() };
    // a raised exception or a non-float result becomes NaN, which the
    // optimizer reports as a non-finite fitness
    let objective = FnObjective::new(dim, |x: &[f64]| {
        Python::attach(|py| f.call1(py, (x.to_vec(),)).and_then(|v| v.extract::<f64>(py)).unwrap_or(f64::NAN))
    });
    let run = py.detach(|| swarm::run_optimizer(&objective, &cfg, variant)).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("best_position", run.best_position)?;
    out.set_item("best_fitness", run.best_fitness)?;
    out.set_item("iterations", run.iterations_used)?;
    out.set_item("reached_target", run.reached_target)?;
    out.set_item("trace", run.trace)?;
    Ok(out)
}

/// A trained one-step-ahead forecaster.
#[pyclass(name = "Model", module = "swarm_forecast", frozen)]
struct PyModel {
    inner: ForecastModel,
    #[pyo3(get)]
    final_fitness: Option<f64>,
    #[pyo3(get)]
    iterations: Option<usize>,
    #[pyo3(get)]
    trace: Vec<f64>,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = ForecastModel::from_json(text).map_err(to_py)?;
        Ok(Self { inner, final_fitness: None, iterations: None, trace: Vec::new() })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn trainer(&self) -> &'static str {
        self.inner.trainer.key()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn flat_params(&self) -> Vec<f64> {
        self.inner.params.flatten()
    }

    /// Predicts the month after `window` (the last `window_len` values, kWh/t).
    fn predict_next(&self, window: Vec<f64>) -> PyResult<f64> {
        self.inner.predict_next(&window).map_err(to_py)
    }

    /// One-step-ahead evaluation on `test`, with `history` ending the month
    /// before. Returns the metrics report as a dict.
    fn evaluate<'py>(&self, py: Python<'py>, test: &PySeries, history: &PySeries) -> PyResult<Bound<'py, PyAny>> {
        let report = experiments::evaluate(&self.inner, &test.inner, &history.inner).map_err(to_py)?;
        json_to_py(py, &report.to_json())
    }

    /// Recursive forecast of `horizon` months after `history`, as
    /// `(month, predicted, clamped)` tuples.
    fn predict_horizon(&self, history: &PySeries, horizon: usize) -> PyResult<Vec<(String, f64, f64)>> {
        let points = experiments::predict_horizon(&self.inner, &history.inner, horizon).map_err(to_py)?;
        Ok(points.into_iter().map(|p| (p.month.to_string(), p.predicted, p.clamped)).collect())
    }
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// Trains `algorithm` ("bp", "pso-bp" or "mpso-bp") on `train`. `config` is
/// optional `key=value` text overriding the defaults.
#[pyfunction]
#[pyo3(signature = (algorithm, train, seed = 0, config = None))]
fn train(py: Python<'_>, algorithm: &str, train: &PySeries, seed: u64, config: Option<&str>) -> PyResult<PyModel> {
    let trainer: Trainer = algorithm.parse().map_err(to_py)?;
    let mut cfg = RunConfig::default();
    if let Some(text) = config {
        cfg.apply_text(text).map_err(to_py)?;
    }
    cfg.validate().map_err(to_py)?;
    let exp = cfg.experiment;
    let series = train.inner.clone();
    let run = py
        .detach(|| {
            let dataset = exp.training_set(&series)?;
            experiments::train(trainer, &dataset, exp.topology()?, &exp.hybrid, seed)
        })
        .map_err(to_py)?;
    let trace = run.trace().to_vec();
    let t = run.trained;
    Ok(PyModel { inner: t.model, final_fitness: Some(t.final_fitness), iterations: Some(t.iterations_used), trace })
}

/// Trains BP, PSO-BP and MPSO-BP for each seed; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (train, test, seeds, config = None))]
fn compare<'py>(py: Python<'py>, train: &PySeries, test: &PySeries, seeds: Vec<u64>, config: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = RunConfig::default();
    if let Some(text) = config {
        cfg.apply_text(text).map_err(to_py)?;
    }
    cfg.validate().map_err(to_py)?;
    let (a, b) = (train.inner.clone(), test.inner.clone());
    let report = py.detach(|| experiments::compare_models(&a, &b, &cfg.experiment, &seeds)).map_err(to_py)?;
    json_to_py(py, &report.to_json())
}

#[pymodule]
fn swarm_forecast(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySeries>()?;
    m.add_class::<PyNormalization>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(parse_series_csv, m)?)?;
    m.add_function(wrap_pyfunction!(sample_series, m)?)?;
    m.add_function(wrap_pyfunction!(inertia_weight, m)?)?;
    m.add_function(wrap_pyfunction!(speed_coefficient, m)?)?;
    m.add_function(wrap_pyfunction!(relative_error, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy_percent, m)?)?;
    m.add_function(wrap_pyfunction!(minimize, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    Ok(())
}
