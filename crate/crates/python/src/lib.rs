//! Python bindings: decomposition, features, transforms, instance space,
//! forecasting and metrics over plain lists of floats.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyString;
use tsprobe_core::features::Degenerate;
use tsprobe_core::forecasting::ForecastModel;
use tsprobe_core::transforms::parse_pipeline;
use tsprobe_core::{
    self as core, feature_report, DenseNetConfig, DenseNetModel, FitOptions, Metric, ModelCheckpoint, StlConfig,
    SynthConfig, TimeSeries,
};

fn err(e: core::Error) -> PyErr {
    if e.is_io() {
        PyOSError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

/// A JSON string, or any object `json.dumps` accepts.
fn json_arg(obj: &Bound<'_, PyAny>) -> PyResult<serde_json::Value> {
    let text: String = if obj.is_instance_of::<PyString>() {
        obj.extract()?
    } else {
        obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?
    };
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn series(values: Vec<f64>, seasonal_period: usize) -> PyResult<TimeSeries> {
    TimeSeries::from_values("series", values, seasonal_period).map_err(err)
}

/// Trend, seasonal and remainder components of one series.
#[pyclass(module = "tsprobe", name = "Decomposition")]
struct PyDecomposition {
    inner: core::Decomposition,
}

#[pymethods]
impl PyDecomposition {
    #[new]
    fn new(trend: Vec<f64>, seasonal: Vec<f64>, remainder: Vec<f64>, seasonal_period: usize) -> PyResult<Self> {
        let inner = core::Decomposition::new(trend, seasonal, remainder, seasonal_period).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn trend(&self) -> Vec<f64> {
        self.inner.trend.clone()
    }

    #[getter]
    fn seasonal(&self) -> Vec<f64> {
        self.inner.seasonal.clone()
    }

    #[getter]
    fn remainder(&self) -> Vec<f64> {
        self.inner.remainder.clone()
    }

    #[getter]
    fn seasonal_period(&self) -> usize {
        self.inner.seasonal_period
    }

    fn reconstruct(&self) -> Vec<f64> {
        self.inner.reconstruct()
    }

    fn features(&self) -> PyFeatures {
        let report = feature_report(&self.inner);
        PyFeatures::from(report.features, report.degenerate)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// F1 trend strength, F2 seasonal strength, F3 trend linearity, F4 trend slope.
#[pyclass(module = "tsprobe", name = "Features", frozen)]
struct PyFeatures {
    #[pyo3(get)]
    f1: f64,
    #[pyo3(get)]
    f2: f64,
    #[pyo3(get)]
    f3: f64,
    #[pyo3(get)]
    f4: f64,
    /// Names of the strengths whose denominator was flat and were set to 0.
    #[pyo3(get)]
    degenerate: Vec<String>,
}

impl PyFeatures {
    fn from(fv: core::FeatureVector, deg: Degenerate) -> Self {
        let [f1, f2, f3, f4] = fv.to_array();
        let degenerate = [
            (deg.trend_strength, "trend_strength"),
            (deg.seasonal_strength, "seasonal_strength"),
            (deg.trend_linearity, "trend_linearity"),
        ]
        .into_iter()
        .filter(|(flag, _)| *flag)
        .map(|(_, name)| name.to_string())
        .collect();
        Self {
            f1,
            f2,
            f3,
            f4,
            degenerate,
        }
    }
}

#[pymethods]
impl PyFeatures {
    fn as_list(&self) -> [f64; 4] {
        [self.f1, self.f2, self.f3, self.f4]
    }

    fn __repr__(&self) -> String {
        format!("Features(F1={}, F2={}, F3={}, F4={})", self.f1, self.f2, self.f3, self.f4)
    }
}

#[pyfunction]
fn decompose(values: Vec<f64>, seasonal_period: usize) -> PyResult<PyDecomposition> {
    let inner = core::stl_decompose(&series(values, seasonal_period)?, &StlConfig::default()).map_err(err)?;
    Ok(PyDecomposition { inner })
}

#[pyfunction]
fn features(values: Vec<f64>, seasonal_period: usize) -> PyResult<PyFeatures> {
    Ok(decompose(values, seasonal_period)?.features())
}

/// `(beta0, beta1)` of the least-squares line over indices 1..n.
#[pyfunction]
fn fit_trend_line(trend: Vec<f64>) -> PyResult<(f64, f64)> {
    let fit = core::fit_trend_line(&trend).map_err(err)?;
    Ok((fit.beta0, fit.beta1))
}

/// Transformed values and warnings for a pipeline of steps.
#[pyfunction]
fn apply_pipeline(values: Vec<f64>, seasonal_period: usize, pipeline: &Bound<'_, PyAny>) -> PyResult<(Vec<f64>, Vec<String>)> {
    let steps = parse_pipeline(json_arg(pipeline)?).map_err(err)?;
    let out = core::apply_pipeline(&series(values, seasonal_period)?, &steps, &StlConfig::default()).map_err(err)?;
    Ok((out.transformed_values, out.warnings))
}

/// `(aggregate, per_horizon)` MASE.
#[pyfunction]
fn mase(actual: Vec<f64>, forecast: Vec<f64>, insample: Vec<f64>, seasonal_period: usize) -> PyResult<(f64, Vec<f64>)> {
    let e = core::mase(&actual, &forecast, &insample, seasonal_period).map_err(err)?;
    Ok((e.aggregate, e.per_horizon))
}

/// Like [`mase`] for any of `mase`, `mae`, `smape`.
#[pyfunction]
fn score(metric: &str, actual: Vec<f64>, forecast: Vec<f64>, insample: Vec<f64>, seasonal_period: usize) -> PyResult<(f64, Vec<f64>)> {
    let metric: Metric = metric.parse().map_err(err)?;
    let e = metric.score(&actual, &forecast, &insample, seasonal_period).map_err(err)?;
    Ok((e.aggregate, e.per_horizon))
}

#[pyfunction]
fn seasonal_naive(context: Vec<f64>, seasonal_period: usize, horizon: usize) -> PyResult<Vec<f64>> {
    core::seasonal_naive(&context, seasonal_period, horizon).map_err(err)
}

#[pyclass(module = "tsprobe", name = "Dataset")]
struct PyDataset {
    inner: core::Dataset,
}

fn listed(series: &[TimeSeries]) -> Vec<(String, Vec<f64>)> {
    series.iter().map(|s| (s.id().to_string(), s.values().to_vec())).collect()
}

#[pymethods]
impl PyDataset {
    #[staticmethod]
    #[pyo3(signature = (path, horizon=24, context_length=168, seasonal_period=24))]
    fn load(path: std::path::PathBuf, horizon: usize, context_length: usize, seasonal_period: usize) -> PyResult<Self> {
        let inner = core::load_jsonl(path, horizon, context_length, seasonal_period).map_err(err)?;
        Ok(Self { inner })
    }

    fn save(&self, path: std::path::PathBuf) -> PyResult<()> {
        core::write_jsonl(&self.inner, path).map_err(err)
    }

    /// `[(id, values)]` of the training split.
    #[getter]
    fn train(&self) -> Vec<(String, Vec<f64>)> {
        listed(self.inner.train())
    }

    #[getter]
    fn test(&self) -> Vec<(String, Vec<f64>)> {
        listed(self.inner.test())
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.inner.forecast_horizon()
    }

    #[getter]
    fn context_length(&self) -> usize {
        self.inner.context_length()
    }

    fn __len__(&self) -> usize {
        self.inner.train().len() + self.inner.test().len()
    }
}

/// Synthetic trend + sine + noise dataset; the last `jump_test` test series get a level jump.
#[pyfunction]
#[pyo3(signature = (n, length, seasonal_period, seed, n_test=None, test_length=None, jump_test=0, horizon=None, context_length=None))]
#[allow(clippy::too_many_arguments)]
fn synthesize(
    n: usize,
    length: usize,
    seasonal_period: usize,
    seed: u64,
    n_test: Option<usize>,
    test_length: Option<usize>,
    jump_test: usize,
    horizon: Option<usize>,
    context_length: Option<usize>,
) -> PyResult<PyDataset> {
    let mut cfg = SynthConfig::new(n, length, seasonal_period, seed);
    cfg.n_test = n_test.unwrap_or(n);
    cfg.test_length = test_length.unwrap_or(length);
    cfg.jump_test = jump_test;
    cfg.horizon = horizon.unwrap_or(cfg.horizon);
    cfg.context_length = context_length.unwrap_or(cfg.context_length);
    let inner = core::synthesize(&cfg).map_err(err)?;
    Ok(PyDataset { inner })
}

#[pyclass(module = "tsprobe", name = "InstanceSpace")]
struct PyInstanceSpace {
    inner: core::InstanceSpace,
}

#[pymethods]
impl PyInstanceSpace {
    /// Fit on the features of every series in a dataset.
    #[staticmethod]
    #[pyo3(signature = (dataset, train_only=false, max_points=None, seed=0))]
    fn fit(dataset: &PyDataset, train_only: bool, max_points: Option<usize>, seed: u64) -> PyResult<Self> {
        let rows = core::augmentation::dataset_features(&dataset.inner, &StlConfig::default()).map_err(err)?;
        Self::fit_rows(rows, train_only, max_points, seed)
    }

    /// Fit on `[(id, "train" | "test", [F1, F2, F3, F4])]`.
    #[staticmethod]
    #[pyo3(signature = (rows, train_only=false, max_points=None, seed=0))]
    fn fit_features(rows: Vec<(String, String, [f64; 4])>, train_only: bool, max_points: Option<usize>, seed: u64) -> PyResult<Self> {
        let rows = rows
            .into_iter()
            .map(|(id, split, f)| Ok((id, split.parse().map_err(err)?, core::FeatureVector::from_array(f))))
            .collect::<PyResult<Vec<_>>>()?;
        Self::fit_rows(rows, train_only, max_points, seed)
    }

    fn project(&self, features: [f64; 4]) -> (f64, f64) {
        self.inner.project(&core::FeatureVector::from_array(features))
    }

    #[getter]
    fn means(&self) -> [f64; 4] {
        self.inner.means
    }

    #[getter]
    fn stds(&self) -> [f64; 4] {
        self.inner.stds
    }

    #[getter]
    fn basis(&self) -> [[f64; 4]; 2] {
        self.inner.basis
    }

    #[getter]
    fn explained_variance(&self) -> [f64; 2] {
        self.inner.explained_variance
    }

    #[getter]
    fn eigenvalues(&self) -> [f64; 4] {
        self.inner.eigenvalues
    }

    /// `[(id, split, c0, c1)]`.
    #[getter]
    fn points(&self) -> Vec<(String, String, f64, f64)> {
        self.inner
            .points
            .iter()
            .map(|p| (p.id.clone(), p.split.to_string(), p.component0, p.component1))
            .collect()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner })
    }
}

impl PyInstanceSpace {
    fn fit_rows(
        rows: Vec<(String, core::Split, core::FeatureVector)>,
        train_only: bool,
        max_points: Option<usize>,
        seed: u64,
    ) -> PyResult<Self> {
        let mut opts = FitOptions {
            train_only,
            seed,
            ..FitOptions::default()
        };
        if max_points.is_some() {
            opts.max_points = max_points;
        }
        let inner = core::fit_pca(&rows, &opts).map_err(err)?;
        Ok(Self { inner })
    }
}

#[pyclass(module = "tsprobe", name = "DenseNet")]
struct PyDenseNet {
    inner: DenseNetModel,
}

#[pymethods]
impl PyDenseNet {
    /// Train on the dataset's training split; `config` is JSON or a dict of
    /// network settings whose `input`/`output` must match the dataset.
    #[staticmethod]
    #[pyo3(signature = (dataset, config=None))]
    fn train(py: Python<'_>, dataset: &PyDataset, config: Option<&Bound<'_, PyAny>>) -> PyResult<Self> {
        let cfg: DenseNetConfig = match config {
            Some(c) => serde_json::from_value(json_arg(c)?).map_err(|e| PyValueError::new_err(e.to_string()))?,
            None => DenseNetConfig {
                input: dataset.inner.context_length(),
                output: dataset.inner.forecast_horizon(),
                ..DenseNetConfig::default()
            },
        };
        let ds = &dataset.inner;
        let inner = py.detach(|| core::train_dense(ds, &cfg)).map_err(err)?;
        Ok(Self { inner })
    }

    fn forecast(&self, context: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.forecast(&context).map_err(err)
    }

    #[getter]
    fn context_length(&self) -> usize {
        self.inner.context_length()
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.inner.horizon()
    }

    /// `[(epoch, train_loss, validation_loss)]`.
    #[getter]
    fn history(&self) -> Vec<(usize, f64, f64)> {
        self.inner
            .report
            .history
            .iter()
            .map(|e| (e.epoch, e.train_loss, e.validation_loss))
            .collect()
    }

    fn save(&self, path: std::path::PathBuf) -> PyResult<()> {
        ModelCheckpoint::from(&self.inner).save(path).map_err(err)
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        let inner = ModelCheckpoint::load(path).and_then(|c| c.into_dense()).map_err(err)?;
        Ok(Self { inner })
    }
}

#[pymodule]
fn tsprobe(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDecomposition>()?;
    m.add_class::<PyFeatures>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyInstanceSpace>()?;
    m.add_class::<PyDenseNet>()?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(features, m)?)?;
    m.add_function(wrap_pyfunction!(fit_trend_line, m)?)?;
    m.add_function(wrap_pyfunction!(apply_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(mase, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(seasonal_naive, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    Ok(())
}
