use std::sync::Arc;

use latlip_core::basisframe::{self, BasisFrame, CenterMode, FrameSource, LatticeVector};
use latlip_core::config::RunConfig;
use latlip_core::diagonal;
use latlip_core::eigensearch::{run_search, EigenCloud, SearchConfig, VarianceMode};
use latlip_core::extension::ExtensionModel;
use latlip_core::metrics;
use latlip_core::operator::{self, DomainBox, OperatorHandle};
use latlip_core::pipeline;
use latlip_core::Error;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

fn to_py(e: Error) -> PyErr {
    if e.is_numerical() {
        PyArithmeticError::new_err(e.to_string())
    } else if matches!(e, Error::Io(_)) {
        PyOSError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

trait OrPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> OrPy<T> for latlip_core::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn domain_from(
    lower: Option<Vec<f64>>,
    upper: Option<Vec<f64>>,
    fallback: &DomainBox,
) -> PyResult<DomainBox> {
    match (lower, upper) {
        (None, None) => Ok(fallback.clone()),
        (Some(lo), Some(hi)) => DomainBox::new(lo, hi).py_err(),
        _ => Err(PyValueError::new_err(
            "lower and upper must be given together",
        )),
    }
}

fn center_from(center: &str) -> PyResult<CenterMode> {
    match center {
        "mean" => Ok(CenterMode::Mean),
        "origin" => Ok(CenterMode::Origin),
        other => Err(PyValueError::new_err(format!(
            "center must be 'mean' or 'origin', got {other:?}"
        ))),
    }
}

/// A map from ℝⁿ to ℝⁿ with a default sampling box.
#[pyclass(name = "Operator", module = "latlip", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyOperator {
    inner: OperatorHandle,
}

#[pymethods]
impl PyOperator {
    /// Catalog operator by key: "S", "G", "R" (param r), "f5", "identity" (param n).
    #[staticmethod]
    #[pyo3(signature = (key, **params))]
    fn catalog(key: &str, params: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut map = std::collections::BTreeMap::new();
        if let Some(params) = params {
            for (k, v) in params.iter() {
                map.insert(k.extract::<String>()?, v.extract::<f64>()?);
            }
        }
        Ok(Self {
            inner: operator::from_key(key, &map).py_err()?,
        })
    }

    /// Wraps a Python callable taking and returning a sequence of `dim` floats.
    #[staticmethod]
    #[pyo3(signature = (name, dim, func, lower=None, upper=None))]
    fn from_callable(
        name: String,
        dim: usize,
        func: Py<PyAny>,
        lower: Option<Vec<f64>>,
        upper: Option<Vec<f64>>,
    ) -> PyResult<Self> {
        let func = Arc::new(func);
        let domain = domain_from(lower, upper, &DomainBox::symmetric(dim, 5.0))?;
        let op = OperatorHandle::new(name, dim, move |x: &[f64]| {
            Python::attach(|py| {
                func.call1(py, (x.to_vec(),))
                    .and_then(|v| v.extract::<Vec<f64>>(py))
                    .unwrap_or_else(|e| {
                        e.print(py);
                        vec![f64::NAN; x.len()]
                    })
            })
        })
        .with_domain(domain);
        Ok(Self { inner: op })
    }

    #[getter]
    fn name(&self) -> &str {
        self.inner.name()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// `(lower, upper)` corners of the default box.
    #[getter]
    fn domain(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.inner.domain();
        (d.lower.clone(), d.upper.clone())
    }

    fn __call__(&self, py: Python<'_>, x: Vec<f64>) -> PyResult<Vec<f64>> {
        py.detach(|| self.inner.try_eval(&x)).py_err()
    }

    fn __repr__(&self) -> String {
        format!(
            "Operator({:?}, dim={})",
            self.inner.name(),
            self.inner.dim()
        )
    }
}

/// `λ(x) = ⟨T(x), x⟩ / ‖x‖²`.
#[pyfunction]
fn diagonal_value(py: Python<'_>, op: &PyOperator, x: Vec<f64>) -> PyResult<f64> {
    py.detach(|| diagonal::diagonal_value(&op.inner, &x))
        .py_err()
}

/// `ε(x) = ‖T(x) − λ(x)x‖ / ‖x‖`.
#[pyfunction]
fn diagonal_error(py: Python<'_>, op: &PyOperator, x: Vec<f64>) -> PyResult<f64> {
    py.detach(|| diagonal::diagonal_error(&op.inner, &x))
        .py_err()
}

/// Result of an eigenvector search.
#[pyclass(name = "Cloud", module = "latlip", frozen, skip_from_py_object)]
struct PyCloud {
    inner: EigenCloud,
}

#[pymethods]
impl PyCloud {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn points(&self) -> Vec<Vec<f64>> {
        self.inner.points()
    }

    #[getter]
    fn lambdas(&self) -> Vec<f64> {
        self.inner.samples.iter().map(|s| s.lambda).collect()
    }

    #[getter]
    fn errors(&self) -> Vec<f64> {
        self.inner.samples.iter().map(|s| s.error).collect()
    }

    #[getter]
    fn mean_error(&self) -> f64 {
        self.inner.mean_error()
    }

    /// Mean ε after selection and after each refinement step.
    #[getter]
    fn history(&self) -> Vec<f64> {
        self.inner.history.iter().map(|h| h.mean_error).collect()
    }

    /// Per-survivor ε, one list per recorded step.
    #[getter]
    fn trace(&self) -> Vec<Vec<f64>> {
        self.inner
            .history
            .iter()
            .map(|h| h.errors.clone())
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Cloud(len={}, mean_error={:.6})",
            self.inner.len(),
            self.inner.mean_error()
        )
    }
}

/// Monte Carlo eigenvector search. Returns `(seeded, refined)` clouds.
#[pyfunction]
#[pyo3(signature = (
    op, *, n_initial=250, n_select=50, n_proposals=10, tau=5.0, steps=5, seed=1,
    variance_mode="code", lower=None, upper=None
))]
#[allow(clippy::too_many_arguments)]
fn eigensearch(
    py: Python<'_>,
    op: &PyOperator,
    n_initial: usize,
    n_select: usize,
    n_proposals: usize,
    tau: f64,
    steps: usize,
    seed: u64,
    variance_mode: &str,
    lower: Option<Vec<f64>>,
    upper: Option<Vec<f64>>,
) -> PyResult<(PyCloud, PyCloud)> {
    let variance_mode = match variance_mode {
        "code" => VarianceMode::Code,
        "density" => VarianceMode::Density,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown variance_mode {other:?}"
            )))
        }
    };
    let cfg = SearchConfig {
        n_initial,
        n_select,
        n_proposals,
        tau,
        steps,
        rng_seed: seed,
        variance_mode,
        ..SearchConfig::new(domain_from(lower, upper, op.inner.domain())?)
    };
    let (seeded, cloud) = py.detach(|| run_search(&op.inner, &cfg)).py_err()?;
    Ok((PyCloud { inner: seeded }, PyCloud { inner: cloud }))
}

/// A lattice basis; columns are the basis vectors.
#[pyclass(name = "Frame", module = "latlip", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyFrame {
    inner: BasisFrame,
}

#[pymethods]
impl PyFrame {
    #[new]
    fn new(vectors: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self {
            inner: BasisFrame::new(vectors, FrameSource::User).py_err()?,
        })
    }

    #[staticmethod]
    fn identity(n: usize) -> Self {
        Self {
            inner: BasisFrame::identity(n),
        }
    }

    /// Principal axes of `points`; also returns the variances along them.
    #[staticmethod]
    #[pyo3(signature = (points, center="mean"))]
    fn pca(points: Vec<Vec<f64>>, center: &str) -> PyResult<(Self, Vec<f64>)> {
        let (inner, vars) = basisframe::pca_points(&points, center_from(center)?).py_err()?;
        Ok((Self { inner }, vars))
    }

    /// Mean directions of angular clusters, or `None` when too few are found.
    #[staticmethod]
    #[pyo3(signature = (points, tol_angle=0.05))]
    fn direct(points: Vec<Vec<f64>>, tol_angle: f64) -> Option<Self> {
        basisframe::direct_points(&points, tol_angle).map(|inner| Self { inner })
    }

    /// Sign combinations `σ_k` of this frame's vectors.
    fn octant(&self, sigmas: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self {
            inner: basisframe::octant_basis(&self.inner, &sigmas).py_err()?,
        })
    }

    #[getter]
    fn vectors(&self) -> Vec<Vec<f64>> {
        self.inner.vectors().to_vec()
    }

    #[getter]
    fn source(&self) -> String {
        format!("{:?}", self.inner.source()).to_lowercase()
    }

    #[getter]
    fn determinant(&self) -> f64 {
        self.inner.determinant()
    }

    fn to_coords(&self, p: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.to_coords(&p).py_err()?.into_inner())
    }

    #[allow(clippy::wrong_self_convention)]
    fn from_coords(&self, c: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.from_coords(&LatticeVector(c)).py_err()
    }

    fn __repr__(&self) -> String {
        format!("Frame({:?})", self.inner.vectors())
    }
}

/// α-weakened McShane/Whitney extension fitted to samples.
#[pyclass(name = "Model", module = "latlip", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyModel {
    inner: ExtensionModel,
}

#[pymethods]
impl PyModel {
    /// Samples `op` at `points` and estimates `K`.
    #[staticmethod]
    #[pyo3(signature = (frame, op, points, alpha=0.1))]
    fn fit(
        py: Python<'_>,
        frame: &PyFrame,
        op: &PyOperator,
        points: Vec<Vec<f64>>,
        alpha: f64,
    ) -> PyResult<Self> {
        let inner = py
            .detach(|| ExtensionModel::fit_operator(frame.inner.clone(), &op.inner, &points, alpha))
            .py_err()?;
        Ok(Self { inner })
    }

    /// Ambient samples with values; `k=None` estimates the constants.
    #[staticmethod]
    #[pyo3(signature = (frame, points, values, alpha=0.1, k=None))]
    fn from_samples(
        frame: &PyFrame,
        points: Vec<Vec<f64>>,
        values: Vec<Vec<f64>>,
        alpha: f64,
        k: Option<Vec<f64>>,
    ) -> PyResult<Self> {
        let inner = match k {
            Some(k) => {
                ExtensionModel::with_constants(frame.inner.clone(), &points, &values, k, alpha)
            }
            None => ExtensionModel::fit(frame.inner.clone(), &points, &values, alpha),
        }
        .py_err()?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn k(&self) -> Vec<f64> {
        self.inner.k().to_vec()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    #[getter]
    fn frame(&self) -> PyFrame {
        PyFrame {
            inner: self.inner.frame().clone(),
        }
    }

    #[getter]
    fn num_samples(&self) -> usize {
        self.inner.samples().len()
    }

    fn is_certified(&self) -> bool {
        self.inner.is_certified()
    }

    /// McShane, Whitney, interpolant and bound at frame coordinates `x`.
    fn evaluate<'py>(&self, py: Python<'py>, x: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        let e = self.inner.evaluate(&LatticeVector(x)).py_err()?;
        let d = PyDict::new(py);
        d.set_item("mcshane", e.mcshane.into_inner())?;
        d.set_item("whitney", e.whitney.into_inner())?;
        d.set_item("interpolant", e.interpolant.into_inner())?;
        d.set_item("bound", e.bound.into_inner())?;
        Ok(d)
    }

    /// Interpolated value at an ambient point.
    fn __call__(&self, p: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.evaluate_ambient(&p).py_err()
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(K={:?}, alpha={}, samples={})",
            self.inner.k(),
            self.inner.alpha(),
            self.inner.samples().len()
        )
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_u64() {
            Some(u) => u.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn serialized<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

/// Monte Carlo L2 error of the model's interpolant over a box.
#[pyfunction]
#[pyo3(signature = (op, model, *, mc_points=10_000, seed=1, lower=None, upper=None))]
fn mc_l2_error<'py>(
    py: Python<'py>,
    op: &PyOperator,
    model: &PyModel,
    mc_points: usize,
    seed: u64,
    lower: Option<Vec<f64>>,
    upper: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let domain = domain_from(lower, upper, op.inner.domain())?;
    let report = py
        .detach(|| metrics::mc_l2_error(&op.inner, &model.inner, &domain, mc_points, seed))
        .py_err()?;
    serialized(py, &report)
}

/// Counts grid points where the interpolant leaves its error bound.
#[pyfunction]
#[pyo3(signature = (op, model, *, per_axis=101, lower=None, upper=None))]
fn bound_audit<'py>(
    py: Python<'py>,
    op: &PyOperator,
    model: &PyModel,
    per_axis: usize,
    lower: Option<Vec<f64>>,
    upper: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let domain = domain_from(lower, upper, op.inner.domain())?;
    let report = py
        .detach(|| metrics::bound_audit(&op.inner, &model.inner, &domain, per_axis))
        .py_err()?;
    serialized(py, &report)
}

/// Full pipeline from a TOML run configuration; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (config="", seed=None))]
fn benchmark<'py>(py: Python<'py>, config: &str, seed: Option<u64>) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = RunConfig::from_toml(config).py_err()?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let (_, report) = py.detach(|| pipeline::benchmark(&cfg)).py_err()?;
    serialized(py, &report)
}

#[pymodule]
fn latlip(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyOperator>()?;
    m.add_class::<PyCloud>()?;
    m.add_class::<PyFrame>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(diagonal_value, m)?)?;
    m.add_function(wrap_pyfunction!(diagonal_error, m)?)?;
    m.add_function(wrap_pyfunction!(eigensearch, m)?)?;
    m.add_function(wrap_pyfunction!(mc_l2_error, m)?)?;
    m.add_function(wrap_pyfunction!(bound_audit, m)?)?;
    m.add_function(wrap_pyfunction!(benchmark, m)?)?;
    Ok(())
}
