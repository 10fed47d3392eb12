//! Python bindings: metrics, quotients, embeddings and the randomized constructions.
//!
//! Construction results and certificates come back as plain dicts, built from the same
//! JSON documents the command line writes.

use metriq_core::constructions::{aspect, dichotomy, mcenter, star};
use metriq_core::embed::{bourgain, gauss, pstable, EmbedMode, VectorEmbedding};
use metriq_core::generators::{self, InstanceSpec};
use metriq_core::{cube, hst, lipschitz, metric, quotient};
use metriq_core::{FiniteMetric, MetricSpace, QuotientSpace, Seed};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyIndexError};
use pyo3::prelude::*;
use pyo3::types::PyString;
use serde::Serialize;

create_exception!(metriq, MetriqError, PyException, "Base class for every error raised by metriq.");
create_exception!(metriq, StructuralError, MetriqError, "Input has the wrong shape.");
create_exception!(metriq, ParameterError, MetriqError, "A parameter is out of range.");
create_exception!(metriq, NotMetricError, MetriqError, "A matrix fails a metric axiom.");
create_exception!(metriq, ConstructionError, MetriqError, "A construction could not produce a valid result.");
create_exception!(metriq, CertificateError, MetriqError, "A certificate misses its guaranteed bound.");

fn err(e: metriq_core::MetriqError) -> PyErr {
    use metriq_core::MetriqError as E;
    let msg = e.to_string();
    match e {
        E::Structural(_) => StructuralError::new_err(msg),
        E::Parameter(_) => ParameterError::new_err(msg),
        E::NotMetric(_) => NotMetricError::new_err(msg),
        E::ProbabilisticFailure { .. } | E::Construction(_) | E::InsufficientBand(_) => ConstructionError::new_err(msg),
        E::Certificate(_) => CertificateError::new_err(msg),
        E::Serde(_) | E::Io(_) => MetriqError::new_err(msg),
    }
}

fn json_err(e: serde_json::Error) -> PyErr {
    StructuralError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(v).map_err(json_err)?;
    py.import("json")?.call_method1("loads", (s,))
}

/// Accepts a JSON string or any object `json.dumps` understands.
fn from_py(py: Python<'_>, v: &Bound<'_, PyAny>) -> PyResult<serde_json::Value> {
    let text: String = if v.is_instance_of::<PyString>() { v.extract()? } else { py.import("json")?.call_method1("dumps", (v,))?.extract()? };
    serde_json::from_str(&text).map_err(json_err)
}

fn check_pair(n: usize, i: usize, j: usize) -> PyResult<()> {
    if i >= n || j >= n {
        return Err(PyIndexError::new_err(format!("point index out of range for {n} points")));
    }
    Ok(())
}

/// A finite metric space stored as a dense distance matrix.
#[pyclass(module = "metriq", name = "Metric", frozen)]
struct Metric(MetricSpace);

#[pymethods]
impl Metric {
    /// Builds a metric from a square matrix and checks every axiom.
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        MetricSpace::checked(rows).map(Metric).map_err(err)
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        MetricSpace::from_json(s).map(Metric).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Metric(n={}, diameter={})", self.0.len(), self.0.diameter())
    }

    fn distance(&self, i: usize, j: usize) -> PyResult<f64> {
        check_pair(self.0.len(), i, j)?;
        Ok(self.0.dist(i, j))
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.0.rows()
    }

    fn diameter(&self) -> f64 {
        self.0.diameter()
    }

    fn aspect_ratio(&self) -> PyResult<f64> {
        metric::aspect_ratio(&self.0).map_err(err)
    }

    fn subspace(&self, points: Vec<usize>) -> PyResult<Self> {
        self.0.subspace(&points).map(Metric).map_err(err)
    }

    fn scaled(&self, c: f64) -> Self {
        Metric(self.0.scaled(c))
    }

    /// Lists every failed axiom; empty when the matrix is a metric.
    fn violations<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &metric::validate_metric(&self.0).violations)
    }

    fn is_ultrametric(&self) -> bool {
        hst::is_ultrametric(&self.0)
    }
}

/// A quotient of a metric by a partition of some or all of its points.
#[pyclass(module = "metriq", name = "Quotient", frozen)]
struct Quotient(QuotientSpace);

#[pymethods]
impl Quotient {
    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        QuotientSpace::from_json(s).map(Quotient).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Quotient(blocks={}, base={}, kind={:?})", self.0.len(), self.0.base.len(), self.0.provenance)
    }

    #[getter]
    fn blocks(&self) -> Vec<Vec<usize>> {
        self.0.blocks.clone()
    }

    /// `"Q"`, `"QS"` or `"SQ"`.
    #[getter]
    fn kind(&self) -> String {
        format!("{:?}", self.0.provenance)
    }

    #[getter]
    fn metric(&self) -> Metric {
        Metric(self.0.metric.clone())
    }

    #[getter]
    fn base(&self) -> Metric {
        Metric(self.0.base.clone())
    }

    fn distance(&self, i: usize, j: usize) -> PyResult<f64> {
        check_pair(self.0.len(), i, j)?;
        Ok(self.0.dist(i, j))
    }

    /// Keeps only the listed blocks.
    fn restrict(&self, keep: Vec<usize>) -> PyResult<Self> {
        quotient::sq_space(&self.0, &keep).map(Quotient).map_err(err)
    }
}

/// Points in a (weighted) `L_p` space.
#[pyclass(module = "metriq", name = "Embedding", frozen)]
struct Embedding(VectorEmbedding);

#[pymethods]
impl Embedding {
    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Embedding(n={}, dim={}, p={})", self.0.len(), self.0.dim(), self.0.p)
    }

    #[getter]
    fn p(&self) -> f64 {
        self.0.p
    }

    #[getter]
    fn vectors(&self) -> Vec<Vec<f64>> {
        self.0.vectors.clone()
    }

    fn distance(&self, i: usize, j: usize) -> PyResult<f64> {
        check_pair(self.0.len(), i, j)?;
        Ok(self.0.dist(i, j))
    }

    /// Distances between the embedded points.
    fn metric(&self) -> Metric {
        Metric(self.0.induced_metric())
    }
}

#[pyfunction]
fn quotient_metric(m: &Metric, blocks: Vec<Vec<usize>>) -> PyResult<Quotient> {
    quotient::quotient_metric(&m.0, blocks).map(Quotient).map_err(err)
}

/// Collapses `subset` to one point and keeps every other point as a singleton.
#[pyfunction]
fn quotient_by_subset(m: &Metric, subset: Vec<usize>) -> PyResult<Quotient> {
    quotient::quotient_by_subset(&m.0, &subset).map(Quotient).map_err(err)
}

/// Compares `target` against `source` under `map` (the identity when omitted).
#[pyfunction]
#[pyo3(signature = (source, target, map=None))]
fn distortion<'py>(py: Python<'py>, source: &Metric, target: &Metric, map: Option<Vec<usize>>) -> PyResult<Bound<'py, PyAny>> {
    let r = match map {
        Some(f) => quotient::distortion_between(&source.0, &target.0, &f),
        None => quotient::distortion_identity(&source.0, &target.0),
    };
    to_py(py, &r.map_err(err)?)
}

/// Realizes an instance description such as `{"variant": "random_metric", "n": 50}`.
#[pyfunction]
#[pyo3(signature = (spec, seed=0))]
fn generate(py: Python<'_>, spec: &Bound<'_, PyAny>, seed: u64) -> PyResult<Metric> {
    let spec: InstanceSpec = serde_json::from_value(from_py(py, spec)?).map_err(json_err)?;
    spec.realize(Seed::new(seed)).map(Metric).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (n, seed=0))]
fn random_metric(n: usize, seed: u64) -> Metric {
    Metric(generators::random_metric(n, Seed::new(seed)))
}

#[pyfunction]
#[pyo3(signature = (n, dim, seed=0))]
fn random_euclidean(n: usize, dim: usize, seed: u64) -> Metric {
    Metric(generators::random_euclidean(n, dim, Seed::new(seed)))
}

#[pyfunction]
fn hamming_cube(d: usize) -> PyResult<Metric> {
    cube::hamming_cube(d).map(Metric).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (m, eps, seed=0))]
fn m_center_quotient<'py>(py: Python<'py>, m: &Metric, eps: f64, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &mcenter::m_center_quotient(&m.0, eps, Seed::new(seed)).map_err(err)?)
}

#[pyfunction]
fn hst_from_m_centered<'py>(py: Python<'py>, m: &Metric, mparam: usize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &mcenter::hst_from_m_centered(&m.0, mparam).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (m, a, b, alpha, seed=0))]
fn star_quotient<'py>(py: Python<'py>, m: &Metric, a: f64, b: f64, alpha: f64, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &star::find_star_quotient(&m.0, a, b, alpha, Seed::new(seed)).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (m, alpha, lipschitz=false, weights=None, seed=0))]
fn aspect_quotient<'py>(py: Python<'py>, m: &Metric, alpha: f64, lipschitz: bool, weights: Option<Vec<f64>>, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &aspect::aspect_quotient(&m.0, alpha, lipschitz, weights.as_deref(), Seed::new(seed)).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (m, k, beta, alpha, drop_root=false, seed=0))]
fn dichotomy_quotient<'py>(py: Python<'py>, m: &Metric, k: f64, beta: f64, alpha: f64, drop_root: bool, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &dichotomy::q_dichotomy(&m.0, k, beta, alpha, drop_root, Seed::new(seed)).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (m, k, beta, alpha, seed=0))]
fn lacunary_quotient<'py>(py: Python<'py>, m: &Metric, k: f64, beta: f64, alpha: f64, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &dichotomy::lacunary_quotient(&m.0, k, beta, alpha, Seed::new(seed)).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (m, seed=0))]
fn q2_lacunary<'py>(py: Python<'py>, m: &Metric, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &dichotomy::q2_lacunary(&m.0, Seed::new(seed)).map_err(err)?)
}

/// `mode` is `"exact"` or `"monte_carlo"`; the default picks by size.
#[pyfunction]
#[pyo3(signature = (m, mparam, p=2.0, mode=None, seed=0))]
fn bourgain_embed<'py>(py: Python<'py>, m: &Metric, mparam: f64, p: f64, mode: Option<&str>, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let mode = match mode {
        None => None,
        Some(s) => Some(serde_json::from_value::<EmbedMode>(serde_json::Value::String(s.into())).map_err(json_err)?),
    };
    to_py(py, &bourgain::bourgain_embed(&m.0, mparam, p, mode, Seed::new(seed)).map_err(err)?)
}

#[pyfunction]
fn truncated_gauss_distance(d: f64, level: f64) -> f64 {
    gauss::truncated_gauss_distance(d, level)
}

#[pyfunction]
#[pyo3(signature = (points, level, features=1024, seed=0))]
fn truncated_gauss_embed(points: Vec<Vec<f64>>, level: f64, features: usize, seed: u64) -> PyResult<Embedding> {
    gauss::truncated_gauss_embed(&points, level, features, Seed::new(seed)).map(Embedding).map_err(err)
}

#[pyfunction]
fn pstable_distance(d: f64, level: f64, p: f64) -> PyResult<f64> {
    pstable::pstable_distance(d, level, p).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (points, level, p, features=1024, seed=0))]
fn pstable_embed(points: Vec<Vec<f64>>, level: f64, p: f64, features: usize, seed: u64) -> PyResult<Embedding> {
    pstable::pstable_embed(&points, level, p, features, Seed::new(seed)).map(Embedding).map_err(err)
}

#[pyfunction]
fn uptolog_distance(d: f64, level: f64, p: f64) -> PyResult<f64> {
    pstable::uptolog_distance(d, level, p).map_err(err)
}

#[pyfunction]
fn subdominant_ultrametric(m: &Metric) -> Metric {
    Metric(hst::subdominant_ultrametric(&m.0))
}

/// Isometric embedding of an ultrametric into Euclidean space.
#[pyfunction]
fn ultrametric_to_l2(m: &Metric) -> PyResult<Embedding> {
    let t = hst::ultrametric_to_hst(&m.0).map_err(err)?;
    hst::ultrametric_to_l2(&t).map(Embedding).map_err(err)
}

/// Builds the hypercube quotient. Unless `allow_shortfall` is set, raises when the block count
/// falls short of the guarantee.
#[pyfunction]
#[pyo3(signature = (d, eps, p=2.0, allow_shortfall=false))]
fn cube_qs<'py>(py: Python<'py>, d: usize, eps: f64, p: f64, allow_shortfall: bool) -> PyResult<Bound<'py, PyAny>> {
    let r = if allow_shortfall { cube::cube_qs_build(d, eps, p).map_err(err)? } else { cube::cube_qs_construct(d, eps, p).map_err(|e| err(e.into()))? };
    to_py(py, &r)
}

/// Certified lower bound on the `L_p` distortion of a quotient of the Hamming cube.
#[pyfunction]
#[pyo3(signature = (q, p=2.0))]
fn cube_lower_bound<'py>(py: Python<'py>, q: &Quotient, p: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &cube::cube_qs_certify_lower(&q.0, p).map_err(err)?)
}

fn quotient_map(source: &Metric, target: &Metric, assign: Vec<usize>) -> PyResult<lipschitz::QuotientMap> {
    lipschitz::QuotientMap::new(source.0.clone(), target.0.clone(), assign).map_err(err)
}

/// Lipschitz and co-Lipschitz constants of the onto map `assign`.
#[pyfunction]
fn lip_colip<'py>(py: Python<'py>, source: &Metric, target: &Metric, assign: Vec<usize>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &lipschitz::lip_colip(&quotient_map(source, target, assign)?).map_err(err)?)
}

#[pyfunction]
fn certify_lip_quotient<'py>(py: Python<'py>, source: &Metric, target: &Metric, assign: Vec<usize>, alpha: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &lipschitz::certify_lip_quotient(&quotient_map(source, target, assign)?, alpha).map_err(err)?)
}

#[pymodule]
fn metriq(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("MetriqError", py.get_type::<MetriqError>())?;
    m.add("StructuralError", py.get_type::<StructuralError>())?;
    m.add("ParameterError", py.get_type::<ParameterError>())?;
    m.add("NotMetricError", py.get_type::<NotMetricError>())?;
    m.add("ConstructionError", py.get_type::<ConstructionError>())?;
    m.add("CertificateError", py.get_type::<CertificateError>())?;
    m.add_class::<Metric>()?;
    m.add_class::<Quotient>()?;
    m.add_class::<Embedding>()?;
    m.add_function(wrap_pyfunction!(quotient_metric, m)?)?;
    m.add_function(wrap_pyfunction!(quotient_by_subset, m)?)?;
    m.add_function(wrap_pyfunction!(distortion, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(random_metric, m)?)?;
    m.add_function(wrap_pyfunction!(random_euclidean, m)?)?;
    m.add_function(wrap_pyfunction!(hamming_cube, m)?)?;
    m.add_function(wrap_pyfunction!(m_center_quotient, m)?)?;
    m.add_function(wrap_pyfunction!(hst_from_m_centered, m)?)?;
    m.add_function(wrap_pyfunction!(star_quotient, m)?)?;
    m.add_function(wrap_pyfunction!(aspect_quotient, m)?)?;
    m.add_function(wrap_pyfunction!(dichotomy_quotient, m)?)?;
    m.add_function(wrap_pyfunction!(lacunary_quotient, m)?)?;
    m.add_function(wrap_pyfunction!(q2_lacunary, m)?)?;
    m.add_function(wrap_pyfunction!(bourgain_embed, m)?)?;
    m.add_function(wrap_pyfunction!(truncated_gauss_distance, m)?)?;
    m.add_function(wrap_pyfunction!(truncated_gauss_embed, m)?)?;
    m.add_function(wrap_pyfunction!(pstable_distance, m)?)?;
    m.add_function(wrap_pyfunction!(pstable_embed, m)?)?;
    m.add_function(wrap_pyfunction!(uptolog_distance, m)?)?;
    m.add_function(wrap_pyfunction!(subdominant_ultrametric, m)?)?;
    m.add_function(wrap_pyfunction!(ultrametric_to_l2, m)?)?;
    m.add_function(wrap_pyfunction!(cube_qs, m)?)?;
    m.add_function(wrap_pyfunction!(cube_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(lip_colip, m)?)?;
    m.add_function(wrap_pyfunction!(certify_lip_quotient, m)?)?;
    Ok(())
}
