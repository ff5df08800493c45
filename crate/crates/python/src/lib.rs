//! Python bindings: the `fielddev_py` extension module.
//!
//! Fields, regions and innovation laws are built through static
//! constructors or from the same JSON used by the command-line configs.
//! Structured results come back as plain dicts and lists.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

use fielddev::apps::{self, DavisGutSpec, DgWeight, LilMode};
use fielddev::cli::{self, ExperimentConfig};
use fielddev::mc::{enumerate_tail, simulate_tail, SimOptions};
use fielddev::theory::{self, DEFAULT_CT_MARGIN};

create_exception!(fielddev_py, FieldDevError, PyException);

fn err(e: fielddev::Error) -> PyErr {
    FieldDevError::new_err(e.to_string())
}

fn json_err(e: serde_json::Error) -> PyErr {
    FieldDevError::new_err(e.to_string())
}

fn to_py(py: Python<'_>, v: &Value) -> PyResult<PyObject> {
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any().unbind(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any().unbind(),
            (None, Some(u)) => u.into_pyobject(py)?.into_any().unbind(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any().unbind(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any().unbind(),
        Value::Array(a) => {
            let items = a.iter().map(|x| to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_any().unbind()
        }
        Value::Object(o) => {
            let d = PyDict::new(py);
            for (k, x) in o {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_any().unbind()
        }
    })
}

fn serde_py<T: serde::Serialize>(py: Python<'_>, v: &T) -> PyResult<PyObject> {
    to_py(py, &serde_json::to_value(v).map_err(json_err)?)
}

/// Coefficient family `a_{r,s}`.
#[pyclass(name = "CoefficientField", module = "fielddev_py", frozen)]
#[derive(Clone)]
struct PyField(fielddev::CoefficientField);

#[pymethods]
impl PyField {
    #[staticmethod]
    fn delta() -> Self {
        PyField(fielddev::CoefficientField::delta())
    }

    /// `coefficients` is a list of `(r, s, a)` triples.
    #[staticmethod]
    fn finite_support(coefficients: Vec<(i64, i64, f64)>) -> PyResult<Self> {
        fielddev::CoefficientField::finite_support(coefficients).map(PyField).map_err(err)
    }

    #[staticmethod]
    fn exponential(amplitude: f64, rate: f64) -> PyResult<Self> {
        fielddev::CoefficientField::exponential(amplitude, rate).map(PyField).map_err(err)
    }

    #[staticmethod]
    fn power_law(amplitude: f64, beta: f64) -> PyResult<Self> {
        fielddev::CoefficientField::power_law(amplitude, beta).map(PyField).map_err(err)
    }

    /// Isotropic `(|r|+|s|)^-beta` field with constant slowly varying part.
    /// `a00` defaults to the lattice-balanced origin value.
    #[staticmethod]
    #[pyo3(signature = (beta, a00=None))]
    fn long_range(beta: f64, a00: Option<f64>) -> PyResult<Self> {
        let a00 = a00.unwrap_or_else(|| fielddev::CoefficientField::lattice_balanced_a00(beta));
        fielddev::CoefficientField::long_range(beta, Default::default(), fielddev::AngularProfile::Constant, a00)
            .map(PyField)
            .map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let f: fielddev::CoefficientField = serde_json::from_str(text).map_err(json_err)?;
        f.validate().map_err(err)?;
        Ok(PyField(f))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(json_err)
    }

    fn value(&self, r: i64, s: i64) -> f64 {
        self.0.value(r, s)
    }

    fn __repr__(&self) -> String {
        format!("CoefficientField({})", serde_json::to_string(&self.0).unwrap_or_default())
    }
}

/// Finite union of lattice rectangles.
#[pyclass(name = "IndexRegion", module = "fielddev_py", frozen)]
#[derive(Clone)]
struct PyRegion(fielddev::IndexRegion);

#[pymethods]
impl PyRegion {
    #[staticmethod]
    fn square(n: i64) -> PyResult<Self> {
        fielddev::IndexRegion::square(n).map(PyRegion).map_err(err)
    }

    #[staticmethod]
    fn centered(n: i64) -> PyResult<Self> {
        fielddev::IndexRegion::centered(n).map(PyRegion).map_err(err)
    }

    #[staticmethod]
    fn rectangle(j1: i64, j2: i64, k1: i64, k2: i64) -> PyResult<Self> {
        fielddev::IndexRegion::rectangle(j1, j2, k1, k2).map(PyRegion).map_err(err)
    }

    #[getter]
    fn cardinality(&self) -> u64 {
        self.0.cardinality()
    }

    #[getter]
    fn label(&self) -> String {
        self.0.label()
    }

    fn __repr__(&self) -> String {
        format!("IndexRegion({})", self.0.label())
    }
}

/// Standardized innovation law.
#[pyclass(name = "InnovationModel", module = "fielddev_py", frozen)]
#[derive(Clone)]
struct PyModel(fielddev::InnovationModel);

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn gaussian() -> Self {
        PyModel(fielddev::InnovationModel::gaussian())
    }

    #[staticmethod]
    fn rademacher() -> Self {
        PyModel(fielddev::InnovationModel::rademacher())
    }

    #[staticmethod]
    fn uniform() -> Self {
        PyModel(fielddev::InnovationModel::uniform())
    }

    #[staticmethod]
    fn student_like(t: f64) -> PyResult<Self> {
        fielddev::InnovationModel::student_like(t).map(PyModel).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (t, core_weight=0.5, threshold=1.0))]
    fn hybrid(t: f64, core_weight: f64, threshold: f64) -> PyResult<Self> {
        fielddev::InnovationModel::hybrid(t, Default::default(), core_weight, threshold).map(PyModel).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let k: fielddev::InnovationKind = serde_json::from_str(text).map_err(json_err)?;
        fielddev::InnovationModel::new(k).map(PyModel).map_err(err)
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.0.name()
    }

    /// `(t, h(x0), x0)` of the regularly varying tail, or `None`.
    fn tail(&self) -> Option<(f64, f64, f64)> {
        self.0.tail().map(|d| (d.t, d.h.value(d.x0), d.x0))
    }

    fn survival(&self, x: f64) -> f64 {
        self.0.survival(x)
    }

    #[pyo3(signature = (count, seed, index=0))]
    fn sample(&self, count: usize, seed: u64, index: u64) -> Vec<f64> {
        self.0.sample(&mut fielddev::RngStream::new(seed, index), count)
    }

    fn __repr__(&self) -> String {
        format!("InnovationModel({})", self.0.name())
    }
}

/// Weight field `b_{n,r,s}` on a rectangular window.
#[pyclass(name = "WeightTable", module = "fielddev_py", frozen)]
#[derive(Clone)]
struct PyTable(fielddev::WeightTable);

#[pymethods]
impl PyTable {
    /// Builds the weights of `S_n` over `region`. `margin` fixes the window
    /// margin for infinite fields instead of the epsilon ladder.
    #[staticmethod]
    #[pyo3(signature = (field, region, epsilon=1e-6, margin=None, max_cells=None))]
    fn build(field: &PyField, region: &PyRegion, epsilon: f64, margin: Option<i64>, max_cells: Option<u64>) -> PyResult<Self> {
        let mut opts = fielddev::BuildOptions::with_epsilon(epsilon);
        opts.margin = margin;
        if let Some(c) = max_cells {
            opts.max_cells = c;
        }
        fielddev::build_weights_with(&field.0, &region.0, &opts).map(PyTable).map_err(err)
    }

    #[staticmethod]
    fn from_weights(weights: Vec<f64>) -> PyResult<Self> {
        fielddev::WeightTable::from_weights(&weights).map(PyTable).map_err(err)
    }

    #[staticmethod]
    fn read_binary(path: &str) -> PyResult<Self> {
        let f = std::fs::File::open(path).map_err(|e| err(e.into()))?;
        fielddev::WeightTable::read_binary(std::io::BufReader::new(f)).map(PyTable).map_err(err)
    }

    fn write_binary(&self, path: &str) -> PyResult<()> {
        let f = std::fs::File::create(path).map_err(|e| err(e.into()))?;
        self.0.write_binary(std::io::BufWriter::new(f)).map_err(err)
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        let f = std::fs::File::create(path).map_err(|e| err(e.into()))?;
        self.0.write_csv(std::io::BufWriter::new(f)).map_err(err)
    }

    #[getter]
    fn sigma2(&self) -> f64 {
        self.0.sigma2()
    }

    #[getter]
    fn stored_mass(&self) -> f64 {
        self.0.stored_mass()
    }

    #[getter]
    fn tail_bound(&self) -> f64 {
        self.0.tail_bound()
    }

    #[getter]
    fn n_label(&self) -> String {
        self.0.n_label().to_string()
    }

    /// `(r_min, r_max, s_min, s_max)`.
    #[getter]
    fn window(&self) -> (i64, i64, i64, i64) {
        let w = self.0.window();
        (w.r_min, w.r_max, w.s_min, w.s_max)
    }

    /// Row-major values, `r` outer.
    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    fn get(&self, r: i64, s: i64) -> f64 {
        self.0.get(r, s)
    }

    fn power_sum(&self, t: f64) -> f64 {
        self.0.power_sum(t)
    }

    /// `sigma2`, `d2`, `rho2` and `D_t`, `U_t` for each exponent.
    fn aggregates(&self, py: Python<'_>, exponents: Vec<f64>) -> PyResult<PyObject> {
        serde_py(py, &fielddev::aggregates(&self.0, &exponents).map_err(err)?)
    }

    fn __len__(&self) -> usize {
        self.0.values().len()
    }

    fn __repr__(&self) -> String {
        format!("WeightTable({}, sigma2={})", self.0.n_label(), self.0.sigma2())
    }
}

#[pyfunction]
fn normal_sf(x: f64) -> f64 {
    theory::normal_sf(x)
}

#[pyfunction]
fn normal_cdf(x: f64) -> f64 {
    theory::normal_cdf(x)
}

#[pyfunction]
fn moderate_prediction(py: Python<'_>, table: &PyTable, x: f64, p: f64) -> PyResult<PyObject> {
    let agg = fielddev::aggregates(&table.0, &[p]).map_err(err)?;
    serde_py(py, &theory::moderate_prediction(x, &agg, p).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (table, model, x_abs, margin=DEFAULT_CT_MARGIN))]
fn large_prediction(py: Python<'_>, table: &PyTable, model: &PyModel, x_abs: f64, margin: f64) -> PyResult<PyObject> {
    serde_py(py, &theory::large_prediction(x_abs, &table.0, &model.0, margin).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (table, model, x, p, margin=DEFAULT_CT_MARGIN))]
fn uniform_prediction(py: Python<'_>, table: &PyTable, model: &PyModel, x: f64, p: f64, margin: f64) -> PyResult<PyObject> {
    let mut exps = vec![p];
    if let Some(d) = model.0.tail() {
        exps.push(d.t);
    }
    let agg = fielddev::aggregates(&table.0, &exps).map_err(err)?;
    serde_py(py, &theory::uniform_prediction(x, &table.0, &agg, &model.0, p, margin).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (table, p, t, margin=DEFAULT_CT_MARGIN))]
fn validity_ranges(py: Python<'_>, table: &PyTable, p: f64, t: f64, margin: f64) -> PyResult<PyObject> {
    let agg = fielddev::aggregates(&table.0, &[p, t]).map_err(err)?;
    serde_py(py, &theory::validity_ranges(&agg, p, t, margin).map_err(err)?)
}

#[pyfunction]
fn fuk_nagaev_bound(py: Python<'_>, table: &PyTable, model: &PyModel, x_abs: f64, y: f64, m: f64) -> PyResult<PyObject> {
    serde_py(py, &theory::fuk_nagaev_bound(&table.0, &model.0, x_abs, y, m).map_err(err)?)
}

/// Monte Carlo `P(S >= x sigma)` for thresholds in units of sigma. The GIL
/// is released while the simulation runs.
#[pyfunction]
#[pyo3(signature = (table, model, thresholds, n_samples, seed, two_sided=false, workers=None))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    table: &PyTable,
    model: &PyModel,
    thresholds: Vec<f64>,
    n_samples: u64,
    seed: u64,
    two_sided: bool,
    workers: Option<usize>,
) -> PyResult<PyObject> {
    let opts = SimOptions { workers, ..SimOptions::new(n_samples, seed).two_sided(two_sided) };
    let (w, m) = (table.0.clone(), model.0.clone());
    let est = py.allow_threads(move || simulate_tail(&w, &m, &thresholds, &opts)).map_err(err)?;
    serde_py(py, &est)
}

/// Exact `P(S >= threshold)` for a discrete law and at most 24 atoms.
#[pyfunction]
fn enumerate(table: &PyTable, model: &PyModel, threshold: f64) -> PyResult<f64> {
    enumerate_tail(&table.0, &model.0, threshold).map_err(err)
}

/// `sigma sqrt(2 ln U_p^-1)`, or `sigma sqrt(2 ln ln n)` when `loglog_n` is given.
#[pyfunction]
#[pyo3(signature = (table, p, loglog_n=None))]
fn lil_envelope(py: Python<'_>, table: &PyTable, p: f64, loglog_n: Option<u64>) -> PyResult<PyObject> {
    let agg = fielddev::aggregates(&table.0, &[p]).map_err(err)?;
    let mode = loglog_n.map_or(LilMode::UNp, |n| LilMode::LogLog { n });
    serde_py(py, &apps::lil_envelope(&agg, p, table.0.sigma(), mode).map_err(err)?)
}

fn dg_spec(kind: &str, r: f64, c: f64, epsilon: f64, b: f64) -> PyResult<DavisGutSpec> {
    let weight = match kind {
        "one" => DgWeight::One,
        "log_pow" => DgWeight::LogPow { r },
        "log" => DgWeight::Log,
        other => return Err(FieldDevError::new_err(format!("unknown weight kind {other:?}; use one, log_pow or log"))),
    };
    Ok(DavisGutSpec::new(weight, c, epsilon).map_err(err)?.with_b(b))
}

/// `(Psi(t), m)` for the Davis-Gut weight `kind` in {"one", "log_pow", "log"}.
#[pyfunction]
#[pyo3(signature = (kind, t, c=1.0, r=0.0))]
fn davis_gut_psi(kind: &str, t: f64, c: f64, r: f64) -> PyResult<(f64, u64)> {
    let s = dg_spec(kind, r, c, 0.0, 0.0)?;
    Ok((s.psi(t), s.psi_first_exceed()))
}

/// Analytic convergence of the Davis-Gut series.
#[pyfunction]
#[pyo3(signature = (kind, epsilon, c=1.0, r=0.0, b=0.0))]
fn davis_gut_converges(kind: &str, epsilon: f64, c: f64, r: f64, b: f64) -> PyResult<bool> {
    Ok(dg_spec(kind, r, c, epsilon, b)?.classify().converges)
}

/// Runs a JSON experiment config in memory and returns the report document
/// without writing files.
#[pyfunction]
#[pyo3(signature = (config_json, workers=None))]
fn run_config(py: Python<'_>, config_json: &str, workers: Option<usize>) -> PyResult<PyObject> {
    let config = ExperimentConfig::from_json(config_json).map_err(err)?;
    let c2 = config.clone();
    let report = py.allow_threads(move || cli::run(&c2, workers)).map_err(err)?;
    to_py(py, &cli::json_document(&config, &report))
}

#[pymodule]
fn fielddev_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FieldDevError", m.py().get_type::<FieldDevError>())?;
    m.add_class::<PyField>()?;
    m.add_class::<PyRegion>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyTable>()?;
    m.add_function(wrap_pyfunction!(normal_sf, m)?)?;
    m.add_function(wrap_pyfunction!(normal_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(moderate_prediction, m)?)?;
    m.add_function(wrap_pyfunction!(large_prediction, m)?)?;
    m.add_function(wrap_pyfunction!(uniform_prediction, m)?)?;
    m.add_function(wrap_pyfunction!(validity_ranges, m)?)?;
    m.add_function(wrap_pyfunction!(fuk_nagaev_bound, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate, m)?)?;
    m.add_function(wrap_pyfunction!(lil_envelope, m)?)?;
    m.add_function(wrap_pyfunction!(davis_gut_psi, m)?)?;
    m.add_function(wrap_pyfunction!(davis_gut_converges, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
