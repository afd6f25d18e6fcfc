//! Python bindings: flows, currents, transport, maximal functions and the
//! non-uniqueness demonstration.
//!
//! Specs and reports cross the boundary as plain dicts with the same layout
//! as the JSON scenario files.

use std::path::Path;

use ::geotransport::acreg::{self, Sampled1D};
use ::geotransport::currents::{self, Current, DiracCurrent, SimplicialCurrent};
use ::geotransport::exterior::MultiVector as CoreMultiVector;
use ::geotransport::flows::{BoundingBox, FieldSpec, FlowMap as CoreFlowMap, TimeDependentField};
use ::geotransport::scenario::{self, Command, LoadedScenario, Overrides};
use ::geotransport::testforms::FormDictionary;
use ::geotransport::transport;
use nalgebra::DMatrix;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyAny;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_json(obj: &Bound<'_, PyAny>) -> PyResult<String> {
    obj.py()
        .import("json")?
        .call_method1("dumps", (obj,))?
        .extract()
}

fn from_json<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    from_json(py, &serde_json::to_string(value).map_err(err)?)
}

/// Flow map `Φ_t^s` of a field given as a spec dict.
#[pyclass(module = "geotransport")]
struct FlowMap {
    inner: CoreFlowMap,
}

#[pymethods]
impl FlowMap {
    #[new]
    #[pyo3(signature = (field, lo, hi, tolerance = 1e-10))]
    fn new(field: &Bound<'_, PyAny>, lo: Vec<f64>, hi: Vec<f64>, tolerance: f64) -> PyResult<Self> {
        let spec: FieldSpec = serde_json::from_str(&to_json(field)?).map_err(err)?;
        let bbox = BoundingBox::new(lo, hi).map_err(err)?;
        let field = TimeDependentField::new(spec, bbox).map_err(err)?;
        Ok(Self {
            inner: CoreFlowMap::new(field, tolerance).map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn tolerance(&self) -> f64 {
        self.inner.tolerance()
    }

    /// `Φ_t^s(x)`.
    fn flow(&self, s: f64, t: f64, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.flow(s, t, &x).map_err(err)
    }

    fn flow_batch(&self, s: f64, t: f64, xs: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        self.inner.flow_batch(s, t, &xs).map_err(err)
    }

    /// `b_t(x)`.
    fn field_value(&self, t: f64, x: Vec<f64>) -> Vec<f64> {
        self.inner.field().value(t, &x)
    }

    /// `Λ(t) = ∫_0^t (1 + ‖b_r‖ + Lip(b_r)) dr`.
    fn budget(&self, t: f64) -> f64 {
        self.inner.budget(t)
    }

    /// Right-hand side of the Gronwall estimate for `|Φ_{t2}^s(x) − Φ_{t1}^s(y)|`.
    fn gronwall_bound(&self, s: f64, t1: f64, t2: f64, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        self.inner.gronwall_bound(s, t1, t2, &x, &y).map_err(err)
    }

    fn lip_integral(&self, a: f64, b: f64) -> PyResult<f64> {
        self.inner.field().lip_integral(a, b).map_err(err)
    }
}

/// A Dirac or simplicial current.
#[pyclass(module = "geotransport", name = "Current", from_py_object)]
#[derive(Clone)]
struct PyCurrent {
    inner: Current,
}

#[pymethods]
impl PyCurrent {
    /// `weight · (v_1 ∧ .. ∧ v_k) δ_point`.
    #[staticmethod]
    #[pyo3(signature = (point, vectors, weight = 1.0))]
    fn dirac(point: Vec<f64>, vectors: Vec<Vec<f64>>, weight: f64) -> PyResult<Self> {
        Ok(Self {
            inner: DiracCurrent::single(point, &vectors, weight)
                .map_err(err)?
                .into(),
        })
    }

    /// The oriented segment from `a` to `b`.
    #[staticmethod]
    fn segment(a: Vec<f64>, b: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: SimplicialCurrent::segment(a, b).map_err(err)?.into(),
        })
    }

    /// The closed polygon through `points`.
    #[staticmethod]
    fn polygon(points: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self {
            inner: SimplicialCurrent::polygon(points).map_err(err)?.into(),
        })
    }

    /// From a dict in the scenario layout.
    #[staticmethod]
    fn from_dict(spec: &Bound<'_, PyAny>) -> PyResult<Self> {
        Ok(Self {
            inner: serde_json::from_str(&to_json(spec)?).map_err(err)?,
        })
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn grade(&self) -> usize {
        self.inner.grade()
    }

    fn mass(&self) -> PyResult<f64> {
        self.inner.mass().map_err(err)
    }

    /// Boundary of a simplicial current.
    fn boundary(&self) -> PyResult<Self> {
        match &self.inner {
            Current::Simplicial(s) => Ok(Self {
                inner: s.boundary().map_err(err)?.into(),
            }),
            Current::Dirac(_) => Err(PyValueError::new_err(
                "the boundary of a Dirac current is not a current of finite mass",
            )),
        }
    }

    /// Midpoint subdivision of a simplicial current.
    fn refine(&self) -> PyResult<Self> {
        match &self.inner {
            Current::Simplicial(s) => Ok(Self {
                inner: s.refine().map_err(err)?.into(),
            }),
            Current::Dirac(_) => Err(PyValueError::new_err(
                "only simplicial currents can be refined",
            )),
        }
    }

    fn support_points(&self) -> Vec<Vec<f64>> {
        self.inner.support_points()
    }

    fn __repr__(&self) -> String {
        let kind = match self.inner {
            Current::Dirac(_) => "dirac",
            Current::Simplicial(_) => "simplicial",
        };
        format!(
            "Current({kind}, dim={}, grade={})",
            self.inner.dim(),
            self.inner.grade()
        )
    }
}

/// A `k`-vector in `Λ_k R^d`, coefficients in lexicographic basis order.
#[pyclass(module = "geotransport", from_py_object)]
#[derive(Clone)]
struct MultiVector {
    inner: CoreMultiVector,
}

#[pymethods]
impl MultiVector {
    #[new]
    fn new(dim: usize, grade: usize, coeffs: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: CoreMultiVector::from_coeffs(dim, grade, coeffs).map_err(err)?,
        })
    }

    /// `v_1 ∧ .. ∧ v_k`.
    #[staticmethod]
    fn from_vectors(dim: usize, vectors: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self {
            inner: CoreMultiVector::from_vectors(dim, &vectors).map_err(err)?,
        })
    }

    #[getter]
    fn coeffs(&self) -> Vec<f64> {
        self.inner.coeffs().to_vec()
    }

    #[getter]
    fn grade(&self) -> usize {
        self.inner.grade()
    }

    fn wedge(&self, other: &MultiVector) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.wedge(&other.inner).map_err(err)?,
        })
    }

    /// `Λ^k A` applied to the `k`-vector.
    fn push_linear(&self, matrix: Vec<Vec<f64>>) -> PyResult<Self> {
        let rows = matrix.len();
        let cols = matrix.first().map_or(0, Vec::len);
        if matrix.iter().any(|r| r.len() != cols) {
            return Err(PyValueError::new_err("matrix rows differ in length"));
        }
        let a = DMatrix::from_fn(rows, cols, |i, j| matrix[i][j]);
        Ok(Self {
            inner: self.inner.push_linear(&a).map_err(err)?,
        })
    }

    /// Mass of a simple `k`-vector.
    fn mass(&self) -> PyResult<f64> {
        self.inner.simple_mass().map_err(err)
    }
}

/// `T_t = (Φ_t^0)_* T` on `grid`, as `(times, currents)`.
#[pyfunction]
fn solve_gte(
    flow: &FlowMap,
    initial: &PyCurrent,
    grid: Vec<f64>,
) -> PyResult<(Vec<f64>, Vec<PyCurrent>)> {
    let traj = transport::solve_gte(&flow.inner, &initial.inner, &grid).map_err(err)?;
    Ok((
        traj.times,
        traj.currents
            .into_iter()
            .map(|inner| PyCurrent { inner })
            .collect(),
    ))
}

/// Pushforward of a current under `Φ_t^s`.
#[pyfunction]
fn push_flow(flow: &FlowMap, s: f64, t: f64, current: &PyCurrent) -> PyResult<PyCurrent> {
    let p = transport::pushforward(
        &transport::FlowAt {
            flow: &flow.inner,
            s,
            t,
        },
        &current.inner,
    )
    .map_err(err)?;
    Ok(PyCurrent { inner: p.current })
}

/// Test-form distance `max_ω |⟨a − b, ω⟩|` over a seeded dictionary.
#[pyfunction]
#[pyo3(signature = (a, b, lo, hi, size = 64, seed = 0))]
fn distance(
    a: &PyCurrent,
    b: &PyCurrent,
    lo: Vec<f64>,
    hi: Vec<f64>,
    size: usize,
    seed: u64,
) -> PyResult<f64> {
    let dict = FormDictionary::generate(a.inner.dim(), a.inner.grade(), size, seed, &lo, &hi)
        .map_err(err)?;
    currents::distance(&a.inner, &b.inner, &dict).map_err(err)
}

/// Maximal function at the nodes of a cell-constant density.
#[pyfunction]
fn maximal_function(grid: Vec<f64>, values: Vec<f64>) -> PyResult<Vec<f64>> {
    let g = Sampled1D::density(grid, values).map_err(err)?;
    Ok(acreg::maximal_function(&g).map_err(err)?.values().to_vec())
}

/// `sup_λ λ |{Mg > λ}| / ‖g‖_1`.
#[pyfunction]
fn weak_type_constant(grid: Vec<f64>, values: Vec<f64>) -> PyResult<f64> {
    let g = Sampled1D::density(grid, values).map_err(err)?;
    acreg::weak_type_constant(&g, &[]).map_err(err)
}

/// The verdict of the non-uniqueness demonstration as a dict.
#[pyfunction]
fn nonuniqueness_demo(py: Python<'_>) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &transport::nonuniqueness_demo().map_err(err)?)
}

/// Runs a `gte` subcommand on a scenario file and returns its report.
#[pyfunction]
#[pyo3(signature = (command, path, refine = None, tolerance = None, dict_size = None, seed = None))]
fn run_scenario<'py>(
    py: Python<'py>,
    command: &str,
    path: &str,
    refine: Option<usize>,
    tolerance: Option<f64>,
    dict_size: Option<usize>,
    seed: Option<u64>,
) -> PyResult<Bound<'py, PyAny>> {
    let command = match command {
        "flow" => Command::Flow,
        "transport" => Command::Transport,
        "residual" => Command::Residual,
        "approx" => Command::Approx,
        "maximal" => Command::Maximal,
        other => return Err(PyValueError::new_err(format!("unknown command {other:?}"))),
    };
    let overrides = Overrides {
        refine,
        tolerance,
        dict_size,
        seed,
    };
    let loaded = LoadedScenario::from_path(Path::new(path)).map_err(err)?;
    let report = loaded.run(command, &overrides).map_err(err)?;
    from_json(py, &report.json_text())
}

/// Runs `demo nonuniqueness` with optional overrides and returns its report.
#[pyfunction]
#[pyo3(signature = (refine = None, tolerance = None, dict_size = None, seed = None))]
fn run_demo(
    py: Python<'_>,
    refine: Option<usize>,
    tolerance: Option<f64>,
    dict_size: Option<usize>,
    seed: Option<u64>,
) -> PyResult<Bound<'_, PyAny>> {
    let overrides = Overrides {
        refine,
        tolerance,
        dict_size,
        seed,
    };
    from_json(
        py,
        &scenario::run_demo(&overrides).map_err(err)?.json_text(),
    )
}

#[pymodule]
#[pyo3(name = "geotransport")]
fn geotransport_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<FlowMap>()?;
    m.add_class::<PyCurrent>()?;
    m.add_class::<MultiVector>()?;
    m.add_function(wrap_pyfunction!(solve_gte, m)?)?;
    m.add_function(wrap_pyfunction!(push_flow, m)?)?;
    m.add_function(wrap_pyfunction!(distance, m)?)?;
    m.add_function(wrap_pyfunction!(maximal_function, m)?)?;
    m.add_function(wrap_pyfunction!(weak_type_constant, m)?)?;
    m.add_function(wrap_pyfunction!(nonuniqueness_demo, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(run_demo, m)?)?;
    Ok(())
}
