//! Python bindings for the `qtheta` crate.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use qtheta::cli::{self, Scenario};
use qtheta::finite_ext::{self, Cochain, ExtendedLattice};
use qtheta::kaehler::{KaehlerStructure, SiegelPoint};
use qtheta::lattices::{IntVector, LatticeEmbedding};
use qtheta::theta_engine::{self, ClassicalThetaParams};
use qtheta::torus_algebra::{self, QuantizationForm};

create_exception!(pyqtheta, QthetaError, PyValueError);

fn err(e: qtheta::Error) -> PyErr {
    QthetaError::new_err(e.to_string())
}

fn real_matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("ragged matrix"));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn complex_matrix(rows: &[Vec<Complex64>]) -> PyResult<DMatrix<Complex64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn rows<T: nalgebra::Scalar + Copy>(m: &DMatrix<T>) -> Vec<Vec<T>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// A point `T` of the Siegel upper half space with its Kähler structure on `ℝ^{2N}`.
#[pyclass(name = "Kaehler", module = "pyqtheta", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyKaehler {
    inner: KaehlerStructure,
}

#[pymethods]
impl PyKaehler {
    #[new]
    fn new(t: Vec<Vec<Complex64>>) -> PyResult<Self> {
        let siegel = SiegelPoint::new(complex_matrix(&t)?).map_err(err)?;
        Ok(Self { inner: KaehlerStructure::new(siegel).map_err(err)? })
    }

    /// `T = i·I`.
    #[staticmethod]
    fn standard(n: usize) -> Self {
        Self { inner: KaehlerStructure::standard(n) }
    }

    #[getter]
    fn half_dim(&self) -> usize {
        self.inner.half_dim()
    }

    fn t(&self) -> Vec<Vec<Complex64>> {
        rows(self.inner.siegel().matrix())
    }

    /// Image of a real vector in `ℂᴺ`.
    fn embed(&self, x: Vec<f64>) -> PyResult<Vec<Complex64>> {
        Ok(self.inner.embed(&DVector::from_vec(x)).map_err(err)?.iter().copied().collect())
    }

    fn __repr__(&self) -> String {
        format!("Kaehler(N={})", self.inner.half_dim())
    }
}

/// A full-rank lattice in the standard symplectic space.
#[pyclass(name = "Lattice", module = "pyqtheta", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyLattice {
    inner: LatticeEmbedding,
}

#[pymethods]
impl PyLattice {
    #[staticmethod]
    fn standard(n: usize) -> Self {
        Self { inner: LatticeEmbedding::standard(n) }
    }

    /// Parse the scenario lattice format: `{"N": n, "generators": [[...], ...]}` with columns as generators.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner: LatticeEmbedding::from_json(&v).map_err(err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    #[getter]
    fn rank(&self) -> usize {
        self.inner.rank()
    }

    fn generators(&self) -> Vec<Vec<f64>> {
        rows(self.inner.generators())
    }

    fn gram(&self) -> Vec<Vec<f64>> {
        rows(self.inner.gram().matrix())
    }

    fn covolume(&self) -> PyResult<f64> {
        self.inner.covolume().map_err(err)
    }

    fn dual(&self) -> PyResult<Self> {
        Ok(Self { inner: self.inner.dual_lattice().map_err(err)? })
    }

    fn __repr__(&self) -> String {
        format!("Lattice({})", self.inner.to_json())
    }
}

/// Finite Laurent polynomial `Σ a_h e(h)` in a quantum torus.
#[pyclass(name = "TorusElement", module = "pyqtheta", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTorusElement {
    inner: torus_algebra::TorusElement,
}

#[pymethods]
impl PyTorusElement {
    #[new]
    fn new(a_d: Vec<Vec<f64>>, terms: BTreeMap<Vec<i64>, Complex64>) -> PyResult<Self> {
        let form = QuantizationForm::new(real_matrix(&a_d)?).map_err(err)?;
        let inner = torus_algebra::TorusElement::from_terms(form, terms.into_iter().map(|(h, a)| (IntVector(h), a))).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner: torus_algebra::TorusElement::from_json(&v).map_err(err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    fn terms(&self) -> BTreeMap<Vec<i64>, Complex64> {
        self.inner.terms().iter().map(|(h, a)| (h.0.clone(), *a)).collect()
    }

    fn coefficient(&self, h: Vec<i64>) -> Complex64 {
        self.inner.coefficient(&IntVector(h))
    }

    fn star(&self) -> Self {
        Self { inner: torus_algebra::star(&self.inner) }
    }

    fn sup_norm(&self) -> f64 {
        self.inner.sup_norm()
    }

    fn max_abs_diff(&self, other: &Self) -> f64 {
        self.inner.max_abs_diff(&other.inner)
    }

    fn __mul__(&self, other: &Self) -> PyResult<Self> {
        Ok(Self { inner: torus_algebra::multiply(&self.inner, &other.inner).map_err(err)? })
    }

    fn __add__(&self, other: &Self) -> PyResult<Self> {
        Ok(Self { inner: self.inner.add(&other.inner).map_err(err)? })
    }

    fn __sub__(&self, other: &Self) -> PyResult<Self> {
        Ok(Self { inner: self.inner.sub(&other.inner).map_err(err)? })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("TorusElement({} terms)", self.inner.len())
    }
}

/// Truncated quantum theta vector of a lattice for a Kähler structure.
#[pyclass(name = "QuantumTheta", module = "pyqtheta", frozen, skip_from_py_object)]
struct PyQuantumTheta {
    inner: theta_engine::QuantumTheta,
}

#[pymethods]
impl PyQuantumTheta {
    #[new]
    #[pyo3(signature = (kaehler, lattice, radius = 6.0))]
    fn new(kaehler: &PyKaehler, lattice: &PyLattice, radius: f64) -> PyResult<Self> {
        Ok(Self { inner: theta_engine::quantum_theta(&kaehler.inner, &lattice.inner, radius).map_err(err)? })
    }

    /// Normalized element, without the prefactor.
    #[getter]
    fn element(&self) -> PyTorusElement {
        PyTorusElement { inner: self.inner.element.clone() }
    }

    #[getter]
    fn prefactor(&self) -> f64 {
        self.inner.prefactor
    }

    #[getter]
    fn radius(&self) -> f64 {
        self.inner.radius
    }

    #[getter]
    fn tail_bound(&self) -> f64 {
        self.inner.tail_bound
    }

    /// Largest coefficient defect of `U_{lift(g)}Θ − Θ`.
    fn invariance_residual(&self, g: Vec<i64>) -> PyResult<f64> {
        Ok(theta_engine::verify_multiplier_invariance(&self.inner, &IntVector(g)).map_err(err)?.value)
    }

    /// `(Θ·1)(z)` in the Fock model.
    fn vacuum_value(&self, z: Vec<Complex64>) -> PyResult<Complex64> {
        let f = theta_engine::apply_to_vacuum(&self.inner).map_err(err)?;
        f.evaluate(&DVector::from_vec(z)).map_err(err)
    }
}

/// Classical Riemann theta `θ(z, Ω)` with automatic truncation; returns `(value, tail_bound)`.
#[pyfunction]
fn classical_theta(omega: Vec<Vec<Complex64>>, z: Vec<Complex64>) -> PyResult<(Complex64, f64)> {
    let omega = SiegelPoint::new(complex_matrix(&omega)?).map_err(err)?;
    let t = theta_engine::classical_theta_auto(&ClassicalThetaParams { omega, z: DVector::from_vec(z) }).map_err(err)?;
    Ok((t.value, t.tail_bound))
}

/// Compare vacuum lattice sums over `D` and its dual at each point.
#[pyfunction]
#[pyo3(signature = (kaehler, lattice, points, radius = 7.0))]
fn poisson_check(kaehler: &PyKaehler, lattice: &PyLattice, points: Vec<Vec<f64>>, radius: f64) -> PyResult<BTreeMap<&'static str, f64>> {
    let xs: Vec<_> = points.into_iter().map(DVector::from_vec).collect();
    let r = theta_engine::poisson_check(&kaehler.inner, &lattice.inner, &xs, radius).map_err(err)?;
    Ok(BTreeMap::from([
        ("literal_residual", r.literal_residual),
        ("normalized_residual", r.normalized_residual),
        ("ratio", r.ratio.re),
        ("covolume", r.covolume),
        ("tail_bound", r.tail_bound),
    ]))
}

/// Cochain values on the labels of the bundled `ℤ/2` extended lattice, found by search.
#[pyfunction]
#[pyo3(signature = (budget = 100_000))]
fn z2_cochain(budget: usize) -> PyResult<Vec<Complex64>> {
    Ok(finite_ext::solve_cochain(&ExtendedLattice::z2_example(), budget).map_err(err)?.values)
}

/// Rank of the four `ℤ/2` theta vectors and the dimension of the invariant space.
#[pyfunction]
#[pyo3(signature = (radius = 8.0))]
fn z2_basis_report(radius: f64) -> PyResult<(usize, usize, f64)> {
    let d = ExtendedLattice::z2_example();
    let r = finite_ext::basis_rank_check(&d, &Cochain::z2_example(), &KaehlerStructure::standard(1), radius).map_err(err)?;
    Ok((r.rank, r.gamma_dimension, r.span_residual))
}

#[pyfunction]
fn bundled_scenarios() -> Vec<&'static str> {
    cli::bundled_scenarios().collect()
}

/// Run a scenario given as a path, a bundled name, or inline JSON; returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (scenario, seed = None))]
fn run_scenario(scenario: &str, seed: Option<u64>) -> PyResult<String> {
    let s = if scenario.trim_start().starts_with('{') {
        let v: serde_json::Value = serde_json::from_str(scenario).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Scenario::from_json(&v)
    } else {
        Scenario::load(scenario)
    }
    .map_err(err)?;
    let report = cli::run_scenario(&s, seed, false).map_err(err)?;
    serde_json::to_string_pretty(&report).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn pyqtheta(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("QthetaError", m.py().get_type::<QthetaError>())?;
    m.add_class::<PyKaehler>()?;
    m.add_class::<PyLattice>()?;
    m.add_class::<PyTorusElement>()?;
    m.add_class::<PyQuantumTheta>()?;
    m.add_function(wrap_pyfunction!(classical_theta, m)?)?;
    m.add_function(wrap_pyfunction!(poisson_check, m)?)?;
    m.add_function(wrap_pyfunction!(z2_cochain, m)?)?;
    m.add_function(wrap_pyfunction!(z2_basis_report, m)?)?;
    m.add_function(wrap_pyfunction!(bundled_scenarios, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
