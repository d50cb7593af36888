//! Python module `incinterp`.

use increment_interp::filtering::{solve_filtering, FilteringProblem};
use increment_interp::increments::{functional_decomposition, IncrementSpec, WeightVector};
use increment_interp::interpolate::{
    default_tail, evaluate_characteristic, extract_time_weights, orthogonality_residuals, solve_functional,
    solve_increment_functional, Block, EstimateSolution, InterpolationProblem, TruncationConfig,
};
use increment_interp::minimax::{
    self, DensityClass, FixedPointConfig, LeastFavorableSolution, SaddleReport,
};
use increment_interp::oracle::{self, ComparisonProblem, OracleConfig};
use increment_interp::spectral::{DensityModel, FourierTable, QuadratureConfig};
use increment_interp::Error;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(incinterp, IncInterpError, PyException, "Numerical or diagnostic failure.");
create_exception!(incinterp, PositivityError, IncInterpError, "A density or weighted inverse is not positive.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::IndexOutOfRange { .. } => PyValueError::new_err(e.to_string()),
        Error::PositivityViolation { .. } => PositivityError::new_err(e.to_string()),
        e => IncInterpError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for increment_interp::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

#[pyclass(name = "IncrementSpec", module = "incinterp", frozen, skip_from_py_object, eq)]
#[derive(Clone, Copy, PartialEq)]
struct PySpec(IncrementSpec);

#[pymethods]
impl PySpec {
    #[new]
    fn new(n: usize, mu: usize) -> PyResult<Self> {
        IncrementSpec::new(n, mu).map(Self).py_err()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn mu(&self) -> usize {
        self.0.mu()
    }

    /// `mu * n`.
    #[getter]
    fn span(&self) -> usize {
        self.0.span()
    }

    /// `N + mu * n`.
    fn horizon(&self, big_n: usize) -> usize {
        self.0.horizon(big_n)
    }

    fn __repr__(&self) -> String {
        format!("IncrementSpec(n={}, mu={})", self.0.n(), self.0.mu())
    }
}

#[pyclass(name = "Truncation", module = "incinterp", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyTrunc(TruncationConfig);

#[pymethods]
impl PyTrunc {
    #[new]
    #[pyo3(signature = (l=None, panels=32, order=8, singularity_exclusion=0.0, tolerance=1e-9, condition_bound=None))]
    fn new(
        l: Option<usize>,
        panels: usize,
        order: usize,
        singularity_exclusion: f64,
        tolerance: f64,
        condition_bound: Option<f64>,
    ) -> PyResult<Self> {
        let quadrature = QuadratureConfig {
            panels,
            order,
            singularity_exclusion,
            tolerance,
        };
        quadrature.validate().py_err()?;
        let d = TruncationConfig::default();
        Ok(Self(TruncationConfig {
            l,
            quadrature,
            condition_bound: condition_bound.unwrap_or(d.condition_bound),
        }))
    }

    #[getter]
    fn l(&self) -> Option<usize> {
        self.0.l
    }

    fn __repr__(&self) -> String {
        format!("Truncation(l={:?}, panels={}, order={})", self.0.l, self.0.quadrature.panels, self.0.quadrature.order)
    }
}

fn trunc_or_default(t: Option<&PyTrunc>) -> TruncationConfig {
    t.map_or_else(TruncationConfig::default, |t| t.0)
}

#[pyclass(name = "Density", module = "incinterp", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDensity(DensityModel);

#[pymethods]
impl PyDensity {
    /// White increments: increment density equal to `level`.
    #[staticmethod]
    fn increment_constant(spec: &PySpec, level: f64) -> PyResult<Self> {
        DensityModel::increment_constant(spec.0, level).map(Self).py_err()
    }

    #[staticmethod]
    #[pyo3(signature = (spec, sigma2, ar=vec![], ma=vec![]))]
    fn arma(spec: &PySpec, sigma2: f64, ar: Vec<f64>, ma: Vec<f64>) -> PyResult<Self> {
        DensityModel::arma(spec.0, sigma2, ar, ma).map(Self).py_err()
    }

    /// Weighted inverse given by its Fourier head `c(0), c(1), ...`.
    #[staticmethod]
    fn inverse_trig(spec: &PySpec, coeffs: Vec<f64>) -> PyResult<Self> {
        DensityModel::inverse_trig(spec.0, coeffs).map(Self).py_err()
    }

    /// Level density sampled on `[0, pi]`.
    #[staticmethod]
    fn tabulated(spec: &PySpec, lam: Vec<f64>, rho: Vec<f64>) -> PyResult<Self> {
        DensityModel::tabulated(spec.0, &lam, &rho).map(Self).py_err()
    }

    #[getter]
    fn spec(&self) -> PySpec {
        PySpec(self.0.spec)
    }

    fn rho(&self, lam: f64) -> f64 {
        self.0.rho(lam)
    }

    fn increment_density(&self, lam: f64) -> f64 {
        self.0.increment_density(lam)
    }

    fn weighted_inverse(&self, lam: f64) -> f64 {
        self.0.weighted_inverse(lam)
    }

    fn __repr__(&self) -> String {
        format!("Density({:?})", self.0.form)
    }
}

#[pyclass(name = "Solution", module = "incinterp", frozen, skip_from_py_object)]
struct PySolution(EstimateSolution);

#[pymethods]
impl PySolution {
    #[getter]
    fn mse(&self) -> f64 {
        self.0.mse
    }

    #[getter]
    fn mse_quadratic(&self) -> f64 {
        self.0.mse_quadratic
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.0.horizon
    }

    #[getter]
    fn l(&self) -> usize {
        self.0.l
    }

    #[getter]
    fn b(&self) -> Vec<f64> {
        self.0.b.clone()
    }

    #[getter]
    fn c(&self) -> Vec<f64> {
        self.0.c.clone()
    }

    /// `e[j] = e(L0 - j)`.
    #[getter]
    fn e(&self) -> Vec<f64> {
        self.0.e.clone()
    }

    #[getter]
    fn v(&self) -> Vec<f64> {
        self.0.v.clone()
    }

    #[getter]
    fn minimax(&self) -> bool {
        self.0.minimax
    }

    #[getter]
    fn residuals<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = &self.0.residuals;
        let d = PyDict::new(py);
        d.set_item("first", r.first)?;
        d.set_item("second", r.second)?;
        d.set_item("display_first", r.display_first)?;
        d.set_item("b_norm", r.b_norm)?;
        Ok(d)
    }

    /// Weights on `x(-tail..=-1)` and `y(L0+1..=L0+tail)`.
    #[pyo3(signature = (tail=None))]
    fn time_weights<'py>(&self, py: Python<'py>, tail: Option<usize>) -> PyResult<Bound<'py, PyDict>> {
        let w = extract_time_weights(&self.0, tail.unwrap_or_else(|| default_tail(&self.0))).py_err()?;
        let d = PyDict::new(py);
        d.set_item("past", w.past)?;
        d.set_item("future", w.future)?;
        d.set_item("leakage", w.leakage)?;
        Ok(d)
    }

    /// `(lag, past, future)` orthogonality coefficients; `None` where undefined.
    fn orthogonality(&self, lags: Vec<i64>) -> PyResult<Vec<(i64, Option<f64>, Option<f64>)>> {
        Ok(orthogonality_residuals(&self.0, &lags)
            .py_err()?
            .into_iter()
            .map(|r| (r.lag, r.past, r.future))
            .collect())
    }

    /// Spectral characteristic of the past (`"past"`) or future block.
    fn characteristic(&self, which: &str, lam: f64) -> PyResult<(f64, f64)> {
        let block = match which {
            "past" => Block::Past,
            "future" => Block::Future,
            _ => return Err(PyValueError::new_err("which must be 'past' or 'future'")),
        };
        let z = evaluate_characteristic(&self.0, block, lam);
        Ok((z.re, z.im))
    }

    fn __repr__(&self) -> String {
        format!("Solution(mse={}, L={}, horizon={})", self.0.mse, self.0.l, self.0.horizon)
    }
}

fn weights(a: Vec<f64>) -> PyResult<WeightVector> {
    WeightVector::new(a).py_err()
}

/// `(b, v)` with `A xi = sum b x - sum v xi` over the boundary block.
#[pyfunction]
fn decompose(spec: &PySpec, a: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let w = functional_decomposition(spec.0, &weights(a)?);
    Ok((w.b, w.v))
}

#[pyfunction]
#[pyo3(signature = (spec, a, f, g, trunc=None))]
fn interpolate(
    py: Python<'_>,
    spec: &PySpec,
    a: Vec<f64>,
    f: &PyDensity,
    g: &PyDensity,
    trunc: Option<&PyTrunc>,
) -> PyResult<PySolution> {
    let p = InterpolationProblem {
        spec: spec.0,
        a: weights(a)?,
        f: f.0.clone(),
        g: g.0.clone(),
        trunc: trunc_or_default(trunc),
    };
    py.detach(|| solve_functional(&p)).map(PySolution).py_err()
}

#[pyfunction]
#[pyo3(signature = (spec, b, f, g, trunc=None))]
fn solve_increment(
    py: Python<'_>,
    spec: &PySpec,
    b: Vec<f64>,
    f: &PyDensity,
    g: &PyDensity,
    trunc: Option<&PyTrunc>,
) -> PyResult<PySolution> {
    let t = trunc_or_default(trunc);
    py.detach(|| solve_increment_functional(spec.0, &b, &f.0, &g.0, &t))
        .map(PySolution)
        .py_err()
}

/// Estimate `sum a(k) xi(k)` over `k = N+1..=N+mu n`.
#[pyfunction]
#[pyo3(signature = (spec, a_future, big_n, f, g, trunc=None))]
fn filter(
    py: Python<'_>,
    spec: &PySpec,
    a_future: Vec<f64>,
    big_n: usize,
    f: &PyDensity,
    g: &PyDensity,
    trunc: Option<&PyTrunc>,
) -> PyResult<PySolution> {
    let p = FilteringProblem {
        spec: spec.0,
        a_future,
        big_n,
        f: f.0.clone(),
        g: g.0.clone(),
        trunc: trunc_or_default(trunc),
    };
    py.detach(|| solve_filtering(&p)).map(PySolution).py_err()
}

#[pyclass(name = "DensityClass", module = "incinterp", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyClass(DensityClass);

#[pymethods]
impl PyClass {
    /// Mean weighted inverses fixed to `p1` (and `p2` for the noise).
    #[staticmethod]
    #[pyo3(signature = (p1, p2=None))]
    fn d0(p1: f64, p2: Option<f64>) -> PyResult<Self> {
        let c = DensityClass::D0 { p1, p2 };
        c.validate().py_err()?;
        Ok(Self(c))
    }

    /// First `M + 1` Fourier coefficients of the weighted inverses fixed.
    #[staticmethod]
    #[pyo3(signature = (r1, r2=None))]
    fn dm(r1: Vec<f64>, r2: Option<Vec<f64>>) -> PyResult<Self> {
        let c = DensityClass::DM { r1, r2 };
        c.validate().py_err()?;
        Ok(Self(c))
    }

    fn __repr__(&self) -> String {
        format!("DensityClass({:?})", self.0)
    }
}

fn report_dict<'py>(py: Python<'py>, r: &SaddleReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("worst", r.worst())?;
    d.set_item("composed_f", r.composed_f)?;
    d.set_item("composed_g", r.composed_g)?;
    d.set_item("known_g", r.known_g)?;
    d.set_item("modulus_f", r.modulus_f)?;
    d.set_item("modulus_g", r.modulus_g)?;
    d.set_item("moment_f", r.moment_f.clone())?;
    d.set_item("moment_g", r.moment_g.clone())?;
    Ok(d)
}

#[pyclass(name = "LeastFavorable", module = "incinterp", frozen, skip_from_py_object)]
struct PyLeastFavorable(LeastFavorableSolution);

#[pymethods]
impl PyLeastFavorable {
    /// Fourier head of the signal weighted inverse.
    #[getter]
    fn f0(&self) -> Vec<f64> {
        self.0.f0.coeffs.clone()
    }

    #[getter]
    fn g0(&self) -> Vec<f64> {
        self.0.g0.coeffs.clone()
    }

    #[getter]
    fn p1(&self) -> Vec<f64> {
        self.0.p1.clone()
    }

    #[getter]
    fn p2(&self) -> Vec<f64> {
        self.0.p2.clone()
    }

    #[getter]
    fn gamma(&self) -> Option<Vec<f64>> {
        self.0.factorization.as_ref().map(|f| f.gamma.clone())
    }

    #[getter]
    fn converged(&self) -> bool {
        self.0.converged
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.0.iterations
    }

    #[getter]
    fn report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        report_dict(py, &self.0.report)
    }

    fn densities(&self) -> PyResult<(PyDensity, PyDensity)> {
        let s = self.0.spec;
        Ok((
            PyDensity(minimax::assemble_density(&self.0.f0, s).py_err()?),
            PyDensity(minimax::assemble_density(&self.0.g0, s).py_err()?),
        ))
    }

    fn __repr__(&self) -> String {
        format!("LeastFavorable(f0={:?}, converged={})", self.0.f0.coeffs, self.0.converged)
    }
}

/// Closed form for white noise in a `D0` class with level `p1`.
#[pyfunction]
#[pyo3(signature = (spec, a, p1, trunc=None))]
fn white_noise_least_favorable(spec: &PySpec, a: Vec<f64>, p1: f64, trunc: Option<&PyTrunc>) -> PyResult<PyLeastFavorable> {
    minimax::white_noise_least_favorable(spec.0, &weights(a)?, p1, &trunc_or_default(trunc))
        .map(PyLeastFavorable)
        .py_err()
}

/// Least-favorable signal when the noise weighted inverse head `g` is known.
#[pyfunction]
#[pyo3(signature = (spec, a, g, class_, trunc=None))]
fn solve_known_g(
    py: Python<'_>,
    spec: &PySpec,
    a: Vec<f64>,
    g: Vec<f64>,
    class_: &PyClass,
    trunc: Option<&PyTrunc>,
) -> PyResult<PyLeastFavorable> {
    let a = weights(a)?;
    let t = trunc_or_default(trunc);
    py.detach(|| minimax::solve_known_g(spec.0, &a, &FourierTable::new(g), &class_.0, &t))
        .map(PyLeastFavorable)
        .py_err()
}

#[pyfunction]
#[pyo3(signature = (spec, a, class_, damping=0.5, max_iter=200, trunc=None))]
fn solve_d0_fixed_point(
    py: Python<'_>,
    spec: &PySpec,
    a: Vec<f64>,
    class_: &PyClass,
    damping: f64,
    max_iter: usize,
    trunc: Option<&PyTrunc>,
) -> PyResult<PyLeastFavorable> {
    let a = weights(a)?;
    let t = trunc_or_default(trunc);
    let cfg = FixedPointConfig { damping, max_iter };
    py.detach(|| minimax::solve_d0_fixed_point(spec.0, &a, &class_.0, &t, cfg, None))
        .map(PyLeastFavorable)
        .py_err()
}

/// Optimal estimate under a converged least-favorable pair.
#[pyfunction]
#[pyo3(signature = (lf, a, trunc=None))]
fn minimax_characteristic(lf: &PyLeastFavorable, a: Vec<f64>, trunc: Option<&PyTrunc>) -> PyResult<PySolution> {
    minimax::minimax_characteristic(&lf.0, &weights(a)?, &trunc_or_default(trunc))
        .map(PySolution)
        .py_err()
}

/// Error of a fixed estimate when the true densities are `(f, g)`.
#[pyfunction]
fn saddle_objective(h0: &PySolution, f: &PyDensity, g: &PyDensity) -> PyResult<f64> {
    minimax::saddle_objective(&h0.0, &f.0, &g.0).py_err()
}

/// Minimum-phase `gamma` with `|Gamma|^2` equal to the trigonometric sum of `coeffs`.
#[pyfunction]
fn fejer_riesz(coeffs: Vec<f64>) -> PyResult<Vec<f64>> {
    minimax::fejer_riesz_factorize(&coeffs).py_err()
}

#[pyfunction]
fn autocorrelation(gamma: Vec<f64>) -> Vec<f64> {
    minimax::autocorrelation(&gamma)
}

fn oracle_config(window: usize, samples: usize, seed: u64) -> PyResult<OracleConfig> {
    let cfg = OracleConfig {
        window,
        samples,
        seed,
        ..OracleConfig::default()
    };
    cfg.validate().py_err()?;
    Ok(cfg)
}

/// Spectral solution against the finite-window projection; with
/// `samples > 0` also a seeded Monte Carlo estimate of the projection error.
#[pyfunction]
#[pyo3(signature = (spec, a, f, g, window=200, samples=0, seed=0, trunc=None))]
#[allow(clippy::too_many_arguments)]
fn oracle_check<'py>(
    py: Python<'py>,
    spec: &PySpec,
    a: Vec<f64>,
    f: &PyDensity,
    g: &PyDensity,
    window: usize,
    samples: usize,
    seed: u64,
    trunc: Option<&PyTrunc>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = oracle_config(window, samples, seed)?;
    let problem = ComparisonProblem::Interpolation(InterpolationProblem {
        spec: spec.0,
        a: weights(a)?,
        f: f.0.clone(),
        g: g.0.clone(),
        trunc: trunc_or_default(trunc),
    });
    let (cmp, mc) = py
        .detach(|| -> increment_interp::Result<_> {
            let cmp = oracle::compare_spectral_vs_oracle(&problem, &cfg)?;
            let mc = if samples > 0 {
                let s = &cmp.solution;
                Some(oracle::monte_carlo_check(s.spec, s.big_n, &s.b, &s.f, &s.g, &cfg)?)
            } else {
                None
            };
            Ok((cmp, mc))
        })
        .py_err()?;
    let d = PyDict::new(py);
    d.set_item("mse_spectral", cmp.mse_spectral)?;
    d.set_item("mse_oracle", cmp.mse_oracle)?;
    d.set_item("relative_gap", cmp.relative_gap)?;
    d.set_item("max_weight_gap", cmp.max_weight_gap)?;
    d.set_item("pass", cmp.pass)?;
    if let Some(e) = mc.and_then(|m| m.empirical) {
        d.set_item("empirical_mse", e.mse)?;
        d.set_item("std_error", e.std_error)?;
    }
    Ok(d)
}

#[pymodule]
fn incinterp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("IncInterpError", m.py().get_type::<IncInterpError>())?;
    m.add("PositivityError", m.py().get_type::<PositivityError>())?;
    m.add_class::<PySpec>()?;
    m.add_class::<PyTrunc>()?;
    m.add_class::<PyDensity>()?;
    m.add_class::<PySolution>()?;
    m.add_class::<PyClass>()?;
    m.add_class::<PyLeastFavorable>()?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(interpolate, m)?)?;
    m.add_function(wrap_pyfunction!(solve_increment, m)?)?;
    m.add_function(wrap_pyfunction!(filter, m)?)?;
    m.add_function(wrap_pyfunction!(white_noise_least_favorable, m)?)?;
    m.add_function(wrap_pyfunction!(solve_known_g, m)?)?;
    m.add_function(wrap_pyfunction!(solve_d0_fixed_point, m)?)?;
    m.add_function(wrap_pyfunction!(minimax_characteristic, m)?)?;
    m.add_function(wrap_pyfunction!(saddle_objective, m)?)?;
    m.add_function(wrap_pyfunction!(fejer_riesz, m)?)?;
    m.add_function(wrap_pyfunction!(autocorrelation, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_check, m)?)?;
    Ok(())
}
