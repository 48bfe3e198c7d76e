//! Python bindings. Norm orders are accepted as numbers, `float("inf")`, or the string `"inf"`.

use std::path::PathBuf;

use medianlab::bounds::{self, BoundSolution};
use medianlab::instances::{self, Distribution, Encoding, GeneratorSpec};
use medianlab::optfac::{self, EvalReport, SolverConfig};
use medianlab::verify::{self, CertificateReport, MechanismKind, SpConfig};
use medianlab::{CoordinateMedian, Instance, Mechanism, NormOrder, Point, PredictionMedian, TieBreak};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

fn err(e: medianlab::Error) -> PyErr {
    match e {
        medianlab::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait OrPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> OrPy<T> for medianlab::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(err)
    }
}

fn norm_order(q: &Bound<'_, PyAny>) -> PyResult<NormOrder> {
    if let Ok(s) = q.extract::<String>() {
        return s.parse().py_err();
    }
    let v: f64 = q.extract()?;
    if v == f64::INFINITY {
        Ok(NormOrder::INFINITY)
    } else {
        NormOrder::new(v).py_err()
    }
}

fn tie_break(s: &str) -> PyResult<TieBreak> {
    s.parse().py_err()
}

fn encoding(s: &str) -> PyResult<Encoding> {
    s.parse().py_err()
}

fn q_out(q: NormOrder) -> f64 {
    q.value()
}

#[pyclass(name = "Instance", module = "medianlab")]
struct PyInstance {
    inner: Instance,
}

#[pymethods]
impl PyInstance {
    #[new]
    #[pyo3(signature = (points, weights=None))]
    fn new(points: Vec<Vec<f64>>, weights: Option<Vec<f64>>) -> PyResult<Self> {
        let pts = points
            .into_iter()
            .map(Point::new)
            .collect::<medianlab::Result<Vec<_>>>()
            .py_err()?;
        let inner = match weights {
            Some(w) => Instance::with_weights(pts, w),
            None => Instance::new(pts),
        }
        .py_err()?;
        Ok(PyInstance { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyInstance {
            inner: instances::from_json(text).py_err()?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyInstance {
            inner: instances::load_instance(&path).py_err()?,
        })
    }

    #[pyo3(signature = (encoding="decimal"))]
    fn to_json(&self, encoding: &str) -> PyResult<String> {
        instances::to_json(&self.inner, self::encoding(encoding)?).py_err()
    }

    #[pyo3(signature = (path, encoding="decimal"))]
    fn save(&self, path: PathBuf, encoding: &str) -> PyResult<()> {
        instances::save_instance(&self.inner, &path, self::encoding(encoding)?).py_err()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn points(&self) -> Vec<Vec<f64>> {
        self.inner.points().iter().map(|p| p.coords().to_vec()).collect()
    }

    #[getter]
    fn weights(&self) -> Option<Vec<f64>> {
        self.inner.weights().map(<[f64]>::to_vec)
    }

    /// Generator metadata as a JSON string.
    #[getter]
    fn meta_json(&self) -> String {
        serde_json::to_string(self.inner.meta()).unwrap_or_default()
    }

    fn social_cost(&self, f: Vec<f64>, q: &Bound<'_, PyAny>) -> PyResult<f64> {
        medianlab::social_cost(&self.inner, &f, norm_order(q)?).py_err()
    }

    #[pyo3(signature = (tie_break="lower"))]
    fn median(&self, tie_break: &str) -> PyResult<Vec<f64>> {
        let m = medianlab::coordinate_median(&self.inner, self::tie_break(tie_break)?).py_err()?;
        Ok(m.into_inner())
    }

    #[pyo3(signature = (prediction, c, tie_break="lower"))]
    fn cmp_median(&self, prediction: Vec<f64>, c: f64, tie_break: &str) -> PyResult<Vec<f64>> {
        let m = medianlab::cmp_median(&self.inner, &prediction, c, self::tie_break(tie_break)?).py_err()?;
        Ok(m.into_inner())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(n={}, d={}, generator={:?})",
            self.inner.len(),
            self.inner.dim(),
            self.inner.meta().generator
        )
    }
}

#[pyclass(name = "BoundSolution", module = "medianlab", frozen, get_all)]
struct PyBoundSolution {
    q: f64,
    a_star: Option<f64>,
    delta_star: Option<f64>,
    lambda_star: f64,
    ub: f64,
    residual_u: f64,
    residual_uprime: f64,
    residual_a: f64,
}

impl From<BoundSolution> for PyBoundSolution {
    fn from(s: BoundSolution) -> Self {
        PyBoundSolution {
            q: q_out(s.q),
            a_star: s.a_star,
            delta_star: s.delta_star,
            lambda_star: s.lambda_star,
            ub: s.ub,
            residual_u: s.residual_u,
            residual_uprime: s.residual_uprime,
            residual_a: s.residual_a,
        }
    }
}

#[pymethods]
impl PyBoundSolution {
    fn __repr__(&self) -> String {
        format!(
            "BoundSolution(q={}, lambda_star={}, ub={})",
            self.q, self.lambda_star, self.ub
        )
    }
}

#[pyclass(name = "Certificate", module = "medianlab", frozen, get_all)]
struct PyCertificate {
    q: f64,
    lambda_: f64,
    delta: f64,
    z: f64,
    min_u: f64,
    argmin_a: f64,
    passed: bool,
}

impl From<CertificateReport> for PyCertificate {
    fn from(c: CertificateReport) -> Self {
        PyCertificate {
            q: c.q,
            lambda_: c.lambda,
            delta: c.delta,
            z: c.z,
            min_u: c.min_u,
            argmin_a: c.argmin_a,
            passed: c.pass,
        }
    }
}

#[pyclass(name = "EvalReport", module = "medianlab", frozen, get_all)]
struct PyEvalReport {
    mechanism: String,
    mechanism_point: Vec<f64>,
    optimal_point: Vec<f64>,
    sc_mechanism: f64,
    sc_optimal: f64,
    empirical_ratio: f64,
    theoretical_ub: f64,
    q: f64,
    solver_converged: bool,
}

impl From<EvalReport> for PyEvalReport {
    fn from(r: EvalReport) -> Self {
        PyEvalReport {
            mechanism: r.mechanism,
            mechanism_point: r.mechanism_point.into_inner(),
            optimal_point: r.optimal_point.into_inner(),
            sc_mechanism: r.sc_mechanism,
            sc_optimal: r.sc_optimal,
            empirical_ratio: r.empirical_ratio,
            theoretical_ub: r.theoretical_ub,
            q: q_out(r.q),
            solver_converged: r.solver_converged,
        }
    }
}

#[pymethods]
impl PyEvalReport {
    fn __repr__(&self) -> String {
        format!(
            "EvalReport(mechanism={:?}, ratio={})",
            self.mechanism, self.empirical_ratio
        )
    }
}

#[pyfunction]
fn lq_norm(x: Vec<f64>, q: &Bound<'_, PyAny>) -> PyResult<f64> {
    Ok(medianlab::lq_norm(&x, norm_order(q)?))
}

#[pyfunction]
fn lq_dist(x: Vec<f64>, y: Vec<f64>, q: &Bound<'_, PyAny>) -> PyResult<f64> {
    medianlab::lq_dist(&x, &y, norm_order(q)?).py_err()
}

#[pyfunction]
fn ub(q: &Bound<'_, PyAny>) -> PyResult<PyBoundSolution> {
    Ok(bounds::ub(norm_order(q)?).py_err()?.into())
}

#[pyfunction]
fn ub_curve(q_min: f64, q_max: f64, steps: usize) -> PyResult<Vec<PyBoundSolution>> {
    Ok(bounds::ub_curve(q_min, q_max, steps)
        .py_err()?
        .into_iter()
        .map(Into::into)
        .collect())
}

#[pyfunction]
fn lb_ratio(q: &Bound<'_, PyAny>, d: usize) -> PyResult<f64> {
    bounds::lb_ratio(norm_order(q)?, d).py_err()
}

#[pyfunction]
fn consistency_bound(c: f64) -> PyResult<f64> {
    bounds::consistency_bound(c).py_err()
}

#[pyfunction]
fn robustness_bound(c: f64) -> PyResult<f64> {
    bounds::robustness_bound(c).py_err()
}

#[pyfunction]
fn r_a(c: f64) -> PyResult<f64> {
    bounds::r_a(c).py_err()
}

#[pyfunction]
fn r_b(c: f64) -> PyResult<f64> {
    bounds::r_b(c).py_err()
}

#[pyfunction]
#[pyo3(signature = (q, lambda_=None, grid=10_000))]
fn certificate_check(q: &Bound<'_, PyAny>, lambda_: Option<f64>, grid: usize) -> PyResult<PyCertificate> {
    let q = norm_order(q)?;
    let lambda = match lambda_ {
        Some(l) => l,
        None => bounds::ub(q).py_err()?.lambda_star,
    };
    Ok(verify::certificate_check(q, lambda, grid).py_err()?.into())
}

#[pyfunction]
#[pyo3(signature = (q, d, n, seed=0))]
fn gen_lb_instance(q: &Bound<'_, PyAny>, d: usize, n: usize, seed: u64) -> PyResult<PyInstance> {
    Ok(PyInstance {
        inner: instances::gen_lb_instance(norm_order(q)?, d, n, seed).py_err()?,
    })
}

#[pyfunction]
fn gen_lb_weighted(q: &Bound<'_, PyAny>, d: usize) -> PyResult<PyInstance> {
    Ok(PyInstance {
        inner: instances::gen_lb_weighted(norm_order(q)?, d).py_err()?,
    })
}

#[pyfunction]
#[pyo3(signature = (d, n, seed=0))]
fn gen_linf_instance(d: usize, n: usize, seed: u64) -> PyResult<PyInstance> {
    Ok(PyInstance {
        inner: instances::gen_linf_instance(d, n, seed).py_err()?,
    })
}

#[pyfunction]
#[pyo3(signature = (d, n, seed=0, distribution="uniform"))]
fn gen_random_instance(d: usize, n: usize, seed: u64, distribution: &str) -> PyResult<PyInstance> {
    let dist: Distribution = distribution.parse().py_err()?;
    Ok(PyInstance {
        inner: instances::gen_random_instance(&GeneratorSpec::random(d, n, seed, dist)).py_err()?,
    })
}

fn solver(restarts: usize, seed: u64) -> PyResult<SolverConfig> {
    let cfg = SolverConfig {
        restarts,
        ..SolverConfig::default()
    }
    .with_seed(seed);
    cfg.validate().py_err()?;
    Ok(cfg)
}

/// Returns `(point, cost, converged)`.
#[pyfunction]
#[pyo3(signature = (instance, q, restarts=5, seed=0))]
fn optimal_facility(
    py: Python<'_>,
    instance: &PyInstance,
    q: &Bound<'_, PyAny>,
    restarts: usize,
    seed: u64,
) -> PyResult<(Vec<f64>, f64, bool)> {
    let q = norm_order(q)?;
    let cfg = solver(restarts, seed)?;
    let inst = &instance.inner;
    let res = py.detach(|| optfac::optimal_facility(inst, q, &cfg)).py_err()?;
    Ok((res.point.into_inner(), res.cost, res.converged))
}

/// Median (or CMP when `prediction` and `c` are given) against the numerical optimum.
#[pyfunction]
#[pyo3(signature = (instance, q, prediction=None, c=None, tie_break="lower", restarts=5, seed=0))]
#[allow(clippy::too_many_arguments)]
fn evaluate(
    py: Python<'_>,
    instance: &PyInstance,
    q: &Bound<'_, PyAny>,
    prediction: Option<Vec<f64>>,
    c: Option<f64>,
    tie_break: &str,
    restarts: usize,
    seed: u64,
) -> PyResult<PyEvalReport> {
    let q = norm_order(q)?;
    let tb = self::tie_break(tie_break)?;
    let cfg = solver(restarts, seed)?;
    let mech: Box<dyn Mechanism> = match (prediction, c) {
        (Some(p), Some(c)) => Box::new(PredictionMedian::new(Point::new(p).py_err()?, c, tb).py_err()?),
        (None, None) => Box::new(CoordinateMedian { tie_break: tb }),
        _ => return Err(PyValueError::new_err("prediction and c must be given together")),
    };
    let inst = &instance.inner;
    let rep = py
        .detach(|| optfac::evaluate_mechanism(inst, q, &cfg, mech.as_ref()))
        .py_err()?;
    Ok(rep.into())
}

/// Returns `(instance, best_ratio, proxy_ratio)`.
#[pyfunction]
#[pyo3(signature = (q, d, n, restarts=20, seed=0))]
fn adversarial_search(
    py: Python<'_>,
    q: &Bound<'_, PyAny>,
    d: usize,
    n: usize,
    restarts: usize,
    seed: u64,
) -> PyResult<(PyInstance, f64, f64)> {
    let q = norm_order(q)?;
    let cfg = SolverConfig::default().with_seed(seed);
    let res = py
        .detach(|| verify::adversarial_search(q, d, n, restarts, seed, &cfg))
        .py_err()?;
    Ok((
        PyInstance {
            inner: res.best_instance,
        },
        res.best_ratio,
        res.proxy_ratio,
    ))
}

/// Random unilateral deviations; returns `(violations, worst_delta)`.
#[pyfunction]
#[pyo3(signature = (mechanism="median", q=None, trials=10_000, c=0.5, tie_break="lower", seed=0))]
fn strategyproofness(
    py: Python<'_>,
    mechanism: &str,
    q: Option<&Bound<'_, PyAny>>,
    trials: usize,
    c: f64,
    tie_break: &str,
    seed: u64,
) -> PyResult<(usize, f64)> {
    let tb = self::tie_break(tie_break)?;
    let kind = match mechanism {
        "median" => MechanismKind::Median { tie_break: tb },
        "cmp" => MechanismKind::Cmp { c, tie_break: tb },
        "mean" => MechanismKind::Mean,
        other => return Err(PyValueError::new_err(format!("unknown mechanism '{other}'"))),
    };
    let q = match q {
        Some(q) => norm_order(q)?,
        None => NormOrder::TWO,
    };
    let cfg = SpConfig {
        trials,
        seed,
        q,
        ..SpConfig::default()
    };
    let rep = py.detach(|| verify::strategyproofness_suite(&kind, &cfg)).py_err()?;
    Ok((rep.violations, rep.worst_delta))
}

#[pymodule]
#[pyo3(name = "medianlab")]
fn medianlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PyBoundSolution>()?;
    m.add_class::<PyCertificate>()?;
    m.add_class::<PyEvalReport>()?;
    m.add_function(wrap_pyfunction!(lq_norm, m)?)?;
    m.add_function(wrap_pyfunction!(lq_dist, m)?)?;
    m.add_function(wrap_pyfunction!(ub, m)?)?;
    m.add_function(wrap_pyfunction!(ub_curve, m)?)?;
    m.add_function(wrap_pyfunction!(lb_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(consistency_bound, m)?)?;
    m.add_function(wrap_pyfunction!(robustness_bound, m)?)?;
    m.add_function(wrap_pyfunction!(r_a, m)?)?;
    m.add_function(wrap_pyfunction!(r_b, m)?)?;
    m.add_function(wrap_pyfunction!(certificate_check, m)?)?;
    m.add_function(wrap_pyfunction!(gen_lb_instance, m)?)?;
    m.add_function(wrap_pyfunction!(gen_lb_weighted, m)?)?;
    m.add_function(wrap_pyfunction!(gen_linf_instance, m)?)?;
    m.add_function(wrap_pyfunction!(gen_random_instance, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_facility, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(adversarial_search, m)?)?;
    m.add_function(wrap_pyfunction!(strategyproofness, m)?)?;
    Ok(())
}
