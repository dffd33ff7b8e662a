//! Python bindings: kernels with derivatives, samplers, and the
//! config-driven experiment pipeline.

use kgedmd::eig::solve_general;
use kgedmd::gram::{GramSystem, SampleSet, SampleSource};
use kgedmd::kernels::KernelSpec;
use kgedmd::operators::SchrodingerSpec;
use kgedmd::pipeline::{run_experiment, ExperimentConfig};
use kgedmd::sampling;
use ndarray::Array2;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use std::sync::Arc;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_points(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    if rows.is_empty() {
        return Err(PyValueError::new_err("need at least one point"));
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(PyValueError::new_err("ragged point list"));
    }
    let mut a = Array2::zeros((rows.len(), d));
    for (i, r) in rows.iter().enumerate() {
        for (j, v) in r.iter().enumerate() {
            a[(i, j)] = *v;
        }
    }
    Ok(a)
}

/// A symmetric positive definite kernel with analytic derivatives.
#[pyclass(name = "Kernel")]
struct PyKernel {
    inner: KernelSpec,
}

#[pymethods]
impl PyKernel {
    /// Gaussian kernel exp(-||x-y||^2 / (2 bandwidth^2)).
    #[staticmethod]
    fn gaussian(bandwidth: f64, dim: usize) -> PyResult<Self> {
        Ok(PyKernel {
            inner: KernelSpec::gaussian(bandwidth, dim).map_err(err)?,
        })
    }

    /// Polynomial kernel (offset + x^T y)^degree.
    #[staticmethod]
    fn polynomial(degree: u32, offset: f64, dim: usize) -> PyResult<Self> {
        Ok(PyKernel {
            inner: KernelSpec::polynomial(degree, offset, dim).map_err(err)?,
        })
    }

    fn eval(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        self.inner.eval(&x, &y).map_err(err)
    }

    /// Gradient with respect to the first argument.
    fn grad1(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.grad1(&x, &y).map_err(err)
    }

    /// Hessian with respect to the first argument, as nested lists.
    fn hess1(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let h = self.inner.hess1(&x, &y).map_err(err)?;
        Ok(h.outer_iter().map(|r| r.to_vec()).collect())
    }

    /// (max gradient error, max Hessian error) against central finite
    /// differences with the given step.
    fn fd_validate(&self, x: Vec<f64>, y: Vec<f64>, h: f64) -> PyResult<(f64, f64)> {
        self.inner.fd_validate(&x, &y, h).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// The standard Gram matrix [G0]_{mr} = k(x_m, x_r) as nested lists.
#[pyfunction]
fn gram_g0(kernel: &PyKernel, points: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let samples =
        SampleSet::from_points(to_points(points)?, SampleSource::Iid).map_err(err)?;
    let g0 = kgedmd::gram::assemble_g0(&kernel.inner, &samples).map_err(err)?;
    Ok(g0.outer_iter().map(|r| r.to_vec()).collect())
}

/// Uniform samples in a box; returns the points as nested lists.
#[pyfunction]
fn sample_box(lo: Vec<f64>, hi: Vec<f64>, m: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    let set = sampling::sample_box(&lo, &hi, m, seed).map_err(err)?;
    Ok(set.points().outer_iter().map(|r| r.to_vec()).collect())
}

/// Uniform samples in a d-ball.
#[pyfunction]
fn sample_ball(radius: f64, m: usize, dim: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    let set = sampling::sample_ball(radius, m, dim, seed).map_err(err)?;
    Ok(set.points().outer_iter().map(|r| r.to_vec()).collect())
}

/// Swiss-roll cloud; returns (points, intrinsic (t, h) pairs).
#[pyfunction]
fn swiss_roll(
    m: usize,
    noise: f64,
    seed: u64,
) -> PyResult<(Vec<Vec<f64>>, Vec<(f64, f64)>)> {
    let (set, intrinsic) = sampling::swiss_roll(m, noise, seed).map_err(err)?;
    Ok((
        set.points().outer_iter().map(|r| r.to_vec()).collect(),
        intrinsic,
    ))
}

/// Solution of an eigenvalue run: eigenvalues as (re, im) pairs plus the
/// eigenfunction values at the samples.
#[pyclass(name = "Solution")]
struct PySolution {
    #[pyo3(get)]
    eigenvalues: Vec<(f64, f64)>,
    #[pyo3(get)]
    residuals: Vec<f64>,
    #[pyo3(get)]
    energies: Option<Vec<f64>>,
    inner: kgedmd::eig::EigenSolution,
}

#[pymethods]
impl PySolution {
    /// phi_index(y) = sum_m u_m k(x_m, y); returns (re, im).
    fn eval(&self, index: usize, y: Vec<f64>) -> PyResult<(f64, f64)> {
        let v = self.inner.eval_eigenfunction(index, &y).map_err(err)?;
        Ok((v.re, v.im))
    }

    /// Values of eigenfunction `index` at the sample points (real parts).
    fn values_at_samples(&self, index: usize) -> PyResult<Vec<f64>> {
        Ok(self
            .inner
            .values_at_samples(index)
            .map_err(err)?
            .iter()
            .map(|v| v.re)
            .collect())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Solves the Schrödinger eigenproblem `(-1/2 Laplace + W) psi = E psi`
/// for a quadratic-potential demo system over the given points.
#[pyfunction]
fn solve_qho(points: Vec<Vec<f64>>, bandwidth: f64, eps: f64, n: usize) -> PyResult<PySolution> {
    let pts = to_points(points)?;
    let dim = pts.ncols();
    let mut samples = SampleSet::from_points(pts, SampleSource::Iid).map_err(err)?;
    let spec = SchrodingerSpec::new(dim, 1.0, 1.0, Arc::new(|x: &[f64]| {
        0.5 * x.iter().map(|v| v * v).sum::<f64>()
    }))
    .map_err(err)?;
    samples
        .cache_t_coefficients(&spec.coefficients())
        .map_err(err)?;
    let kernel = KernelSpec::gaussian(bandwidth, dim).map_err(err)?;
    let system = GramSystem::general(kernel, Arc::new(samples)).map_err(err)?;
    let sol = solve_general(&system, eps, n).map_err(err)?;
    let residuals = (0..sol.len())
        .map(|i| kgedmd::eig::rayleigh_residual(&sol, i, &system))
        .collect::<kgedmd::Result<_>>()
        .map_err(err)?;
    Ok(PySolution {
        eigenvalues: sol.eigenvalues.iter().map(|v| (v.re, v.im)).collect(),
        residuals,
        energies: None,
        inner: sol,
    })
}

/// Runs a named drift-diffusion system (ou | quadwell) from an equilibrated
/// trajectory in symmetric mode.
#[pyfunction]
fn solve_reversible(
    system: &str,
    m: usize,
    bandwidth: f64,
    eps: f64,
    n: usize,
    seed: u64,
) -> PyResult<PySolution> {
    let mut cfg = ExperimentConfig::from_str(&format!(
        "[experiment]\nsystem = {system}\nmode = symmetric\nn_eigenpairs = {n}\nepsilon = {eps:e}\nseed = {seed}\n[kernel]\nbandwidth = {bandwidth}\n[sampling]\nm = {m}\n"
    ))
    .map_err(err)?;
    cfg.output_dir = None;
    let out = run_experiment(&cfg).map_err(err)?;
    Ok(PySolution {
        eigenvalues: out
            .report
            .eigenvalues
            .iter()
            .map(|v| (v.re, v.im))
            .collect(),
        residuals: out.report.residuals.clone(),
        energies: out.report.energies.clone(),
        inner: out.solution,
    })
}

/// Runs a full experiment from a config file; returns the report as a JSON
/// string (artifacts are written when the config sets an output directory).
#[pyfunction]
fn run(config_path: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_path(std::path::Path::new(config_path)).map_err(err)?;
    let out = run_experiment(&cfg).map_err(err)?;
    serde_json_string(&out.report).map_err(err)
}

fn serde_json_string<T: serde::Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string_pretty(v).map_err(|e| e.to_string())
}

#[pymodule]
fn kgedmd_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKernel>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(gram_g0, m)?)?;
    m.add_function(wrap_pyfunction!(sample_box, m)?)?;
    m.add_function(wrap_pyfunction!(sample_ball, m)?)?;
    m.add_function(wrap_pyfunction!(swiss_roll, m)?)?;
    m.add_function(wrap_pyfunction!(solve_qho, m)?)?;
    m.add_function(wrap_pyfunction!(solve_reversible, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
