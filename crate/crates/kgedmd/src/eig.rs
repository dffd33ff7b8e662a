//! Regularized generalized eigenproblems for the Gram pencils and
//! evaluation of the resulting eigenfunctions.
//!
//! Both solvers work in the eigenbasis of the right-hand Gram matrix.
//! With the Tikhonov shift `s = eps tr(RHS)/M`, the pencil
//! `LHS u = lambda (RHS + s I) u` is projected onto the directions whose
//! RHS eigenvalue exceeds `s`; directions below the shift carry no
//! resolvable signal for a kernel Gram matrix and only produce spurious
//! near-zero eigenvalues. On the retained subspace the problem reduces to
//! a standard dense eigenproblem, nonsymmetric in general mode (complex
//! eigenvalues allowed) and symmetric in symmetric mode (real spectrum).
//!
//! Eigenfunctions are represented by their coefficient vectors `u`:
//! `phi(y) = sum_m u_m k(x_m, y)`. Coefficients are normalized to unit
//! empirical L2 norm, `(1/M) ||G0 u||^2 = 1`, with the phase fixed so the
//! largest-magnitude entry of `G0 u` is positive real.

use crate::error::{KgError, Result};
use crate::gram::{GramMode, GramSystem};
use crate::kernels::KernelSpec;
use ndarray::{Array1, Array2};
use ndarray_linalg::{c64, Eig};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    General,
    Symmetric,
}

/// Ordered eigenpairs of a Gram pencil together with everything needed to
/// evaluate the eigenfunctions.
#[derive(Clone)]
pub struct EigenSolution {
    /// Ascending by real part, ties broken by imaginary part. Imaginary
    /// parts are identically zero in symmetric mode.
    pub eigenvalues: Vec<c64>,
    /// Normalized coefficient vectors, one per eigenvalue.
    pub coefficients: Vec<Array1<c64>>,
    /// Eigenfunction values at the samples, `G0 u`.
    pub sample_values: Vec<Array1<c64>>,
    pub eps: f64,
    pub mode: SolveMode,
    pub kernel: KernelSpec,
    pub samples: Arc<crate::gram::SampleSet>,
}

impl EigenSolution {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Real parts of the eigenvalues.
    pub fn real_eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|v| v.re).collect()
    }

    /// Evaluates eigenfunction `index` at a point:
    /// `phi(y) = sum_m u_m k(x_m, y)`.
    pub fn eval_eigenfunction(&self, index: usize, y: &[f64]) -> Result<c64> {
        let u = self
            .coefficients
            .get(index)
            .ok_or_else(|| KgError::InvalidParameter(format!("no eigenpair {index}")))?;
        if y.len() != self.kernel.dim() {
            return Err(KgError::DimensionMismatch {
                expected: self.kernel.dim(),
                got: y.len(),
            });
        }
        let mut acc = c64::new(0.0, 0.0);
        for (m, um) in u.iter().enumerate() {
            let xm = self.samples.point(m);
            let k = self.kernel.eval_raw(xm.to_slice().expect("row-major"), y);
            acc += um * k;
        }
        Ok(acc)
    }

    /// Real part of `eval_eigenfunction`, for symmetric-mode solutions.
    pub fn eval_real(&self, index: usize, y: &[f64]) -> Result<f64> {
        Ok(self.eval_eigenfunction(index, y)?.re)
    }

    /// Eigenfunction values at the sample points (precomputed `G0 u`).
    pub fn values_at_samples(&self, index: usize) -> Result<&Array1<c64>> {
        self.sample_values
            .get(index)
            .ok_or_else(|| KgError::InvalidParameter(format!("no eigenpair {index}")))
    }
}

/// Relative pencil residual `||(LHS - lambda RHS) u|| / ||RHS u||` for a
/// stored eigenpair, including the regularization shift actually used.
pub fn rayleigh_residual(
    sol: &EigenSolution,
    index: usize,
    system: &GramSystem,
) -> Result<f64> {
    let u = sol
        .coefficients
        .get(index)
        .ok_or_else(|| KgError::InvalidParameter(format!("no eigenpair {index}")))?;
    let lambda = sol.eigenvalues[index];
    let (lhs, rhs_base) = system.pencil()?;
    let m = rhs_base.nrows() as f64;
    let shift = sol.eps * rhs_base.diag().sum() / m;
    let mut rhs = rhs_base;
    for i in 0..rhs.nrows() {
        rhs[(i, i)] += shift;
    }
    let lu = complex_matvec(&lhs, u);
    let ru = complex_matvec(&rhs, u);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..lu.len() {
        let r = lu[i] - lambda * ru[i];
        num += r.norm_sqr();
        den += ru[i].norm_sqr();
    }
    if den == 0.0 {
        return Err(KgError::Solver("RHS annihilates eigenvector".into()));
    }
    Ok((num / den).sqrt())
}

/// `mat v` for a real matrix and complex vector, via two real products.
fn complex_matvec(mat: &Array2<f64>, v: &Array1<c64>) -> Array1<c64> {
    let re = mat.dot(&v.mapv(|z| z.re));
    let im = mat.dot(&v.mapv(|z| z.im));
    Array1::from_shape_fn(re.len(), |i| c64::new(re[i], im[i]))
}

/// Divide-and-conquer symmetric eigendecomposition (LAPACK `dsyevd`),
/// eigenvalues ascending, eigenvectors in columns.
pub(crate) fn eigh_dc(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(KgError::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    // dsyevd works in place on column-major storage; a symmetric input
    // makes the transpose copy free of layout concerns.
    let mut buf: Vec<f64> = Vec::with_capacity(n * n);
    for c in 0..n {
        for r in 0..n {
            buf.push(a[(r, c)]);
        }
    }
    let mut w = vec![0.0_f64; n];
    let jobz = b'V' as std::ffi::c_char;
    let uplo = b'L' as std::ffi::c_char;
    let n_i = n as i32;
    let mut info = 0_i32;

    // workspace query
    let mut work_q = [0.0_f64];
    let mut iwork_q = [0_i32];
    unsafe {
        lapack_sys::dsyevd_(
            &jobz,
            &uplo,
            &n_i,
            buf.as_mut_ptr(),
            &n_i,
            w.as_mut_ptr(),
            work_q.as_mut_ptr(),
            &(-1_i32),
            iwork_q.as_mut_ptr(),
            &(-1_i32),
            &mut info,
        );
    }
    if info != 0 {
        return Err(KgError::Solver(format!("dsyevd workspace query: info = {info}")));
    }
    let lwork = work_q[0] as usize;
    let liwork = iwork_q[0] as usize;
    let mut work = vec![0.0_f64; lwork.max(1)];
    let mut iwork = vec![0_i32; liwork.max(1)];
    unsafe {
        lapack_sys::dsyevd_(
            &jobz,
            &uplo,
            &n_i,
            buf.as_mut_ptr(),
            &n_i,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &(lwork as i32),
            iwork.as_mut_ptr(),
            &(liwork as i32),
            &mut info,
        );
    }
    if info != 0 {
        return Err(KgError::Solver(format!("dsyevd failed: info = {info}")));
    }
    // buf is column-major: eigenvector j occupies buf[j*n .. (j+1)*n].
    let vecs_t = Array2::from_shape_vec((n, n), buf).expect("shape");
    Ok((Array1::from_vec(w), vecs_t.reversed_axes()))
}

/// Eigenbasis of a symmetric RHS Gram matrix with the Tikhonov shift
/// applied: returns the retained basis `Q` (columns) and the shifted
/// eigenvalues `d_i = sigma_i + shift` for directions with
/// `sigma_i > shift`.
struct RhsBasis {
    q: Array2<f64>,
    d: Array1<f64>,
}

fn rhs_eigenbasis(rhs: &Array2<f64>, eps: f64) -> Result<RhsBasis> {
    let m = rhs.nrows();
    let shift = eps * rhs.diag().sum() / m as f64;
    let (vals, vecs) = eigh_dc(rhs)?;
    let vmax = vals[m - 1];
    if vmax <= 0.0 {
        return Err(KgError::Solver("RHS Gram matrix has no positive spectrum".into()));
    }
    if eps == 0.0 && vals[0] <= 1e-12 * vmax {
        return Err(KgError::Solver(
            "right-hand Gram matrix is numerically singular at eps = 0; \
             use a regularization eps > 0"
                .into(),
        ));
    }
    let keep: Vec<usize> = (0..m).filter(|&i| vals[i] > shift).collect();
    if keep.is_empty() {
        return Err(KgError::Solver(
            "regularization shift exceeds the whole Gram spectrum".into(),
        ));
    }
    let mut q = Array2::zeros((m, keep.len()));
    let mut d = Array1::zeros(keep.len());
    for (col, &i) in keep.iter().enumerate() {
        d[col] = vals[i] + shift;
        for row in 0..m {
            q[(row, col)] = vecs[(row, i)];
        }
    }
    Ok(RhsBasis { q, d })
}

/// Projects `mat` into the scaled basis: `D^{-1/2} Q^T mat Q D^{-1/2}`.
fn project(mat: &Array2<f64>, basis: &RhsBasis) -> Array2<f64> {
    let mut qt_mat_q = basis.q.t().dot(mat).dot(&basis.q);
    let scale: Vec<f64> = basis.d.iter().map(|v| 1.0 / v.sqrt()).collect();
    for ((i, j), v) in qt_mat_q.indexed_iter_mut() {
        *v *= scale[i] * scale[j];
    }
    qt_mat_q
}

/// Maps reduced-space vectors back: `u = Q D^{-1/2} z`.
fn lift(basis: &RhsBasis, z_cols: &[Array1<c64>]) -> Vec<Array1<c64>> {
    let k = basis.d.len();
    let scale: Vec<f64> = basis.d.iter().map(|v| 1.0 / v.sqrt()).collect();
    z_cols
        .iter()
        .map(|z| {
            let re: Array1<f64> =
                Array1::from_shape_fn(k, |i| z[i].re * scale[i]);
            let im: Array1<f64> =
                Array1::from_shape_fn(k, |i| z[i].im * scale[i]);
            let ure = basis.q.dot(&re);
            let uim = basis.q.dot(&im);
            Array1::from_shape_fn(ure.len(), |i| c64::new(ure[i], uim[i]))
        })
        .collect()
}

/// Sorts eigenpairs ascending by real part (then imaginary part) and
/// returns the first `n`.
fn select_smallest(
    vals: Array1<c64>,
    vecs: Array2<c64>,
    n: usize,
) -> (Vec<c64>, Vec<Array1<c64>>) {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| {
        (vals[a].re, vals[a].im)
            .partial_cmp(&(vals[b].re, vals[b].im))
            .expect("finite eigenvalues")
    });
    idx.truncate(n);
    let values = idx.iter().map(|&i| vals[i]).collect();
    let vectors = idx.iter().map(|&i| vecs.column(i).to_owned()).collect();
    (values, vectors)
}

/// Normalizes `u` so that `(1/M) ||G0 u||^2 = 1` and the largest-magnitude
/// entry of `G0 u` is positive real. Returns the normalized `u` and `G0 u`.
fn normalize_coefficients(
    g0: &Array2<f64>,
    u: &Array1<c64>,
) -> Result<(Array1<c64>, Array1<c64>)> {
    let m = g0.nrows();
    let g0u = complex_matvec(g0, u);
    let norm = g0u.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(KgError::Solver(
            "eigenvector lies in the numerical null space of G0".into(),
        ));
    }
    let scale = (m as f64).sqrt() / norm;
    let pivot = g0u
        .iter()
        .cloned()
        .max_by(|a, b| a.norm().partial_cmp(&b.norm()).expect("finite"))
        .expect("nonempty");
    let phase = pivot / pivot.norm();
    let factor = scale / phase;
    Ok((u.mapv(|v| v * factor), g0u.mapv(|v| v * factor)))
}

fn finalize(
    values: Vec<c64>,
    vectors: Vec<Array1<c64>>,
    g0: &Array2<f64>,
    eps: f64,
    mode: SolveMode,
    kernel: &KernelSpec,
    samples: &Arc<crate::gram::SampleSet>,
) -> Result<EigenSolution> {
    let mut coefficients = Vec::with_capacity(vectors.len());
    let mut sample_values = Vec::with_capacity(vectors.len());
    for u in vectors {
        let (un, g0u) = normalize_coefficients(g0, &u)?;
        coefficients.push(un);
        sample_values.push(g0u);
    }
    Ok(EigenSolution {
        eigenvalues: values,
        coefficients,
        sample_values,
        eps,
        mode,
        kernel: kernel.clone(),
        samples: Arc::clone(samples),
    })
}

/// Solves `G2 u = lambda (G0 + eps tr(G0)/M I) u` for the `n` eigenpairs
/// with smallest real part. Eigenvalues may be complex.
pub fn solve_general(system: &GramSystem, eps: f64, n: usize) -> Result<EigenSolution> {
    let g2 = match &system.mode {
        GramMode::General { g2 } => g2,
        GramMode::Symmetric { .. } => {
            return Err(KgError::InvalidParameter(
                "solve_general requires a general-mode Gram system".into(),
            ))
        }
    };
    check_args(system, eps, n)?;
    let basis = rhs_eigenbasis(&system.g0, eps)?;
    let b = project(g2, &basis);
    let (vals, vecs) = b
        .eig()
        .map_err(|e| KgError::Solver(format!("dense eigensolver failed: {e}")))?;
    let (values, z_cols) = select_smallest(vals, vecs, n.min(basis.d.len()));
    let vectors = lift(&basis, &z_cols);
    finalize(
        values,
        vectors,
        &system.g0,
        eps,
        SolveMode::General,
        &system.kernel,
        &system.samples,
    )
}

/// Solves the symmetric pencil
/// `LHS u = lambda (G0 G0 + eps tr(G0 G0)/M I) u`
/// for the `n` smallest eigenpairs; the spectrum is real.
pub fn solve_symmetric(system: &GramSystem, eps: f64, n: usize) -> Result<EigenSolution> {
    if !matches!(system.mode, GramMode::Symmetric { .. }) {
        return Err(KgError::InvalidParameter(
            "solve_symmetric requires a symmetric-mode Gram system".into(),
        ));
    }
    check_args(system, eps, n)?;
    let (lhs, rhs) = system.pencil()?;
    let basis = rhs_eigenbasis(&rhs, eps)?;
    let c = project(&lhs, &basis);
    let ct = c.t().to_owned();
    let c_sym = (c + ct) * 0.5;
    let (vals, vecs) = eigh_dc(&c_sym)?;
    let take = n.min(basis.d.len());
    let z_cols: Vec<Array1<c64>> = (0..take)
        .map(|j| vecs.column(j).mapv(|v| c64::new(v, 0.0)))
        .collect();
    let values: Vec<c64> = vals.iter().take(take).map(|&v| c64::new(v, 0.0)).collect();
    let vectors = lift(&basis, &z_cols);
    finalize(
        values,
        vectors,
        &system.g0,
        eps,
        SolveMode::Symmetric,
        &system.kernel,
        &system.samples,
    )
}

/// Rank-truncated solve of `G2 u = lambda G0 u` without a Tikhonov shift:
/// directions of `G0` with eigenvalue below `rank_tol * max` are discarded
/// and the pencil is solved on the remaining subspace. Returns all retained
/// eigenpairs (at most the numerical rank of `G0`), sorted ascending. This
/// route reproduces explicit-dictionary gEDMD exactly for kernels with a
/// finite-dimensional feature space, such as the polynomial kernel.
pub fn solve_general_truncated(
    system: &GramSystem,
    rank_tol: f64,
    n: usize,
) -> Result<EigenSolution> {
    let g2 = match &system.mode {
        GramMode::General { g2 } => g2,
        GramMode::Symmetric { .. } => {
            return Err(KgError::InvalidParameter(
                "solve_general_truncated requires a general-mode system".into(),
            ))
        }
    };
    let (vals, vecs) = eigh_dc(&system.g0)?;
    let m = system.size();
    let vmax = vals[m - 1];
    let keep: Vec<usize> = (0..m).filter(|&i| vals[i] > rank_tol * vmax).collect();
    if keep.is_empty() {
        return Err(KgError::Solver("G0 has numerical rank zero".into()));
    }
    let mut q = Array2::zeros((m, keep.len()));
    let mut d = Array1::zeros(keep.len());
    for (col, &i) in keep.iter().enumerate() {
        d[col] = vals[i];
        for row in 0..m {
            q[(row, col)] = vecs[(row, i)];
        }
    }
    let basis = RhsBasis { q, d };
    let b = project(g2, &basis);
    let (bvals, bvecs) = b
        .eig()
        .map_err(|e| KgError::Solver(format!("dense eigensolver failed: {e}")))?;
    let (values, z_cols) = select_smallest(bvals, bvecs, n.min(basis.d.len()));
    let vectors = lift(&basis, &z_cols);
    finalize(
        values,
        vectors,
        &system.g0,
        0.0,
        SolveMode::General,
        &system.kernel,
        &system.samples,
    )
}

fn check_args(system: &GramSystem, eps: f64, n: usize) -> Result<()> {
    if !(eps >= 0.0) {
        return Err(KgError::InvalidParameter(format!(
            "regularization must be nonnegative, got {eps}"
        )));
    }
    if n == 0 || n > system.size() {
        return Err(KgError::InvalidParameter(format!(
            "requested {n} eigenpairs from a system of size {}",
            system.size()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gram::{SampleSet, SampleSource};
    use crate::operators::{constant_matrix, generator_as_t, zero_scalar, GeneratorSpec};
    use ndarray::{array, Array2};
    use std::sync::Arc;

    fn grid_samples(n: usize, lo: f64, hi: f64) -> SampleSet {
        let pts = Array2::from_shape_fn((n, 1), |(i, _)| {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        });
        SampleSet::from_points(pts, SampleSource::Grid).unwrap()
    }

    fn ou_general_system(n: usize, lo: f64, hi: f64, bandwidth: f64) -> GramSystem {
        let mut samples = grid_samples(n, lo, hi);
        let gen = GeneratorSpec::new(
            1,
            Arc::new(|x: &[f64]| vec![-x[0]]),
            constant_matrix(array![[1.0]]),
        );
        samples.cache_t_coefficients(&generator_as_t(&gen)).unwrap();
        let kernel = KernelSpec::gaussian(bandwidth, 1).unwrap();
        GramSystem::general(kernel, Arc::new(samples)).unwrap()
    }

    #[test]
    fn eigh_dc_matches_reference() {
        use ndarray_linalg::{Eigh, UPLO};
        let a = array![
            [2.0, 1.0, 0.0, 0.3],
            [1.0, 3.0, 0.5, 0.0],
            [0.0, 0.5, 1.0, 0.2],
            [0.3, 0.0, 0.2, 4.0]
        ];
        let (w1, v1) = eigh_dc(&a).unwrap();
        let (w2, v2) = a.eigh(UPLO::Lower).unwrap();
        for i in 0..4 {
            assert!((w1[i] - w2[i]).abs() < 1e-12);
            // columns may differ by sign
            let dot: f64 = (0..4).map(|r| v1[(r, i)] * v2[(r, i)]).sum();
            assert!((dot.abs() - 1.0).abs() < 1e-10, "column {i}: dot {dot}");
        }
    }

    #[test]
    fn identity_pencil_all_ones() {
        // W = 1, a and c zero makes G2 = G0, so at eps = 0 every eigenvalue
        // of the (well-conditioned) pencil is 1.
        let kernel = KernelSpec::gaussian(0.4, 1).unwrap();
        let mut samples = grid_samples(10, -4.5, 4.5);
        samples.coeffs.a = Some(ndarray::Array3::zeros((10, 1, 1)));
        samples.coeffs.c = Some(Array2::<f64>::zeros((10, 1)));
        samples.coeffs.w = Some(ndarray::Array1::ones(10));
        let system = GramSystem::general(kernel, Arc::new(samples)).unwrap();
        let sol = solve_general(&system, 0.0, 5).unwrap();
        for v in &sol.eigenvalues {
            assert!((v.re - 1.0).abs() < 1e-8 && v.im.abs() < 1e-8, "{v}");
        }
    }

    #[test]
    fn ou_general_mode_spectrum() {
        // T = -L for the OU process has eigenvalues 0, 1, 2, ...
        let system = ou_general_system(200, -4.0, 4.0, 1.0);
        let sol = solve_general(&system, 1e-8, 4).unwrap();
        let vals = sol.real_eigenvalues();
        assert!(vals[0].abs() < 0.02, "lambda0 = {}", vals[0]);
        assert!((vals[1] - 1.0).abs() < 0.02, "lambda1 = {}", vals[1]);
        assert!((vals[2] - 2.0).abs() < 0.05, "lambda2 = {}", vals[2]);
        for v in &sol.eigenvalues {
            assert!(v.im.abs() < 1e-6);
        }
    }

    #[test]
    fn ou_first_excited_is_linear() {
        let system = ou_general_system(200, -4.0, 4.0, 1.0);
        let sol = solve_general(&system, 1e-8, 2).unwrap();
        // correlation of phi_1 with x over the samples
        let phi = sol.values_at_samples(1).unwrap();
        let xs = system.samples.points().column(0).to_owned();
        let n = xs.len() as f64;
        let mx = xs.sum() / n;
        let mp = phi.iter().map(|v| v.re).sum::<f64>() / n;
        let mut cov = 0.0;
        let mut vx = 0.0;
        let mut vp = 0.0;
        for (x, p) in xs.iter().zip(phi.iter()) {
            cov += (x - mx) * (p.re - mp);
            vx += (x - mx) * (x - mx);
            vp += (p.re - mp) * (p.re - mp);
        }
        let corr = (cov / (vx.sqrt() * vp.sqrt())).abs();
        assert!(corr > 0.999, "correlation with x: {corr}");
    }

    #[test]
    fn eval_eigenfunction_single_coefficient() {
        let kernel = KernelSpec::gaussian(1.0, 1).unwrap();
        let samples = Arc::new(grid_samples(5, -1.0, 1.0));
        let mut u = Array1::from_elem(5, c64::new(0.0, 0.0));
        u[2] = c64::new(1.0, 0.0);
        let sol = EigenSolution {
            eigenvalues: vec![c64::new(0.0, 0.0)],
            coefficients: vec![u],
            sample_values: vec![Array1::from_elem(5, c64::new(0.0, 0.0))],
            eps: 0.0,
            mode: SolveMode::General,
            kernel: kernel.clone(),
            samples: Arc::clone(&samples),
        };
        let y = [0.3];
        let expected = kernel
            .eval(samples.point(2).to_slice().unwrap(), &y)
            .unwrap();
        let got = sol.eval_eigenfunction(0, &y).unwrap();
        assert!((got.re - expected).abs() < 1e-15 && got.im == 0.0);
    }

    #[test]
    fn symmetric_zero_lhs_all_zero() {
        let kernel = KernelSpec::gaussian(1.0, 1).unwrap();
        let mut samples = grid_samples(8, -1.0, 1.0);
        samples
            .cache_sigma_w(&constant_matrix(array![[0.0]]), &zero_scalar())
            .unwrap();
        // sigma = 0 gives G1 = 0, hence LHS = 0
        let system = GramSystem::symmetric(kernel, Arc::new(samples)).unwrap();
        let sol = solve_symmetric(&system, 1e-10, 4).unwrap();
        for v in sol.real_eigenvalues() {
            assert!(v.abs() < 1e-8, "{v}");
        }
    }

    #[test]
    fn symmetric_solver_real_ascending_nonnegative() {
        let kernel = KernelSpec::gaussian(0.8, 1).unwrap();
        let mut samples = grid_samples(30, -2.0, 2.0);
        samples
            .cache_sigma_w(&constant_matrix(array![[1.0]]), &zero_scalar())
            .unwrap();
        let system = GramSystem::symmetric(kernel, Arc::new(samples)).unwrap();
        let sol = solve_symmetric(&system, 1e-8, 6).unwrap();
        let vals = sol.real_eigenvalues();
        let top = vals.last().unwrap().abs().max(1.0);
        for w in vals.windows(2) {
            assert!(w[0] <= w[1] + 1e-12);
        }
        assert!(vals[0] >= -1e-6 * top, "smallest {}", vals[0]);
        for v in &sol.eigenvalues {
            assert_eq!(v.im, 0.0);
        }
    }

    #[test]
    fn residual_small_for_computed_pairs() {
        // QHO with the standard settings: reported pairs resolve the pencil
        // to below 1e-6 relative residual.
        use crate::operators::SchrodingerSpec;
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(42);
        let pts = Array2::from_shape_fn((100, 1), |_| rng.gen_range(-5.0..5.0));
        let mut samples = SampleSet::from_points(pts, SampleSource::Iid).unwrap();
        let qho =
            SchrodingerSpec::new(1, 1.0, 1.0, Arc::new(|x: &[f64]| 0.5 * x[0] * x[0]))
                .unwrap();
        samples.cache_t_coefficients(&qho.coefficients()).unwrap();
        let kernel = KernelSpec::gaussian(1.0, 1).unwrap();
        let system = GramSystem::general(kernel, Arc::new(samples)).unwrap();
        let sol = solve_general(&system, 1e-8, 4).unwrap();
        for i in 0..sol.len() {
            let r = rayleigh_residual(&sol, i, &system).unwrap();
            assert!(r < 1e-6, "residual {r} for pair {i}");
        }
    }

    #[test]
    fn residual_grows_with_perturbation() {
        let system = ou_general_system(60, -3.0, 3.0, 1.0);
        let sol = solve_general(&system, 1e-8, 2).unwrap();
        let mut last = rayleigh_residual(&sol, 1, &system).unwrap();
        for scale in [1e-6, 1e-4, 1e-2] {
            let mut perturbed = EigenSolution {
                eigenvalues: sol.eigenvalues.clone(),
                coefficients: sol.coefficients.clone(),
                sample_values: sol.sample_values.clone(),
                eps: sol.eps,
                mode: sol.mode,
                kernel: sol.kernel.clone(),
                samples: Arc::clone(&sol.samples),
            };
            let m = perturbed.coefficients[1].len();
            for i in 0..m {
                let bump = scale * ((i * 7 % 5) as f64 - 2.0);
                perturbed.coefficients[1][i] += c64::new(bump, 0.0);
            }
            let r = rayleigh_residual(&perturbed, 1, &system).unwrap();
            assert!(r > last, "residual {r} did not grow past {last}");
            last = r;
        }
    }

    #[test]
    fn pencil_scale_invariance() {
        // Scaling both sides by 4 (a power of two) must reproduce identical
        // eigenvalues bit for bit; the unit-norm eigenvectors also agree.
        let system = ou_general_system(50, -3.0, 3.0, 1.0);
        let scaled = GramSystem {
            kernel: system.kernel.clone(),
            samples: Arc::clone(&system.samples),
            g0: &system.g0 * 4.0,
            mode: match &system.mode {
                GramMode::General { g2 } => GramMode::General { g2: g2 * 4.0 },
                _ => unreachable!(),
            },
        };
        let sol_a = solve_general(&system, 1e-8, 4).unwrap();
        let sol_b = solve_general(&scaled, 1e-8, 4).unwrap();
        for (a, b) in sol_a.eigenvalues.iter().zip(&sol_b.eigenvalues) {
            assert_eq!(a, b);
        }
        for (ua, ub) in sol_a.coefficients.iter().zip(&sol_b.coefficients) {
            let na = ua.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let nb = ub.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            for (a, b) in ua.iter().zip(ub.iter()) {
                assert!((a / na - b / nb).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn regularization_stabilizes() {
        // Well-conditioned system (spread-out points, narrow bandwidth), so
        // the eps dependence is smooth.
        let system = ou_general_system(25, -6.0, 6.0, 0.25);
        let eps = 1e-6;
        let v1 = solve_general(&system, eps, 3).unwrap().real_eigenvalues();
        let v2 = solve_general(&system, eps / 10.0, 3)
            .unwrap()
            .real_eigenvalues();
        let v3 = solve_general(&system, eps / 100.0, 3)
            .unwrap()
            .real_eigenvalues();
        for i in 0..3 {
            let d1 = (v1[i] - v2[i]).abs();
            let d2 = (v2[i] - v3[i]).abs();
            // linear-in-eps perturbation makes d1 ~ 10 d2; allow round-off
            assert!(
                d1 <= 10.0 * d2 + 1e-12,
                "eigenvalue {i}: d1 = {d1}, d2 = {d2}"
            );
        }
    }

    #[test]
    fn normalization_unit_empirical_norm() {
        let system = ou_general_system(40, -3.0, 3.0, 1.0);
        let sol = solve_general(&system, 1e-8, 3).unwrap();
        let m = system.size() as f64;
        for i in 0..sol.len() {
            let g0u = sol.values_at_samples(i).unwrap();
            let norm_sq = g0u.iter().map(|v| v.norm_sqr()).sum::<f64>() / m;
            assert!((norm_sq - 1.0).abs() < 1e-10);
            // phase fix: largest-magnitude entry positive real
            let pivot = g0u
                .iter()
                .cloned()
                .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
                .unwrap();
            assert!(pivot.re > 0.0 && pivot.im.abs() < 1e-10 * pivot.re.abs().max(1.0));
        }
    }

    #[test]
    fn invalid_arguments_rejected() {
        let system = ou_general_system(10, -1.0, 1.0, 1.0);
        assert!(solve_general(&system, -1.0, 2).is_err());
        assert!(solve_general(&system, 1e-8, 0).is_err());
        assert!(solve_general(&system, 1e-8, 11).is_err());
        assert!(solve_symmetric(&system, 1e-8, 2).is_err());
    }

    #[test]
    fn singular_g0_at_zero_eps_advises() {
        // polynomial kernel of degree 1 on many points: rank 2
        let kernel = KernelSpec::polynomial(1, 1.0, 1).unwrap();
        let mut samples = grid_samples(10, -1.0, 1.0);
        samples.coeffs.a = Some(ndarray::Array3::zeros((10, 1, 1)));
        samples.coeffs.c = Some(Array2::<f64>::zeros((10, 1)));
        samples.coeffs.w = Some(ndarray::Array1::ones(10));
        let system = GramSystem::general(kernel, Arc::new(samples)).unwrap();
        match solve_general(&system, 0.0, 2) {
            Err(KgError::Solver(msg)) => assert!(msg.contains("eps"), "{msg}"),
            Err(other) => panic!("unexpected error {other:?}"),
            Ok(_) => panic!("expected advisory error"),
        }
    }
}
