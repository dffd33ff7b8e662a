//! Symmetric positive definite kernels with analytic derivatives in the
//! first argument.
//!
//! The Gaussian kernel `k(x, x') = exp(-||x - x'||^2 / (2 s^2))` and the
//! polynomial kernel `k(x, x') = (c + x^T x')^q` are supported. Both admit
//! closed forms for the gradient and Hessian with respect to `x`, which is
//! all the Gram-matrix assembly needs. A finite-difference validator is
//! provided as an independent cross-check.

use crate::error::{KgError, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Kernel family plus hyperparameters. Immutable; all evaluations are pure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    /// `exp(-||x - x'||^2 / (2 bandwidth^2))`
    Gaussian { bandwidth: f64, dim: usize },
    /// `(offset + x^T x')^degree`
    Polynomial { degree: u32, offset: f64, dim: usize },
}

impl KernelSpec {
    pub fn gaussian(bandwidth: f64, dim: usize) -> Result<Self> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(KgError::InvalidParameter(format!(
                "gaussian bandwidth must be positive, got {bandwidth}"
            )));
        }
        if dim == 0 {
            return Err(KgError::InvalidParameter("dimension must be >= 1".into()));
        }
        Ok(KernelSpec::Gaussian { bandwidth, dim })
    }

    pub fn polynomial(degree: u32, offset: f64, dim: usize) -> Result<Self> {
        if degree == 0 {
            return Err(KgError::InvalidParameter(
                "polynomial degree must be >= 1".into(),
            ));
        }
        if !(offset >= 0.0) || !offset.is_finite() {
            return Err(KgError::InvalidParameter(format!(
                "polynomial offset must be nonnegative, got {offset}"
            )));
        }
        if dim == 0 {
            return Err(KgError::InvalidParameter("dimension must be >= 1".into()));
        }
        Ok(KernelSpec::Polynomial {
            degree,
            offset,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        match *self {
            KernelSpec::Gaussian { dim, .. } => dim,
            KernelSpec::Polynomial { dim, .. } => dim,
        }
    }

    fn check_pair(&self, x: &[f64], y: &[f64]) -> Result<()> {
        let d = self.dim();
        if x.len() != d {
            return Err(KgError::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        if y.len() != d {
            return Err(KgError::DimensionMismatch {
                expected: d,
                got: y.len(),
            });
        }
        Ok(())
    }

    /// Kernel value `k(x, y)`. Symmetric in its arguments.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_pair(x, y)?;
        Ok(self.eval_raw(x, y))
    }

    /// Gradient of `k` with respect to the first argument, at `(x, y)`.
    pub fn grad1(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check_pair(x, y)?;
        let mut out = vec![0.0; self.dim()];
        self.grad1_raw(x, y, &mut out);
        Ok(out)
    }

    /// Hessian of `k` with respect to the first argument, at `(x, y)`.
    /// The result is exactly symmetric (upper triangle mirrored).
    pub fn hess1(&self, x: &[f64], y: &[f64]) -> Result<Array2<f64>> {
        self.check_pair(x, y)?;
        let d = self.dim();
        let mut flat = vec![0.0; d * d];
        self.hess1_raw(x, y, &mut flat);
        Ok(Array2::from_shape_vec((d, d), flat).expect("shape"))
    }

    /// Compares `grad1` and `hess1` against central finite differences with
    /// step `h`. Returns `(max abs gradient error, max abs Hessian error)`.
    pub fn fd_validate(&self, x: &[f64], y: &[f64], h: f64) -> Result<(f64, f64)> {
        if !(h > 0.0) {
            return Err(KgError::InvalidParameter(format!(
                "finite-difference step must be positive, got {h}"
            )));
        }
        self.check_pair(x, y)?;
        let d = self.dim();
        let g = self.grad1(x, y)?;
        let hess = self.hess1(x, y)?;

        let mut xp = x.to_vec();
        let mut grad_err = 0.0_f64;
        for i in 0..d {
            xp.copy_from_slice(x);
            xp[i] = x[i] + h;
            let kp = self.eval_raw(&xp, y);
            xp[i] = x[i] - h;
            let km = self.eval_raw(&xp, y);
            let fd = (kp - km) / (2.0 * h);
            grad_err = grad_err.max((fd - g[i]).abs());
        }

        let k0 = self.eval_raw(x, y);
        let mut hess_err = 0.0_f64;
        for i in 0..d {
            for j in i..d {
                let fd = if i == j {
                    xp.copy_from_slice(x);
                    xp[i] = x[i] + h;
                    let kp = self.eval_raw(&xp, y);
                    xp[i] = x[i] - h;
                    let km = self.eval_raw(&xp, y);
                    (kp - 2.0 * k0 + km) / (h * h)
                } else {
                    xp.copy_from_slice(x);
                    xp[i] = x[i] + h;
                    xp[j] = x[j] + h;
                    let kpp = self.eval_raw(&xp, y);
                    xp[j] = x[j] - h;
                    let kpm = self.eval_raw(&xp, y);
                    xp[i] = x[i] - h;
                    let kmm = self.eval_raw(&xp, y);
                    xp[j] = x[j] + h;
                    let kmp = self.eval_raw(&xp, y);
                    (kpp - kpm - kmp + kmm) / (4.0 * h * h)
                };
                hess_err = hess_err.max((fd - hess[(i, j)]).abs());
            }
        }
        Ok((grad_err, hess_err))
    }

    // Unchecked hot-path evaluations used by the Gram assembly. Callers
    // guarantee slice lengths equal `self.dim()`.

    pub(crate) fn eval_raw(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Gaussian { bandwidth, .. } => {
                let mut sq = 0.0;
                for (a, b) in x.iter().zip(y) {
                    let dxy = a - b;
                    sq += dxy * dxy;
                }
                (-sq / (2.0 * bandwidth * bandwidth)).exp()
            }
            KernelSpec::Polynomial { degree, offset, .. } => {
                let mut dot = offset;
                for (a, b) in x.iter().zip(y) {
                    dot += a * b;
                }
                dot.powi(degree as i32)
            }
        }
    }

    pub(crate) fn grad1_raw(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        match *self {
            KernelSpec::Gaussian { bandwidth, .. } => {
                let k = self.eval_raw(x, y);
                let inv_s2 = 1.0 / (bandwidth * bandwidth);
                for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
                    *o = -inv_s2 * (a - b) * k;
                }
            }
            KernelSpec::Polynomial { degree, offset, .. } => {
                let mut dot = offset;
                for (a, b) in x.iter().zip(y) {
                    dot += a * b;
                }
                let scale = degree as f64 * dot.powi(degree as i32 - 1);
                for (o, b) in out.iter_mut().zip(y) {
                    *o = scale * b;
                }
            }
        }
    }

    /// Row-major `d*d` output; exactly symmetric.
    pub(crate) fn hess1_raw(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let d = self.dim();
        debug_assert_eq!(out.len(), d * d);
        match *self {
            KernelSpec::Gaussian { bandwidth, .. } => {
                let k = self.eval_raw(x, y);
                let inv_s2 = 1.0 / (bandwidth * bandwidth);
                let inv_s4 = inv_s2 * inv_s2;
                for i in 0..d {
                    let di = x[i] - y[i];
                    for j in i..d {
                        let dj = x[j] - y[j];
                        let mut v = inv_s4 * di * dj * k;
                        if i == j {
                            v -= inv_s2 * k;
                        }
                        out[i * d + j] = v;
                        out[j * d + i] = v;
                    }
                }
            }
            KernelSpec::Polynomial { degree, offset, .. } => {
                if degree == 1 {
                    // the (q - 1) factor vanishes
                    out.fill(0.0);
                    return;
                }
                let mut dot = offset;
                for (a, b) in x.iter().zip(y) {
                    dot += a * b;
                }
                let q = degree as f64;
                let scale = q * (q - 1.0) * dot.powi(degree as i32 - 2);
                for i in 0..d {
                    for j in i..d {
                        let v = scale * y[i] * y[j];
                        out[i * d + j] = v;
                        out[j * d + i] = v;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use ndarray_linalg::{Eigh, UPLO};
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn random_pair(rng: &mut ChaCha12Rng, d: usize, scale: f64) -> (Vec<f64>, Vec<f64>) {
        let x = (0..d).map(|_| rng.gen_range(-scale..scale)).collect();
        let y = (0..d).map(|_| rng.gen_range(-scale..scale)).collect();
        (x, y)
    }

    #[test]
    fn gaussian_eval_known_values() {
        let k = KernelSpec::gaussian(1.0, 2).unwrap();
        assert_eq!(k.eval(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 1.0);
        let v = k.eval(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((v - (-0.5_f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn polynomial_eval_known_values() {
        let k = KernelSpec::polynomial(2, 1.0, 2).unwrap();
        assert_eq!(k.eval(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        // k(0, 0) = c^q
        assert_eq!(k.eval(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 1.0);
        let k3 = KernelSpec::polynomial(3, 2.0, 1).unwrap();
        assert_eq!(k3.eval(&[0.0], &[0.0]).unwrap(), 8.0);
    }

    #[test]
    fn eval_symmetric_in_arguments() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for kernel in [
            KernelSpec::gaussian(0.7, 3).unwrap(),
            KernelSpec::polynomial(4, 0.5, 3).unwrap(),
        ] {
            for _ in 0..50 {
                let (x, y) = random_pair(&mut rng, 3, 2.0);
                let a = kernel.eval(&x, &y).unwrap();
                let b = kernel.eval(&y, &x).unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn gaussian_grad_vanishes_at_equal_points() {
        let k = KernelSpec::gaussian(1.0, 2).unwrap();
        let g = k.grad1(&[0.3, -1.2], &[0.3, -1.2]).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn polynomial_grad_known_value() {
        // q y (c + x^T y)^{q-1} = 2 * (0, 1) * 1
        let k = KernelSpec::polynomial(2, 1.0, 2).unwrap();
        let g = k.grad1(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(g, vec![0.0, 2.0]);
    }

    #[test]
    fn gaussian_grad_known_value() {
        let k = KernelSpec::gaussian(2.0, 1).unwrap();
        let g = k.grad1(&[1.0], &[0.0]).unwrap();
        let expected = -0.25 * (-0.125_f64).exp();
        assert!((g[0] - expected).abs() < 1e-15);
        assert!((g[0] - (-0.220624)).abs() < 1e-6);
    }

    #[test]
    fn gaussian_hess_at_equal_points_is_minus_identity() {
        let k = KernelSpec::gaussian(1.0, 2).unwrap();
        let h = k.hess1(&[0.4, 0.4], &[0.4, 0.4]).unwrap();
        assert_eq!(h, array![[-1.0, 0.0], [0.0, -1.0]]);
    }

    #[test]
    fn polynomial_hess_known_value() {
        // q (q-1) y y^T (c + x^T y)^{q-2} with q=2, c=0
        let k = KernelSpec::polynomial(2, 0.0, 2).unwrap();
        let h = k.hess1(&[1.0, 1.0], &[2.0, 3.0]).unwrap();
        assert_eq!(h, array![[8.0, 12.0], [12.0, 18.0]]);
    }

    #[test]
    fn gaussian_hess_mixed_point() {
        let k = KernelSpec::gaussian(1.0, 2).unwrap();
        let h = k.hess1(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
        let e = (-0.5_f64).exp();
        assert!((h[(0, 0)] - 0.0).abs() < 1e-15);
        assert!((h[(0, 1)] - 0.0).abs() < 1e-15);
        assert!((h[(1, 1)] + e).abs() < 1e-15);
    }

    #[test]
    fn polynomial_degree_one_hessian_is_zero() {
        let k = KernelSpec::polynomial(1, 1.0, 2).unwrap();
        let h = k.hess1(&[0.5, -0.5], &[1.0, 2.0]).unwrap();
        assert_eq!(h, Array2::<f64>::zeros((2, 2)));
    }

    #[test]
    fn hessian_exactly_symmetric() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let k = KernelSpec::gaussian(0.8, 4).unwrap();
        for _ in 0..20 {
            let (x, y) = random_pair(&mut rng, 4, 2.0);
            let h = k.hess1(&x, &y).unwrap();
            assert_eq!(h, h.t().to_owned());
        }
    }

    #[test]
    fn fd_validation_gaussian() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let k = KernelSpec::gaussian(1.0, 2).unwrap();
        let (x, y) = random_pair(&mut rng, 2, 2.0);
        let (ge, he) = k.fd_validate(&x, &y, 1e-5).unwrap();
        assert!(ge < 1e-6, "gradient error {ge}");
        assert!(he < 1e-6, "hessian error {he}");
    }

    #[test]
    fn fd_validation_polynomial() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let k = KernelSpec::polynomial(4, 1.0, 2).unwrap();
        let (x, y) = random_pair(&mut rng, 2, 2.0);
        let (ge, he) = k.fd_validate(&x, &y, 1e-5).unwrap();
        assert!(ge < 1e-5, "gradient error {ge}");
        assert!(he < 1e-5, "hessian error {he}");
    }

    #[test]
    fn fd_validation_at_symmetry_point() {
        let k = KernelSpec::gaussian(1.0, 2).unwrap();
        let x = [0.7, -0.2];
        let (ge, _) = k.fd_validate(&x, &x, 1e-5).unwrap();
        assert!(ge < 1e-8, "gradient error at x = y: {ge}");
    }

    // Derivative consistency over 100 random pairs per kernel, relative
    // tolerance 1e-5. This doubles as the derivative reproducing sanity
    // check: the analytic first-argument partials must match the
    // finite-difference quotients of the kernel sections.
    #[test]
    fn derivative_consistency_random_pairs() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        for kernel in [
            KernelSpec::gaussian(1.0, 2).unwrap(),
            KernelSpec::polynomial(3, 1.0, 2).unwrap(),
        ] {
            for _ in 0..100 {
                let (x, y) = random_pair(&mut rng, 2, 2.0);
                let (ge, he) = kernel.fd_validate(&x, &y, 1e-5).unwrap();
                let scale = kernel.eval(&x, &y).unwrap().abs().max(1.0);
                assert!(ge / scale < 1e-5, "grad rel err {} for {kernel:?}", ge / scale);
                assert!(he / scale < 1e-4, "hess rel err {} for {kernel:?}", he / scale);
            }
        }
    }

    #[test]
    fn gram_matrix_positive_semidefinite() {
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        for kernel in [
            KernelSpec::gaussian(1.0, 2).unwrap(),
            KernelSpec::polynomial(2, 1.0, 2).unwrap(),
        ] {
            let pts: Vec<Vec<f64>> = (0..20)
                .map(|_| (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let mut g = Array2::<f64>::zeros((20, 20));
            for i in 0..20 {
                for j in 0..20 {
                    g[(i, j)] = kernel.eval(&pts[i], &pts[j]).unwrap();
                }
            }
            let (vals, _) = g.eigh(UPLO::Lower).unwrap();
            assert!(vals[0] >= -1e-10, "min eigenvalue {}", vals[0]);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let k = KernelSpec::gaussian(1.0, 2).unwrap();
        assert!(k.eval(&[0.0], &[0.0, 0.0]).is_err());
        assert!(k.grad1(&[0.0, 0.0], &[0.0]).is_err());
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(KernelSpec::gaussian(0.0, 1).is_err());
        assert!(KernelSpec::gaussian(-1.0, 1).is_err());
        assert!(KernelSpec::polynomial(0, 1.0, 1).is_err());
        assert!(KernelSpec::polynomial(2, -0.5, 1).is_err());
    }
}
