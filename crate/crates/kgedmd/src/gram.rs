//! Assembly of the Gram matrices `G0`, `G2`, and `G1^(l)` from samples,
//! kernel derivatives, and operator coefficients.
//!
//! `[G0]_{mr} = k(x_m, x_r)` is the standard Gram matrix. In the general
//! mode, `[G2]_{mr}` applies the operator coefficients at `x_m` to the
//! kernel section centered there:
//! `-1/2 sum_ij a_ij(x_m) [Hess_1 k]_ij + sum_i c_i(x_m) [grad_1 k]_i
//!  + W(x_m) k`, all derivatives with respect to the first argument at
//! `(x_m, x_r)`. In the symmetric (reversible) mode only first derivatives
//! are needed: `[G1^(l)]_{mr} = sigma_l(x_m)^T grad_1 k(x_m, x_r)` with
//! `sigma_l` the l-th column of the diffusion.
//!
//! Coefficients are evaluated once per sample and cached before assembly.
//! Assembly is parallel over rows; entries are computed by the same code
//! path regardless of worker count, so parallel results are bit-identical
//! to serial ones.

use crate::error::{KgError, Result};
use crate::kernels::KernelSpec;
use crate::operators::{MatrixField, ScalarField, TCoefficients};
use ndarray::{Array1, Array2, Array3, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// How a sample set was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleSource {
    Iid,
    Trajectory,
    Grid,
}

/// Per-sample operator coefficient cache.
#[derive(Clone, Debug, Default)]
pub struct CoeffCache {
    /// `a(x_m)`, shape `M x d x d`.
    pub a: Option<Array3<f64>>,
    /// `c(x_m)`, shape `M x d`.
    pub c: Option<Array2<f64>>,
    /// `W(x_m)`, length `M`.
    pub w: Option<Array1<f64>>,
    /// `sigma(x_m)`, shape `M x d x d`.
    pub sigma: Option<Array3<f64>>,
}

/// `M` state-space points of dimension `d` with optional cached
/// coefficient evaluations.
#[derive(Clone, Debug)]
pub struct SampleSet {
    points: Array2<f64>,
    pub source: SampleSource,
    pub seed: Option<u64>,
    pub coeffs: CoeffCache,
}

impl SampleSet {
    pub fn from_points(points: Array2<f64>, source: SampleSource) -> Result<Self> {
        if points.nrows() == 0 {
            return Err(KgError::InvalidParameter(
                "sample set must contain at least one point".into(),
            ));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(KgError::InvalidParameter(
                "sample set contains non-finite entries".into(),
            ));
        }
        Ok(SampleSet {
            points,
            source,
            seed: None,
            coeffs: CoeffCache::default(),
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn point(&self, m: usize) -> ArrayView1<'_, f64> {
        self.points.row(m)
    }

    fn point_slice(&self, m: usize) -> &[f64] {
        self.points
            .row(m)
            .to_slice()
            .expect("sample points are stored row-major")
    }

    /// Evaluates and caches `a`, `c`, `W` at every sample. `a` is verified
    /// symmetric positive definite pointwise.
    pub fn cache_t_coefficients(&mut self, t: &TCoefficients) -> Result<()> {
        let (m_total, d) = (self.len(), self.dim());
        if t.dim != d {
            return Err(KgError::DimensionMismatch {
                expected: d,
                got: t.dim,
            });
        }
        let rows: Vec<(Array2<f64>, Vec<f64>, f64)> = (0..m_total)
            .into_par_iter()
            .map(|m| {
                let x = self.point_slice(m);
                let a = (t.a)(x);
                let c = (t.c)(x);
                let w = (t.w)(x);
                crate::operators::check_spd_matrix(&a, x)?;
                if c.iter().any(|v| !v.is_finite()) || !w.is_finite() {
                    return Err(KgError::Evaluation {
                        what: format!("coefficient at sample {m}"),
                        point: x.to_vec(),
                    });
                }
                Ok((a, c, w))
            })
            .collect::<Result<_>>()?;

        let mut a = Array3::zeros((m_total, d, d));
        let mut c = Array2::<f64>::zeros((m_total, d));
        let mut w = Array1::zeros(m_total);
        for (m, (am, cm, wm)) in rows.into_iter().enumerate() {
            a.index_axis_mut(Axis(0), m).assign(&am);
            for i in 0..d {
                c[(m, i)] = cm[i];
            }
            w[m] = wm;
        }
        self.coeffs.a = Some(a);
        self.coeffs.c = Some(c);
        self.coeffs.w = Some(w);
        Ok(())
    }

    /// Evaluates and caches `sigma` and `W` at every sample for the
    /// symmetric mode.
    pub fn cache_sigma_w(&mut self, sigma: &MatrixField, w: &ScalarField) -> Result<()> {
        let (m_total, d) = (self.len(), self.dim());
        let rows: Vec<(Array2<f64>, f64)> = (0..m_total)
            .into_par_iter()
            .map(|m| {
                let x = self.point_slice(m);
                let s = sigma(x);
                let wm = w(x);
                if s.iter().any(|v| !v.is_finite()) || !wm.is_finite() {
                    return Err(KgError::Evaluation {
                        what: format!("coefficient at sample {m}"),
                        point: x.to_vec(),
                    });
                }
                if s.nrows() != d || s.ncols() != d {
                    return Err(KgError::DimensionMismatch {
                        expected: d,
                        got: s.nrows(),
                    });
                }
                Ok((s, wm))
            })
            .collect::<Result<_>>()?;

        let mut s = Array3::zeros((m_total, d, d));
        let mut w_arr = Array1::zeros(m_total);
        for (m, (sm, wm)) in rows.into_iter().enumerate() {
            s.index_axis_mut(Axis(0), m).assign(&sm);
            w_arr[m] = wm;
        }
        self.coeffs.sigma = Some(s);
        self.coeffs.w = Some(w_arr);
        Ok(())
    }
}

/// `[G0]_{mr} = k(x_m, x_r)`; each unordered pair is evaluated once, so the
/// result is exactly symmetric.
pub fn assemble_g0(kernel: &KernelSpec, samples: &SampleSet) -> Result<Array2<f64>> {
    check_kernel_dim(kernel, samples)?;
    let m_total = samples.len();
    let upper: Vec<Vec<f64>> = (0..m_total)
        .into_par_iter()
        .map(|m| {
            let xm = samples.point_slice(m);
            (m..m_total)
                .map(|r| kernel.eval_raw(xm, samples.point_slice(r)))
                .collect()
        })
        .collect();
    let mut g0 = Array2::<f64>::zeros((m_total, m_total));
    for (m, row) in upper.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            let r = m + off;
            g0[(m, r)] = v;
            g0[(r, m)] = v;
        }
    }
    Ok(g0)
}

/// `[G2]_{mr}` applies the cached coefficients at `x_m` to the kernel
/// derivatives at `(x_m, x_r)`. Generally not symmetric.
pub fn assemble_g2(kernel: &KernelSpec, samples: &SampleSet) -> Result<Array2<f64>> {
    check_kernel_dim(kernel, samples)?;
    let a = samples.coeffs.a.as_ref().ok_or_else(cache_missing)?;
    let c = samples.coeffs.c.as_ref().ok_or_else(cache_missing)?;
    let w = samples.coeffs.w.as_ref().ok_or_else(cache_missing)?;
    let (m_total, d) = (samples.len(), samples.dim());

    let mut g2 = Array2::<f64>::zeros((m_total, m_total));
    g2.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(m, mut row)| {
            let xm = samples.point_slice(m);
            let am = a.index_axis(Axis(0), m);
            let cm = c.row(m);
            let wm = w[m];
            let mut grad = vec![0.0; d];
            let mut hess = vec![0.0; d * d];
            for r in 0..m_total {
                let xr = samples.point_slice(r);
                let k = kernel.eval_raw(xm, xr);
                kernel.grad1_raw(xm, xr, &mut grad);
                kernel.hess1_raw(xm, xr, &mut hess);
                let mut entry = wm * k;
                for i in 0..d {
                    entry += cm[i] * grad[i];
                    for j in 0..d {
                        entry -= 0.5 * am[(i, j)] * hess[i * d + j];
                    }
                }
                row[r] = entry;
            }
        });
    Ok(g2)
}

/// The `d` matrices `[G1^(l)]_{mr} = sigma_l(x_m)^T grad_1 k(x_m, x_r)`.
pub fn assemble_g1(kernel: &KernelSpec, samples: &SampleSet) -> Result<Vec<Array2<f64>>> {
    check_kernel_dim(kernel, samples)?;
    let sigma = samples.coeffs.sigma.as_ref().ok_or_else(cache_missing)?;
    let (m_total, d) = (samples.len(), samples.dim());

    let mut mats = vec![Array2::<f64>::zeros((m_total, m_total)); d];
    // Split mutable access so each row of every G1^(l) can be filled in one
    // pass over r, computing the kernel gradient once per (m, r).
    let mut row_views: Vec<_> = mats
        .iter_mut()
        .map(|m| m.axis_iter_mut(Axis(0)))
        .collect();
    let mut zipped: Vec<Vec<_>> = Vec::with_capacity(m_total);
    for _ in 0..m_total {
        zipped.push(row_views.iter_mut().map(|it| it.next().unwrap()).collect());
    }
    zipped
        .into_par_iter()
        .enumerate()
        .for_each(|(m, mut rows)| {
            let xm = samples.point_slice(m);
            let sm = sigma.index_axis(Axis(0), m);
            let mut grad = vec![0.0; d];
            for r in 0..m_total {
                let xr = samples.point_slice(r);
                kernel.grad1_raw(xm, xr, &mut grad);
                for (l, row) in rows.iter_mut().enumerate() {
                    let mut dot = 0.0;
                    for i in 0..d {
                        dot += sm[(i, l)] * grad[i];
                    }
                    row[r] = dot;
                }
            }
        });
    Ok(mats)
}

/// Left-hand side of the symmetric pencil,
/// `1/2 sum_l (G1^(l))^T G1^(l) + G0 diag(W) G0`,
/// symmetrized to remove round-off asymmetry from the matrix products.
/// Positive semidefinite whenever `W >= 0`.
pub fn assemble_symmetric_lhs(
    g1: &[Array2<f64>],
    g0: &Array2<f64>,
    wvals: &Array1<f64>,
) -> Result<Array2<f64>> {
    let m_total = g0.nrows();
    if g0.ncols() != m_total || wvals.len() != m_total {
        return Err(KgError::DimensionMismatch {
            expected: m_total,
            got: wvals.len(),
        });
    }
    let mut lhs = Array2::<f64>::zeros((m_total, m_total));
    for g in g1 {
        if g.nrows() != m_total || g.ncols() != m_total {
            return Err(KgError::DimensionMismatch {
                expected: m_total,
                got: g.nrows(),
            });
        }
        lhs = lhs + 0.5 * g.t().dot(g);
    }
    if wvals.iter().any(|&v| v != 0.0) {
        // rows of G0 scaled by W, then G0 * (diag(W) G0)
        let mut scaled = g0.clone();
        for (mut row, &wv) in scaled.axis_iter_mut(Axis(0)).zip(wvals.iter()) {
            row *= wv;
        }
        lhs = lhs + g0.dot(&scaled);
    }
    let lhs_t = lhs.t().to_owned();
    Ok((lhs + lhs_t) * 0.5)
}

fn check_kernel_dim(kernel: &KernelSpec, samples: &SampleSet) -> Result<()> {
    if kernel.dim() != samples.dim() {
        return Err(KgError::DimensionMismatch {
            expected: samples.dim(),
            got: kernel.dim(),
        });
    }
    Ok(())
}

fn cache_missing() -> KgError {
    KgError::InvalidParameter(
        "coefficient cache missing; call cache_t_coefficients or cache_sigma_w first".into(),
    )
}

/// Which generalized eigenvalue problem a Gram system encodes.
#[derive(Clone, Debug)]
pub enum GramMode {
    /// `G2 u = lambda G0 u`
    General { g2: Array2<f64> },
    /// `[1/2 sum_l (G1^(l))^T G1^(l) + G0 diag(W) G0] u = lambda G0 G0 u`
    Symmetric {
        g1: Vec<Array2<f64>>,
        w: Array1<f64>,
    },
}

/// Assembled Gram matrices plus the kernel and samples they came from.
pub struct GramSystem {
    pub kernel: KernelSpec,
    pub samples: std::sync::Arc<SampleSet>,
    pub g0: Array2<f64>,
    pub mode: GramMode,
}

impl GramSystem {
    /// Assembles `G0` and `G2` for the general eigenvalue problem. The
    /// samples must carry cached `(a, c, W)` coefficients.
    pub fn general(kernel: KernelSpec, samples: std::sync::Arc<SampleSet>) -> Result<Self> {
        let g0 = assemble_g0(&kernel, &samples)?;
        let g2 = assemble_g2(&kernel, &samples)?;
        Ok(GramSystem {
            kernel,
            samples,
            g0,
            mode: GramMode::General { g2 },
        })
    }

    /// Assembles `G0` and the `G1^(l)` for the symmetric problem. The
    /// samples must carry cached `sigma` and `W`.
    pub fn symmetric(kernel: KernelSpec, samples: std::sync::Arc<SampleSet>) -> Result<Self> {
        let g0 = assemble_g0(&kernel, &samples)?;
        let g1 = assemble_g1(&kernel, &samples)?;
        let w = samples
            .coeffs
            .w
            .clone()
            .ok_or_else(cache_missing)?;
        Ok(GramSystem {
            kernel,
            samples,
            g0,
            mode: GramMode::Symmetric { g1, w },
        })
    }

    pub fn size(&self) -> usize {
        self.g0.nrows()
    }

    /// The pencil `(LHS, RHS)` before regularization.
    pub fn pencil(&self) -> Result<(Array2<f64>, Array2<f64>)> {
        match &self.mode {
            GramMode::General { g2 } => Ok((g2.clone(), self.g0.clone())),
            GramMode::Symmetric { g1, w } => {
                let lhs = assemble_symmetric_lhs(g1, &self.g0, w)?;
                let rhs = self.g0.dot(&self.g0);
                let rhs_t = rhs.t().to_owned();
                Ok((lhs, (rhs + rhs_t) * 0.5))
            }
        }
    }
}

/// Evaluates an explicit `T`-applied feature row for testing against the
/// kernel path: see the gEDMD oracle tests.
pub fn t_entry_reference(
    kernel: &KernelSpec,
    xm: &[f64],
    xr: &[f64],
    a: ArrayView2<f64>,
    c: &[f64],
    w: f64,
) -> Result<f64> {
    let d = kernel.dim();
    let k = kernel.eval(xm, xr)?;
    let grad = kernel.grad1(xm, xr)?;
    let hess = kernel.hess1(xm, xr)?;
    let mut entry = w * k;
    for i in 0..d {
        entry += c[i] * grad[i];
        for j in 0..d {
            entry -= 0.5 * a[(i, j)] * hess[(i, j)];
        }
    }
    Ok(entry)
}
