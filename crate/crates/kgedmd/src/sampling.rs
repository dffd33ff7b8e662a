//! Training-data generation: SDE trajectories, uniform samplers, the Swiss
//! roll point cloud, and the kernel-density potential used for
//! manifold-learning operators.
//!
//! All samplers are driven by a counter-based ChaCha stream, so results
//! are bit-reproducible for a given seed, and independent tasks can derive
//! disjoint streams from `(seed, stream)` pairs.

use crate::error::{KgError, Result};
use crate::gram::{SampleSet, SampleSource};
use crate::operators::GeneratorSpec;
use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

fn rng_for(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Euler–Maruyama integration settings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub dt: f64,
    pub total_steps: usize,
    pub burn_in: usize,
    pub stride: usize,
    pub x0: Vec<f64>,
    pub seed: u64,
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(KgError::InvalidParameter(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.stride == 0 {
            return Err(KgError::InvalidParameter("stride must be >= 1".into()));
        }
        if self.burn_in >= self.total_steps {
            return Err(KgError::InvalidParameter(format!(
                "burn-in ({}) must be smaller than total steps ({})",
                self.burn_in, self.total_steps
            )));
        }
        Ok(())
    }

    /// Number of samples the trajectory will retain.
    pub fn retained(&self) -> usize {
        (self.total_steps - self.burn_in) / self.stride
    }
}

/// Integrates `dX = b(X) dt + sigma(X) dB` with the Euler–Maruyama scheme
/// `X_{n+1} = X_n + b(X_n) dt + sigma(X_n) sqrt(dt) xi_n` and returns the
/// post-burn-in, strided states.
pub fn euler_maruyama(gen: &GeneratorSpec, cfg: &TrajectoryConfig) -> Result<SampleSet> {
    cfg.validate()?;
    let d = gen.dim;
    if cfg.x0.len() != d {
        return Err(KgError::DimensionMismatch {
            expected: d,
            got: cfg.x0.len(),
        });
    }
    let mut rng = rng_for(cfg.seed, 0);
    let sqrt_dt = cfg.dt.sqrt();
    let mut x = cfg.x0.clone();
    let mut xi = vec![0.0; d];
    let retained = cfg.retained();
    let mut out = Array2::zeros((retained, d));
    let mut kept = 0;
    for step in 1..=cfg.total_steps {
        let b = gen.drift(&x);
        let s = gen.sigma(&x);
        for v in xi.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        for i in 0..d {
            let mut noise = 0.0;
            for j in 0..d {
                noise += s[(i, j)] * xi[j];
            }
            x[i] += b[i] * cfg.dt + sqrt_dt * noise;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(KgError::NonFiniteState { step });
        }
        if step > cfg.burn_in && (step - cfg.burn_in) % cfg.stride == 0 && kept < retained {
            for i in 0..d {
                out[(kept, i)] = x[i];
            }
            kept += 1;
        }
    }
    Ok(SampleSet::from_points(out, SampleSource::Trajectory)?.with_seed(cfg.seed))
}

/// `m` points uniform in the `d`-ball of the given radius, rejection-free:
/// gaussian direction times the `u^{1/d}` radial law.
pub fn sample_ball(radius: f64, m: usize, d: usize, seed: u64) -> Result<SampleSet> {
    if !(radius > 0.0) {
        return Err(KgError::InvalidParameter(format!(
            "radius must be positive, got {radius}"
        )));
    }
    if m == 0 || d == 0 {
        return Err(KgError::InvalidParameter(
            "need at least one point and one dimension".into(),
        ));
    }
    let mut rng = rng_for(seed, 1);
    let mut out = Array2::zeros((m, d));
    for row in 0..m {
        let mut dir = vec![0.0; d];
        let mut norm = 0.0;
        while norm == 0.0 {
            for v in dir.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        }
        let u: f64 = rng.gen_range(0.0..1.0);
        let r = radius * u.powf(1.0 / d as f64);
        for i in 0..d {
            out[(row, i)] = r * dir[i] / norm;
        }
    }
    Ok(SampleSet::from_points(out, SampleSource::Iid)?.with_seed(seed))
}

/// `m` points uniform in the box `[lo, hi]`.
pub fn sample_box(lo: &[f64], hi: &[f64], m: usize, seed: u64) -> Result<SampleSet> {
    let d = lo.len();
    if hi.len() != d {
        return Err(KgError::DimensionMismatch {
            expected: d,
            got: hi.len(),
        });
    }
    if m == 0 || d == 0 {
        return Err(KgError::InvalidParameter(
            "need at least one point and one dimension".into(),
        ));
    }
    for i in 0..d {
        if !(lo[i] < hi[i]) {
            return Err(KgError::InvalidParameter(format!(
                "invalid bounds: lo[{i}] = {} must be < hi[{i}] = {}",
                lo[i], hi[i]
            )));
        }
    }
    let mut rng = rng_for(seed, 2);
    let mut out = Array2::zeros((m, d));
    for row in 0..m {
        for i in 0..d {
            out[(row, i)] = rng.gen_range(lo[i]..hi[i]);
        }
    }
    Ok(SampleSet::from_points(out, SampleSource::Iid)?.with_seed(seed))
}

/// Swiss roll in three dimensions: `(t cos t, h, t sin t)` plus isotropic
/// gaussian noise, with `t` uniform in `[3 pi/2, 9 pi/2]` and `h` uniform
/// in `[0, 21]`. The intrinsic coordinates `(t, h)` are returned for
/// validation against eigenfunction parametrizations.
pub fn swiss_roll(m: usize, noise: f64, seed: u64) -> Result<(SampleSet, Vec<(f64, f64)>)> {
    if m == 0 {
        return Err(KgError::InvalidParameter("need at least one point".into()));
    }
    if noise < 0.0 {
        return Err(KgError::InvalidParameter(
            "noise level must be nonnegative".into(),
        ));
    }
    let mut rng = rng_for(seed, 3);
    let t_lo = 1.5 * std::f64::consts::PI;
    let t_hi = 4.5 * std::f64::consts::PI;
    let mut out = Array2::zeros((m, 3));
    let mut intrinsic = Vec::with_capacity(m);
    for row in 0..m {
        let t: f64 = rng.gen_range(t_lo..t_hi);
        let h: f64 = rng.gen_range(0.0..21.0);
        let mut p = [t * t.cos(), h, t * t.sin()];
        if noise > 0.0 {
            for v in p.iter_mut() {
                let n: f64 = rng.sample(StandardNormal);
                *v += noise * n;
            }
        }
        for i in 0..3 {
            out[(row, i)] = p[i];
        }
        intrinsic.push((t, h));
    }
    Ok((
        SampleSet::from_points(out, SampleSource::Iid)?.with_seed(seed),
        intrinsic,
    ))
}

/// Kernel density estimate over a point cloud, exposed as the potential
/// `U = -log(rho + floor)` of a Kolmogorov backward operator
/// `L f = -grad U . grad f + Laplace f`.
#[derive(Clone, Debug)]
pub struct KdePotential {
    points: Array2<f64>,
    pub bandwidth: f64,
    pub floor: f64,
    /// Dimension used in the `(sqrt(2 pi) s)^d` normalization. Defaults to
    /// the ambient dimension; exposed because manifold data may call for
    /// the intrinsic dimension instead.
    pub norm_dim: usize,
}

impl KdePotential {
    pub fn new(samples: &SampleSet, bandwidth: f64, floor: f64) -> Result<Self> {
        if !(bandwidth > 0.0) {
            return Err(KgError::InvalidParameter(format!(
                "KDE bandwidth must be positive, got {bandwidth}"
            )));
        }
        if !(floor >= 0.0) {
            return Err(KgError::InvalidParameter(
                "KDE floor must be nonnegative".into(),
            ));
        }
        Ok(KdePotential {
            points: samples.points().clone(),
            bandwidth,
            floor,
            norm_dim: samples.dim(),
        })
    }

    pub fn with_norm_dim(mut self, norm_dim: usize) -> Self {
        self.norm_dim = norm_dim;
        self
    }

    /// Normalized gaussian-mixture density and its gradient.
    pub fn density_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let d = self.points.ncols();
        let m = self.points.nrows();
        let s2 = self.bandwidth * self.bandwidth;
        let norm = 1.0
            / (m as f64
                * ((2.0 * std::f64::consts::PI).sqrt() * self.bandwidth).powi(self.norm_dim as i32));
        let mut rho = 0.0;
        let mut grad = vec![0.0; d];
        for row in self.points.outer_iter() {
            let mut sq = 0.0;
            for i in 0..d {
                let diff = x[i] - row[i];
                sq += diff * diff;
            }
            let k = (-sq / (2.0 * s2)).exp();
            rho += k;
            for i in 0..d {
                grad[i] -= (x[i] - row[i]) / s2 * k;
            }
        }
        rho *= norm;
        for g in grad.iter_mut() {
            *g *= norm;
        }
        (rho, grad)
    }

    /// `U(x) = -log(rho + floor)` and its gradient
    /// `-grad rho / (rho + floor)`.
    pub fn potential_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (rho, drho) = self.density_and_gradient(x);
        let denom = rho + self.floor;
        let u = -denom.ln();
        let grad = drho.iter().map(|g| -g / denom).collect();
        (u, grad)
    }

    /// The backward Kolmogorov generator for this potential at unit
    /// temperature: `b = -grad U`, `sigma = sqrt(2) I`, so that
    /// `L f = -grad U . grad f + Laplace f`.
    pub fn generator(self: &std::sync::Arc<Self>) -> GeneratorSpec {
        let dim = self.points.ncols();
        let kde = std::sync::Arc::clone(self);
        let drift: crate::operators::VectorField = std::sync::Arc::new(move |x: &[f64]| {
            let (_, mut g) = kde.potential_and_gradient(x);
            for gi in &mut g {
                *gi = -*gi;
            }
            g
        });
        let sigma = crate::operators::scaled_identity(std::f64::consts::SQRT_2, dim);
        GeneratorSpec::new(dim, drift, sigma)
    }
}
