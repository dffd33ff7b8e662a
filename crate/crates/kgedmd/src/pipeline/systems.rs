//! Built-in benchmark systems selectable by id: the Ornstein–Uhlenbeck
//! process, a quadruple-well diffusion, the quantum harmonic oscillator,
//! and the hydrogen atom (all with unit physical constants).

use super::config::{SystemId, SystemParams};
use crate::error::{KgError, Result};
use crate::operators::{
    DriftDiffusionSpec, MatrixField, ScalarField, SchrodingerSpec, VectorField,
};
use ndarray::Array2;
use std::sync::Arc;

/// Strictly positive ground state `psi_0 = exp(-eta)` of a Schrödinger
/// operator, used by the SDE-of-Schrödinger route.
pub struct GroundState {
    pub eta: ScalarField,
    pub grad_eta: VectorField,
    pub energy: f64,
}

/// Ornstein–Uhlenbeck system: `V = x^2/2` with the configured temperature
/// (`alpha = 1`). Eigenvalues of `-L` are `0, 1, 2, ...` independent of the
/// temperature.
pub fn ou_system(params: &SystemParams) -> Result<DriftDiffusionSpec> {
    let hess: MatrixField = Arc::new(|_: &[f64]| Array2::eye(1));
    Ok(DriftDiffusionSpec::new(
        1,
        Arc::new(|x: &[f64]| 0.5 * x[0] * x[0]),
        Arc::new(|x: &[f64]| vec![x[0]]),
        params.beta_inv,
    )?
    .with_hessian(hess))
}

/// Quadruple-well system
/// `V(x) = gamma1 (x1^2 - well1^2)^2 + gamma2 (x2^2 - well2^2)^2`
/// with wells in the four quadrants at `(+-well1, +-well2)`.
pub fn quadwell_system(params: &SystemParams) -> Result<DriftDiffusionSpec> {
    let (g1, w1, g2, w2) = (
        params.gamma1,
        params.well1,
        params.gamma2,
        params.well2,
    );
    if !(g1 > 0.0 && g2 > 0.0 && w1 > 0.0 && w2 > 0.0) {
        return Err(KgError::InvalidParameter(
            "quadwell coefficients must be positive".into(),
        ));
    }
    let potential: ScalarField = Arc::new(move |x: &[f64]| {
        let u = x[0] * x[0] - w1 * w1;
        let v = x[1] * x[1] - w2 * w2;
        g1 * u * u + g2 * v * v
    });
    let grad: VectorField = Arc::new(move |x: &[f64]| {
        vec![
            4.0 * g1 * x[0] * (x[0] * x[0] - w1 * w1),
            4.0 * g2 * x[1] * (x[1] * x[1] - w2 * w2),
        ]
    });
    let hess: MatrixField = Arc::new(move |x: &[f64]| {
        let mut h = Array2::zeros((2, 2));
        h[(0, 0)] = 4.0 * g1 * (3.0 * x[0] * x[0] - w1 * w1);
        h[(1, 1)] = 4.0 * g2 * (3.0 * x[1] * x[1] - w2 * w2);
        h
    });
    Ok(DriftDiffusionSpec::new(2, potential, grad, params.beta_inv)?.with_hessian(hess))
}

/// Quantum harmonic oscillator, `hbar = m = omega = 1`:
/// `H = -1/2 Laplace + x^2/2`, energies `E_l = l + 1/2`, ground state
/// `psi_0 = exp(-x^2/2)` (up to normalization).
pub fn qho_spec() -> Result<(SchrodingerSpec, GroundState)> {
    let spec = SchrodingerSpec::new(1, 1.0, 1.0, Arc::new(|x: &[f64]| 0.5 * x[0] * x[0]))?;
    let ground = GroundState {
        eta: Arc::new(|x: &[f64]| 0.5 * x[0] * x[0]),
        grad_eta: Arc::new(|x: &[f64]| vec![x[0]]),
        energy: 0.5,
    };
    Ok((spec, ground))
}

/// Hydrogen atom with unit constants: `H = -1/2 Laplace - 1/||x||` in three
/// dimensions, energies `-1/(2 n^2)` with multiplicity `n^2`, ground state
/// `psi_0 ~ exp(-||x||)`.
pub fn hydrogen_spec() -> Result<(SchrodingerSpec, GroundState)> {
    let w: ScalarField = Arc::new(|x: &[f64]| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        -1.0 / r
    });
    let spec = SchrodingerSpec::new(3, 1.0, 1.0, w)?;
    let ground = GroundState {
        eta: Arc::new(|x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt()),
        // the gradient x/||x|| is left 0 at the (measure-zero) origin so
        // trajectories stay defined
        grad_eta: Arc::new(|x: &[f64]| {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r < 1e-12 {
                vec![0.0; x.len()]
            } else {
                x.iter().map(|v| v / r).collect()
            }
        }),
        energy: -0.5,
    };
    Ok((spec, ground))
}

/// Analytic reference eigenvalues of the operator the pipeline estimates
/// (`-L` for generator modes, `H` for Schrödinger modes). Available for the
/// analytically solvable systems only.
pub fn reference_eigenvalues(
    system: SystemId,
    mode_is_schrodinger: bool,
    n: usize,
) -> Option<Vec<f64>> {
    match system {
        SystemId::Ou => Some((0..n).map(|l| l as f64).collect()),
        SystemId::Qho => {
            if mode_is_schrodinger {
                Some((0..n).map(|l| l as f64 + 0.5).collect())
            } else {
                // eigenvalues of -L for the transformed OU process
                Some((0..n).map(|l| l as f64).collect())
            }
        }
        SystemId::Hydrogen => {
            let mut vals = Vec::with_capacity(n);
            let mut shell = 1u32;
            'outer: loop {
                let e = -0.5 / (shell as f64 * shell as f64);
                for _ in 0..shell * shell {
                    let value = if mode_is_schrodinger { e } else { e + 0.5 };
                    vals.push(value);
                    if vals.len() == n {
                        break 'outer;
                    }
                }
                shell += 1;
            }
            Some(vals)
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::generator_as_t;

    fn default_params() -> SystemParams {
        SystemParams {
            beta_inv: 0.5,
            gamma1: 0.62,
            well1: 1.0,
            gamma2: 1.3,
            well2: 0.6,
            reversible: false,
        }
    }

    #[test]
    fn ou_drift_is_minus_x() {
        let dd = ou_system(&default_params()).unwrap();
        let gen = dd.to_generator();
        assert_eq!(gen.drift(&[1.5]), vec![-1.5]);
        let t = generator_as_t(&gen);
        assert_eq!((t.c)(&[1.5]), vec![1.5]);
        // sigma = sqrt(2 * 0.5) = 1
        assert!(((t.a)(&[0.0])[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quadwell_minima_at_well_corners() {
        let p = default_params();
        let dd = quadwell_system(&p).unwrap();
        let g = dd.grad_potential(&[p.well1, p.well2]);
        assert!(g[0].abs() < 1e-14 && g[1].abs() < 1e-14);
        assert!(dd.potential(&[p.well1, p.well2]).abs() < 1e-14);
        assert!(dd.potential(&[0.0, 0.0]) > 0.0);
    }

    #[test]
    fn hydrogen_potential_and_ground_state() {
        let (spec, ground) = hydrogen_spec().unwrap();
        assert!(((spec.w)(&[0.0, 3.0, 4.0]) + 0.2).abs() < 1e-15);
        assert_eq!(ground.energy, -0.5);
        assert_eq!((ground.grad_eta)(&[0.0, 0.0, 0.0]), vec![0.0, 0.0, 0.0]);
        let g = (ground.grad_eta)(&[3.0, 0.0, 4.0]);
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[2] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn hydrogen_reference_multiplicities() {
        let vals = reference_eigenvalues(SystemId::Hydrogen, true, 6).unwrap();
        assert_eq!(vals[0], -0.5);
        for v in &vals[1..5] {
            assert_eq!(*v, -0.125);
        }
        assert!((vals[5] + 1.0 / 18.0).abs() < 1e-15);
    }

    #[test]
    fn qho_reference() {
        let vals = reference_eigenvalues(SystemId::Qho, true, 4).unwrap();
        assert_eq!(vals, vec![0.5, 1.5, 2.5, 3.5]);
        let gen_vals = reference_eigenvalues(SystemId::Qho, false, 3).unwrap();
        assert_eq!(gen_vals, vec![0.0, 1.0, 2.0]);
    }
}
