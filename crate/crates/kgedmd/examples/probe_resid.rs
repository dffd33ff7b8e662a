use kgedmd::eig::{rayleigh_residual, solve_general};
use kgedmd::gram::{GramSystem, SampleSet, SampleSource};
use kgedmd::kernels::KernelSpec;
use kgedmd::operators::SchrodingerSpec;
use ndarray::Array2;
use rand::prelude::*;
use std::sync::Arc;

fn main() {
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(42);
    let pts = Array2::from_shape_fn((100, 1), |_| rng.gen_range(-5.0..5.0));
    let mut samples = SampleSet::from_points(pts, SampleSource::Iid).unwrap();
    let qho = SchrodingerSpec::new(1, 1.0, 1.0, Arc::new(|x: &[f64]| 0.5 * x[0] * x[0])).unwrap();
    samples.cache_t_coefficients(&qho.coefficients()).unwrap();
    let kernel = KernelSpec::gaussian(1.0, 1).unwrap();
    let system = GramSystem::general(kernel, Arc::new(samples)).unwrap();
    let sol = solve_general(&system, 1e-8, 6).unwrap();
    for i in 0..sol.len() {
        let r = rayleigh_residual(&sol, i, &system).unwrap();
        println!("l{i} = {:+.6}  resid = {:.3e}", sol.eigenvalues[i].re, r);
    }
}
