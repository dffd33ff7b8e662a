use kgedmd::eig::solve_general;
use kgedmd::gram::{GramSystem, SampleSet, SampleSource};
use kgedmd::kernels::KernelSpec;
use kgedmd::operators::{constant_matrix, generator_as_t, GeneratorSpec, SchrodingerSpec};
use ndarray::{array, Array2};
use std::sync::Arc;

fn report(name: &str, system: &GramSystem, eps: f64, m: usize) {
    let sol = solve_general(system, eps, m).unwrap();
    println!("--- {name} (eps = {eps:e}) ---");
    let trm = system.g0.diag().sum() / m as f64;
    let mut shown = 0;
    for i in 0..sol.len() {
        let v = sol.eigenvalues[i];
        let u = &sol.coefficients[i];
        let g0u = sol.values_at_samples(i).unwrap();
        let unorm = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let g0u_norm = g0u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mass = g0u_norm / unorm / trm;
        if mass > 1e-6 {
            println!("  [{i}] {:+.6} {:+.2e}i  mass={:.3e}", v.re, v.im, mass);
            shown += 1;
            if shown >= 8 { break; }
        }
    }
}

fn main() {
    let pts = Array2::from_shape_fn((200, 1), |(i, _)| -4.0 + 8.0 * i as f64 / 199.0);
    let mut samples = SampleSet::from_points(pts, SampleSource::Grid).unwrap();
    let gen = GeneratorSpec::new(1, Arc::new(|x: &[f64]| vec![-x[0]]), constant_matrix(array![[1.0]]));
    samples.cache_t_coefficients(&generator_as_t(&gen)).unwrap();
    let kernel = KernelSpec::gaussian(1.0, 1).unwrap();
    let system = GramSystem::general(kernel, Arc::new(samples)).unwrap();
    report("OU grid M=200", &system, 1e-8, 200);

    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(42);
    let pts = Array2::from_shape_fn((100, 1), |_| rng.gen_range(-5.0..5.0));
    let mut samples = SampleSet::from_points(pts, SampleSource::Iid).unwrap();
    let qho = SchrodingerSpec::new(1, 1.0, 1.0, Arc::new(|x: &[f64]| 0.5 * x[0] * x[0])).unwrap();
    samples.cache_t_coefficients(&qho.coefficients()).unwrap();
    let kernel = KernelSpec::gaussian(1.0, 1).unwrap();
    let system = GramSystem::general(kernel, Arc::new(samples)).unwrap();
    report("QHO M=100", &system, 1e-8, 100);
}
