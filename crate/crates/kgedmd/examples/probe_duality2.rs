use kgedmd::pipeline::{config::*, run_experiment};

fn main() {
    for (bw, stride, eps) in [(0.5, 500, 1e-10), (0.7, 500, 1e-10), (1.0, 500, 1e-10), (0.7, 500, 1e-12), (1.0, 500, 1e-12), (1.3, 500, 1e-12)] {
        let mut worst = [0.0_f64; 4];
        let mut mean = [0.0_f64; 4];
        let mut pass = 0;
        let seeds: Vec<u64> = (0..8).map(|i| 42 + i * 1111).collect();
        for &seed in &seeds {
            let mut cfg = ExperimentConfig::defaults(SystemId::Qho);
            cfg.mode = Mode::SdeOfSchrodinger;
            cfg.sampling.method = SamplingMethod::Trajectory;
            cfg.sampling.m = 2000;
            cfg.sampling.dt = 1e-3;
            cfg.sampling.burn_in = 10_000;
            cfg.sampling.stride = stride;
            cfg.sampling.x0 = vec![0.0];
            cfg.bandwidth = bw;
            cfg.epsilon = eps;
            cfg.seed = seed;
            cfg.n_eigenpairs = 4;
            let out = run_experiment(&cfg).unwrap();
            let v = out.solution.real_eigenvalues();
            let mut ok = true;
            for l in 0..4 {
                let err = (v[l] - l as f64).abs();
                mean[l] += err / seeds.len() as f64;
                worst[l] = worst[l].max(err);
                if err > 0.05 { ok = false; }
            }
            if ok { pass += 1; }
        }
        println!(
            "bw={bw} stride={stride} eps={eps:.0e}: pass {pass}/8, mean err {:?}, worst {:?}",
            mean.map(|v| (v * 1000.0).round() / 1000.0),
            worst.map(|v| (v * 1000.0).round() / 1000.0)
        );
    }
}
