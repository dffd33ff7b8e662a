use kgedmd::pipeline::{config::*, run_experiment};

fn main() {
    for (bw, stride, eps) in [
        (0.5, 500, 1e-10),
        (0.35, 500, 1e-8),
        (0.35, 500, 1e-10),
        (0.25, 500, 1e-10),
        (0.5, 2000, 1e-8),
        (0.35, 2000, 1e-10),
        (0.25, 2000, 1e-12),
    ] {
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
        cfg.n_eigenpairs = 4;
        match run_experiment(&cfg) {
            Ok(out) => {
                let v = out.solution.real_eigenvalues();
                println!(
                    "bw={bw:4.2} stride={stride:4} eps={eps:6.0e}: {:+.4} {:+.4} {:+.4} {:+.4}",
                    v[0], v[1], v[2], v[3]
                );
            }
            Err(e) => println!("bw={bw} stride={stride}: {e}"),
        }
    }
}
