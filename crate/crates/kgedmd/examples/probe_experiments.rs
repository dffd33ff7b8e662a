use kgedmd::pipeline::{config::*, run_experiment};

fn show(name: &str, cfg: &ExperimentConfig) {
    let t = std::time::Instant::now();
    match run_experiment(cfg) {
        Ok(out) => {
            let vals: Vec<String> = out
                .report
                .eigenvalues
                .iter()
                .map(|v| format!("{:+.4}{:+.1e}i", v.re, v.im))
                .collect();
            println!("{name} [{:.2?}] M={} -> {}", t.elapsed(), out.report.m, vals.join(", "));
            if let Some(en) = &out.report.energies {
                let es: Vec<String> = en.iter().map(|e| format!("{e:+.4}")).collect();
                println!("  energies: {}", es.join(", "));
            }
        }
        Err(e) => println!("{name} FAILED: {e}"),
    }
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "fast".into());
    match which.as_str() {
        "fast" => {
            // criterion 1: QHO
            let mut cfg = ExperimentConfig::defaults(SystemId::Qho);
            cfg.n_eigenpairs = 6;
            show("qho general M=100", &cfg);

            // criterion 2: OU duality at M=2000
            let mut cfg = ExperimentConfig::defaults(SystemId::Qho);
            cfg.mode = Mode::SdeOfSchrodinger;
            cfg.sampling.method = SamplingMethod::Trajectory;
            cfg.sampling.m = 2000;
            cfg.sampling.dt = 1e-3;
            cfg.sampling.burn_in = 10_000;
            cfg.sampling.stride = 500;
            cfg.sampling.x0 = vec![0.0];
            cfg.bandwidth = 1.0;
            cfg.n_eigenpairs = 5;
            show("qho sde-of-schrodinger M=2000 s=1.0", &cfg);
            cfg.bandwidth = 0.5;
            show("qho sde-of-schrodinger M=2000 s=0.5", &cfg);
        }
        "quadwell" => {
            let mut cfg = ExperimentConfig::defaults(SystemId::Quadwell);
            cfg.n_eigenpairs = 6;
            show("quadwell symmetric M=5000 s=0.5", &cfg);
        }
        "hydrogen" => {
            let mut cfg = ExperimentConfig::defaults(SystemId::Hydrogen);
            cfg.n_eigenpairs = 10;
            show("hydrogen schrodinger M=5000 s=2", &cfg);
        }
        other => println!("unknown probe '{other}'"),
    }
}
