use clap::{Parser, Subcommand};
use kgedmd::error::{KgError, Result};
use kgedmd::kernels::KernelSpec;
use kgedmd::pipeline::cluster::{cluster_features, write_labels_csv};
use kgedmd::pipeline::convergence::{convergence_study, write_convergence_csv};
use kgedmd::pipeline::{run_experiment, ExperimentConfig, ExperimentReport};
use ndarray::Array2;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "kgedmd",
    about = "Kernel-based spectral analysis of Koopman generators and Schrödinger operators",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured experiment and write its report artifacts.
    Run {
        /// Path to a `key = value` config file.
        config: PathBuf,
        /// Output directory (overrides [experiment] output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigenvalue-error convergence study over a list of sample counts.
    Converge {
        config: PathBuf,
        /// Comma-separated sample counts, e.g. 250,500,1000.
        #[arg(long = "M", value_delimiter = ',')]
        m: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        /// Where to write the CSV table (default: convergence.csv next to
        /// the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cluster the samples of a finished run into metastable sets.
    Cluster {
        /// Path to a report.json written by `kgedmd run`.
        report: PathBuf,
        #[arg(short)]
        k: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
    },
    /// Check the analytic kernel derivatives against finite differences.
    ValidateKernels {
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run { config, out } => cmd_run(&config, out),
        Command::Converge {
            config,
            m,
            repeats,
            out,
        } => cmd_converge(&config, &m, repeats, out),
        Command::Cluster {
            report,
            k,
            seed,
            restarts,
        } => cmd_cluster(&report, k, seed, restarts),
        Command::ValidateKernels { step, seed } => cmd_validate_kernels(step, seed),
    }
}

fn cmd_run(config: &Path, out: Option<PathBuf>) -> Result<()> {
    let mut cfg = ExperimentConfig::from_path(config)?;
    if let Some(dir) = out {
        cfg.output_dir = Some(dir);
    }
    if cfg.output_dir.is_none() {
        cfg.output_dir = Some(PathBuf::from(format!(
            "out/{}-{}",
            cfg.system.name(),
            cfg.mode.name()
        )));
    }
    let output = run_experiment(&cfg)?;
    let r = &output.report;
    println!("system {} | mode {} | M = {} | eps = {:e}", r.system.name(), r.mode.name(), r.m, r.epsilon);
    for (i, v) in r.eigenvalues.iter().enumerate() {
        let energy = r
            .energies
            .as_ref()
            .map(|e| format!("  E{i} = {:+.6}", e[i]))
            .unwrap_or_default();
        println!(
            "  lambda{i} = {:+.6} {:+.3e}i  (residual {:.2e}){energy}",
            v.re, v.im, r.residuals[i]
        );
    }
    println!(
        "report written to {}",
        cfg.output_dir.expect("set above").join("report.json").display()
    );
    Ok(())
}

fn cmd_converge(config: &Path, m_list: &[usize], repeats: usize, out: Option<PathBuf>) -> Result<()> {
    let cfg = ExperimentConfig::from_path(config)?;
    let rows = convergence_study(&cfg, m_list, repeats)?;
    let n = rows.iter().map(|r| r.mean_abs_err.len()).max().unwrap_or(0);
    print!("{:>8}", "M");
    for l in 0..n {
        print!("{:>12}", format!("mean|e{l}|"));
    }
    println!();
    for row in &rows {
        print!("{:>8}", row.m);
        for l in 0..n {
            match row.mean_abs_err.get(l) {
                Some(v) => print!("{v:>12.4e}"),
                None => print!("{:>12}", "-"),
            }
        }
        println!();
    }
    let path = out.unwrap_or_else(|| {
        config
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join("convergence.csv")
    });
    write_convergence_csv(&path, &rows)?;
    println!("table written to {}", path.display());
    Ok(())
}

fn cmd_cluster(report_path: &Path, k: usize, seed: u64, restarts: usize) -> Result<()> {
    let text = std::fs::read_to_string(report_path)?;
    let report: ExperimentReport = serde_json::from_str(&text)?;
    let dir = report_path.parent().unwrap_or_else(|| Path::new("."));
    let values_name = report.files.get("samples_values").ok_or_else(|| {
        KgError::Config("report has no samples_values artifact".into())
    })?;
    let (features, n_funcs) = read_phi_columns(&dir.join(values_name), report.dim)?;
    if n_funcs < k {
        return Err(KgError::InvalidParameter(format!(
            "report contains {n_funcs} eigenfunctions, clustering needs {k}"
        )));
    }
    let first_k = features.slice(ndarray::s![.., ..k]).to_owned();
    let labels = cluster_features(&first_k, k, seed, restarts)?;
    let out = dir.join("labels.csv");
    write_labels_csv(&out, &labels)?;
    let mut counts = vec![0usize; k];
    for &l in &labels {
        counts[l] += 1;
    }
    println!("labels written to {} (cluster sizes: {counts:?})", out.display());
    Ok(())
}

/// Reads the `phi*` columns of a samples_values.csv. Real columns are used
/// directly; for general-mode files the `_re` part is taken and the `_im`
/// part must be negligible.
fn read_phi_columns(path: &Path, dim: usize) -> Result<(Array2<f64>, usize)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| KgError::Config("empty samples_values.csv".into()))?
        .split(',')
        .collect();
    let complex = header.iter().any(|h| h.ends_with("_im"));
    let n_cols = header.len() - dim;
    let n_funcs = if complex { n_cols / 2 } else { n_cols };
    let rows: Vec<Vec<f64>> = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<f64>()
                        .map_err(|e| KgError::Config(format!("bad value '{tok}': {e}")))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let m = rows.len();
    let mut features = Array2::zeros((m, n_funcs));
    for (i, row) in rows.iter().enumerate() {
        for j in 0..n_funcs {
            if complex {
                let re = row[dim + 2 * j];
                let im = row[dim + 2 * j + 1];
                if im.abs() > 1e-8 * (1.0 + re.abs()) {
                    return Err(KgError::InvalidParameter(format!(
                        "eigenfunction {j} has nonnegligible imaginary part; \
                         clustering needs real eigenfunctions"
                    )));
                }
                features[(i, j)] = re;
            } else {
                features[(i, j)] = row[dim + j];
            }
        }
    }
    Ok((features, n_funcs))
}

fn cmd_validate_kernels(step: f64, seed: u64) -> Result<()> {
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let kernels = [
        ("gaussian s=1.0 (d=2)", KernelSpec::gaussian(1.0, 2)?, 1e-6),
        ("gaussian s=0.5 (d=2)", KernelSpec::gaussian(0.5, 2)?, 1e-5),
        ("polynomial q=2 c=1 (d=2)", KernelSpec::polynomial(2, 1.0, 2)?, 1e-5),
        ("polynomial q=4 c=1 (d=2)", KernelSpec::polynomial(4, 1.0, 2)?, 1e-5),
    ];
    let mut all_ok = true;
    println!("{:<28} {:>14} {:>14}  result", "kernel", "max grad err", "max hess err");
    for (name, kernel, tol) in &kernels {
        let mut grad_err = 0.0_f64;
        let mut hess_err = 0.0_f64;
        for _ in 0..100 {
            let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let y: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let (g, h) = kernel.fd_validate(&x, &y, step)?;
            grad_err = grad_err.max(g);
            hess_err = hess_err.max(h);
        }
        let ok = grad_err < *tol && hess_err < *tol * 10.0;
        all_ok &= ok;
        println!(
            "{:<28} {:>14.3e} {:>14.3e}  {}",
            name,
            grad_err,
            hess_err,
            if ok { "ok" } else { "FAIL" }
        );
    }
    if !all_ok {
        return Err(KgError::Solver(
            "kernel derivative validation failed".into(),
        ));
    }
    Ok(())
}
