//! Empirical convergence study: eigenvalue error against the analytic
//! reference as the sample count grows.

use super::config::{ExperimentConfig, Mode};
use super::experiment::run_experiment;
use super::systems::reference_eigenvalues;
use crate::error::{KgError, Result};

#[derive(Clone, Debug)]
pub struct ConvergenceRow {
    pub m: usize,
    /// Mean absolute eigenvalue error per index, over the repeats.
    pub mean_abs_err: Vec<f64>,
    pub std_abs_err: Vec<f64>,
}

fn derived_seed(base: u64, m_index: usize, repeat: usize) -> u64 {
    base.wrapping_add(
        0x9E37_79B9_7F4A_7C15_u64.wrapping_mul((m_index as u64 + 1) * 1000 + repeat as u64 + 1),
    )
}

/// Runs the configured experiment at each sample count in `m_list`,
/// `repeats` times with derived seeds, and tabulates the absolute errors
/// of the first `n_eigenpairs` eigenvalues against the analytic reference.
/// Only systems with known spectra (ou, qho, hydrogen) are supported.
pub fn convergence_study(
    cfg: &ExperimentConfig,
    m_list: &[usize],
    repeats: usize,
) -> Result<Vec<ConvergenceRow>> {
    if m_list.is_empty() || repeats == 0 {
        return Err(KgError::InvalidParameter(
            "need at least one sample count and one repeat".into(),
        ));
    }
    let schrodinger_scale = matches!(cfg.mode, Mode::General | Mode::Schrodinger);
    let reference = reference_eigenvalues(cfg.system, schrodinger_scale, cfg.n_eigenpairs)
        .ok_or_else(|| {
            KgError::Config(format!(
                "no analytic reference spectrum for system '{}'",
                cfg.system.name()
            ))
        })?;

    let mut rows = Vec::with_capacity(m_list.len());
    for (mi, &m) in m_list.iter().enumerate() {
        let mut errs: Vec<Vec<f64>> = Vec::with_capacity(repeats);
        for rep in 0..repeats {
            let mut run_cfg = cfg.clone();
            run_cfg.sampling.m = m;
            run_cfg.output_dir = None;
            run_cfg.grid.kind = super::config::GridKind::None;
            run_cfg.seed = derived_seed(cfg.seed, mi, rep);
            let out = run_experiment(&run_cfg)?;
            let vals = out.solution.real_eigenvalues();
            let n = reference.len().min(vals.len());
            errs.push(
                (0..n)
                    .map(|l| (vals[l] - reference[l]).abs())
                    .collect(),
            );
        }
        let n = errs.iter().map(|e| e.len()).min().unwrap_or(0);
        let mut mean = vec![0.0; n];
        let mut std = vec![0.0; n];
        for l in 0..n {
            let vals: Vec<f64> = errs.iter().map(|e| e[l]).collect();
            let mu = vals.iter().sum::<f64>() / vals.len() as f64;
            mean[l] = mu;
            if vals.len() > 1 {
                let var = vals.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>()
                    / (vals.len() - 1) as f64;
                std[l] = var.sqrt();
            }
        }
        rows.push(ConvergenceRow {
            m,
            mean_abs_err: mean,
            std_abs_err: std,
        });
    }
    Ok(rows)
}

/// Number of increases of the mean error of eigenvalue `l` along the rows
/// (0 for a monotone trend).
pub fn count_inversions(rows: &[ConvergenceRow], l: usize) -> usize {
    rows.windows(2)
        .filter(|w| {
            l < w[0].mean_abs_err.len()
                && l < w[1].mean_abs_err.len()
                && w[1].mean_abs_err[l] > w[0].mean_abs_err[l]
        })
        .count()
}

/// Writes the study as CSV: one row per sample count.
pub fn write_convergence_csv(path: &std::path::Path, rows: &[ConvergenceRow]) -> Result<()> {
    use std::io::Write;
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    let n = rows.iter().map(|r| r.mean_abs_err.len()).max().unwrap_or(0);
    let mut header = vec!["m".to_string()];
    for l in 0..n {
        header.push(format!("mean_err_{l}"));
        header.push(format!("std_err_{l}"));
    }
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let mut fields = vec![row.m.to_string()];
        for l in 0..n {
            fields.push(
                row.mean_abs_err
                    .get(l)
                    .map_or(String::from(""), |v| format!("{v:.6e}")),
            );
            fields.push(
                row.std_abs_err
                    .get(l)
                    .map_or(String::from(""), |v| format!("{v:.6e}")),
            );
        }
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()?;
    Ok(())
}
