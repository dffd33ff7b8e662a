//! Artifact writers for finished experiments.

use super::experiment::ExperimentOutput;
use crate::eig::SolveMode;
use crate::error::Result;
use crate::io::write_samples_csv;
use ndarray::Array2;
use ndarray_linalg::c64;
use serde::{Deserialize, Serialize};
use std::io::{BufWriter, Write};
use std::path::Path;

/// Contents of `eigenvalues.json`; deliberately small so seeded reruns can
/// be compared byte for byte.
#[derive(Serialize, Deserialize)]
pub struct EigenvaluesFile {
    pub eigenvalues: Vec<super::experiment::ComplexValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energies: Option<Vec<f64>>,
    pub epsilon: f64,
    pub seed: u64,
}

fn value_columns(mode: SolveMode, n: usize) -> Vec<String> {
    let mut cols = Vec::new();
    for i in 0..n {
        match mode {
            SolveMode::Symmetric => cols.push(format!("phi{i}")),
            SolveMode::General => {
                cols.push(format!("phi{i}_re"));
                cols.push(format!("phi{i}_im"));
            }
        }
    }
    cols
}

fn write_values_csv(
    path: &Path,
    coords: &Array2<f64>,
    values: &[Vec<c64>],
    mode: SolveMode,
) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    let dim = coords.ncols();
    let mut header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    header.extend(value_columns(mode, values.len()));
    writeln!(w, "{}", header.join(","))?;
    for row in 0..coords.nrows() {
        let mut fields: Vec<String> = coords
            .row(row)
            .iter()
            .map(|v| format!("{v:.17e}"))
            .collect();
        for vals in values {
            match mode {
                SolveMode::Symmetric => fields.push(format!("{:.17e}", vals[row].re)),
                SolveMode::General => {
                    fields.push(format!("{:.17e}", vals[row].re));
                    fields.push(format!("{:.17e}", vals[row].im));
                }
            }
        }
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `samples.csv`, `samples_values.csv`, `eigenfunctions.csv` (when a
/// grid was requested), `intrinsic.csv` (Swiss roll), `eigenvalues.json`,
/// and `config_echo.ini`, updating the report's file map.
pub fn write_outputs(output: &mut ExperimentOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mode = output.solution.mode;

    write_samples_csv(&dir.join("samples.csv"), &output.samples)?;
    output
        .report
        .files
        .insert("samples".into(), "samples.csv".into());

    let sample_vals: Vec<Vec<c64>> = output
        .solution
        .sample_values
        .iter()
        .map(|v| v.to_vec())
        .collect();
    write_values_csv(
        &dir.join("samples_values.csv"),
        output.samples.points(),
        &sample_vals,
        mode,
    )?;
    output
        .report
        .files
        .insert("samples_values".into(), "samples_values.csv".into());

    if let Some(grid) = &output.grid_points {
        // a samples-grid reuses the precomputed values
        let values: Vec<Vec<c64>> = if grid == output.samples.points() {
            sample_vals
        } else {
            (0..output.solution.len())
                .map(|i| {
                    grid.outer_iter()
                        .map(|p| {
                            output
                                .solution
                                .eval_eigenfunction(i, p.as_slice().expect("row-major"))
                        })
                        .collect::<Result<Vec<c64>>>()
                })
                .collect::<Result<_>>()?
        };
        write_values_csv(&dir.join("eigenfunctions.csv"), grid, &values, mode)?;
        output
            .report
            .files
            .insert("eigenfunctions".into(), "eigenfunctions.csv".into());
    }

    if let Some(intrinsic) = &output.intrinsic {
        let file = std::fs::File::create(dir.join("intrinsic.csv"))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "t,h")?;
        for (t, h) in intrinsic {
            writeln!(w, "{t:.17e},{h:.17e}")?;
        }
        w.flush()?;
        output
            .report
            .files
            .insert("intrinsic".into(), "intrinsic.csv".into());
    }

    let eigen_file = EigenvaluesFile {
        eigenvalues: output.report.eigenvalues.clone(),
        energies: output.report.energies.clone(),
        epsilon: output.report.epsilon,
        seed: output.report.seed,
    };
    std::fs::write(
        dir.join("eigenvalues.json"),
        serde_json::to_string_pretty(&eigen_file)? + "\n",
    )?;
    output
        .report
        .files
        .insert("eigenvalues".into(), "eigenvalues.json".into());

    std::fs::write(dir.join("config_echo.ini"), &output.report.config_echo)?;
    output
        .report
        .files
        .insert("config_echo".into(), "config_echo.ini".into());
    Ok(())
}
