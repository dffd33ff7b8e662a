//! Plain binary and CSV export for matrices and sample sets.
//!
//! The binary layout is the magic bytes `KGDM`, a little-endian `u32` row
//! count, a little-endian `u32` column count, and then row-major `f64`
//! values, also little-endian.

use crate::error::{KgError, Result};
use crate::gram::{SampleSet, SampleSource};
use ndarray::{Array2, ArrayView2};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"KGDM";

pub fn write_matrix_binary(path: &Path, matrix: ArrayView2<f64>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC)?;
    w.write_all(&(matrix.nrows() as u32).to_le_bytes())?;
    w.write_all(&(matrix.ncols() as u32).to_le_bytes())?;
    for row in matrix.outer_iter() {
        for v in row.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_binary(path: &Path) -> Result<Array2<f64>> {
    let file = std::fs::File::open(path)?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(KgError::InvalidParameter(format!(
            "{} is not a KGDM matrix file",
            path.display()
        )));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    let rows = u32::from_le_bytes(u32buf) as usize;
    r.read_exact(&mut u32buf)?;
    let cols = u32::from_le_bytes(u32buf) as usize;
    let mut data = Vec::with_capacity(rows * cols);
    let mut f64buf = [0u8; 8];
    for _ in 0..rows * cols {
        r.read_exact(&mut f64buf)?;
        data.push(f64::from_le_bytes(f64buf));
    }
    Array2::from_shape_vec((rows, cols), data)
        .map_err(|e| KgError::InvalidParameter(format!("corrupt matrix file: {e}")))
}

pub fn write_matrix_csv(path: &Path, matrix: ArrayView2<f64>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    for row in matrix.outer_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// One point per row, plain `x0,x1,...` columns.
pub fn write_samples_csv(path: &Path, samples: &SampleSet) -> Result<()> {
    write_matrix_csv(path, samples.points().view())
}

pub fn read_samples_csv(path: &Path, source: SampleSource) -> Result<SampleSet> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut data: Vec<f64> = Vec::new();
    let mut rows = 0;
    let mut cols = 0;
    for line in reader.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let values: Vec<f64> = trimmed
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|e| {
                    KgError::InvalidParameter(format!("bad CSV value '{tok}': {e}"))
                })
            })
            .collect::<Result<_>>()?;
        if rows == 0 {
            cols = values.len();
        } else if values.len() != cols {
            return Err(KgError::InvalidParameter(format!(
                "ragged CSV: row {rows} has {} values, expected {cols}",
                values.len()
            )));
        }
        data.extend(values);
        rows += 1;
    }
    let points = Array2::from_shape_vec((rows, cols), data)
        .map_err(|e| KgError::InvalidParameter(format!("corrupt CSV: {e}")))?;
    SampleSet::from_points(points, source)
}
