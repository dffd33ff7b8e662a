//! Metastable-set extraction: k-means over the dominant eigenfunction
//! values at the samples.

use crate::eig::EigenSolution;
use crate::error::{KgError, Result};
use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

/// Clusters the samples into `k` sets using the first `k` eigenfunctions
/// as coordinates. k-means++ seeded from the RNG, the best of `restarts`
/// runs by inertia; deterministic for a fixed seed.
pub fn cluster_metastable(
    sol: &EigenSolution,
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<Vec<usize>> {
    let m = sol.samples.len();
    if k == 0 || k > m {
        return Err(KgError::InvalidParameter(format!(
            "k = {k} must be between 1 and the number of samples {m}"
        )));
    }
    if sol.len() < k {
        return Err(KgError::InvalidParameter(format!(
            "clustering needs at least {k} eigenpairs, solution has {}",
            sol.len()
        )));
    }
    for i in 0..k {
        let v = sol.eigenvalues[i];
        if v.im.abs() > 1e-8 * (1.0 + v.re.abs()) {
            return Err(KgError::InvalidParameter(format!(
                "eigenpair {i} is complex ({v}); clustering needs real eigenpairs"
            )));
        }
    }
    let mut features = Array2::zeros((m, k));
    for j in 0..k {
        for (i, v) in sol.sample_values[j].iter().enumerate() {
            features[(i, j)] = v.re;
        }
    }
    cluster_features(&features, k, seed, restarts)
}

/// k-means over an explicit feature matrix (rows = samples); used by the
/// CLI when clustering a written report.
pub fn cluster_features(
    features: &Array2<f64>,
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<Vec<usize>> {
    if k == 0 || k > features.nrows() {
        return Err(KgError::InvalidParameter(format!(
            "k = {k} must be between 1 and the number of samples {}",
            features.nrows()
        )));
    }
    Ok(kmeans(features, k, seed, restarts.max(1)))
}

fn kmeans(features: &Array2<f64>, k: usize, seed: u64, restarts: usize) -> Vec<usize> {
    let mut best: Option<(f64, Vec<usize>)> = None;
    for restart in 0..restarts {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(restart as u64 + 10);
        let (labels, inertia) = lloyd(features, k, &mut rng);
        if best.as_ref().map_or(true, |(b, _)| inertia < *b) {
            best = Some((inertia, labels));
        }
    }
    best.expect("at least one restart").1
}

fn lloyd(features: &Array2<f64>, k: usize, rng: &mut ChaCha12Rng) -> (Vec<usize>, f64) {
    let (m, d) = (features.nrows(), features.ncols());
    let mut centers = kmeans_pp_init(features, k, rng);
    let mut labels = vec![0usize; m];
    for _ in 0..200 {
        let mut changed = false;
        for i in 0..m {
            let mut best_j = 0;
            let mut best_d = f64::INFINITY;
            for j in 0..k {
                let mut dist = 0.0;
                for c in 0..d {
                    let diff = features[(i, c)] - centers[(j, c)];
                    dist += diff * diff;
                }
                if dist < best_d {
                    best_d = dist;
                    best_j = j;
                }
            }
            if labels[i] != best_j {
                labels[i] = best_j;
                changed = true;
            }
        }
        let mut counts = vec![0usize; k];
        let mut sums = Array2::<f64>::zeros((k, d));
        for i in 0..m {
            counts[labels[i]] += 1;
            for c in 0..d {
                sums[(labels[i], c)] += features[(i, c)];
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                for c in 0..d {
                    centers[(j, c)] = sums[(j, c)] / counts[j] as f64;
                }
            } else {
                // re-seed an empty cluster at the point farthest from its center
                let far = (0..m)
                    .max_by(|&a, &b| {
                        let da = point_center_dist(features, &centers, &labels, a);
                        let db = point_center_dist(features, &centers, &labels, b);
                        da.partial_cmp(&db).expect("finite")
                    })
                    .expect("nonempty");
                for c in 0..d {
                    centers[(j, c)] = features[(far, c)];
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut inertia = 0.0;
    for i in 0..m {
        inertia += point_center_dist(features, &centers, &labels, i);
    }
    (labels, inertia)
}

fn point_center_dist(
    features: &Array2<f64>,
    centers: &Array2<f64>,
    labels: &[usize],
    i: usize,
) -> f64 {
    let mut dist = 0.0;
    for c in 0..features.ncols() {
        let diff = features[(i, c)] - centers[(labels[i], c)];
        dist += diff * diff;
    }
    dist
}

fn kmeans_pp_init(features: &Array2<f64>, k: usize, rng: &mut ChaCha12Rng) -> Array2<f64> {
    let (m, d) = (features.nrows(), features.ncols());
    let mut centers = Array2::zeros((k, d));
    let first = rng.gen_range(0..m);
    for c in 0..d {
        centers[(0, c)] = features[(first, c)];
    }
    let mut min_dist: Vec<f64> = (0..m)
        .map(|i| {
            let mut dist = 0.0;
            for c in 0..d {
                let diff = features[(i, c)] - centers[(0, c)];
                dist += diff * diff;
            }
            dist
        })
        .collect();
    for j in 1..k {
        let total: f64 = min_dist.iter().sum();
        let idx = if total <= 0.0 {
            rng.gen_range(0..m)
        } else {
            let mut target = rng.gen_range(0.0..total);
            let mut pick = m - 1;
            for (i, &w) in min_dist.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        };
        for c in 0..d {
            centers[(j, c)] = features[(idx, c)];
        }
        for i in 0..m {
            let mut dist = 0.0;
            for c in 0..d {
                let diff = features[(i, c)] - centers[(j, c)];
                dist += diff * diff;
            }
            if dist < min_dist[i] {
                min_dist[i] = dist;
            }
        }
    }
    centers
}

/// Writes `labels.csv`, one integer label per line.
pub fn write_labels_csv(path: &std::path::Path, labels: &[usize]) -> Result<()> {
    use std::io::Write;
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "label")?;
    for l in labels {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    Ok(())
}
