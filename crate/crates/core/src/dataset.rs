//! Evaluation data: uniform sampling, per-feature statistics, k-means
//! background summarization and lossless CSV round-tripping.

use std::io::{BufRead, Write};

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::stream;

/// Linear-interpolation quantile at position `(n - 1) q` of the sorted values.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    let pos = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: f64,
    /// Population standard deviation (divides by n).
    pub std: f64,
    pub q1: f64,
    pub q3: f64,
}

impl FeatureStats {
    pub fn of(column: ArrayView1<'_, f64>) -> Self {
        let n = column.len() as f64;
        let mean = column.sum() / n;
        let var = column.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let mut sorted = column.to_vec();
        sorted.sort_by(f64::total_cmp);
        FeatureStats {
            mean,
            std: var.sqrt(),
            q1: quantile_sorted(&sorted, 0.25),
            q3: quantile_sorted(&sorted, 0.75),
        }
    }
}

/// An `n x d` sample matrix with per-feature statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    stats: Vec<FeatureStats>,
}

impl Dataset {
    pub fn new(x: Array2<f64>) -> Self {
        let stats = x.columns().into_iter().map(FeatureStats::of).collect();
        Dataset { x, stats }
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn row(&self, r: usize) -> Vec<f64> {
        self.x.row(r).to_vec()
    }

    pub fn stats(&self) -> &[FeatureStats] {
        &self.stats
    }

    pub fn means(&self) -> Vec<f64> {
        self.stats.iter().map(|s| s.mean).collect()
    }

    pub fn stds(&self) -> Vec<f64> {
        self.stats.iter().map(|s| s.std).collect()
    }

    /// Row-major CSV with 17 significant digits per value and no header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for row in self.x.rows() {
            let line: Vec<String> = row.iter().map(|v| format_f64(*v)).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self, String> {
        let mut values = Vec::new();
        let mut ncols = None;
        let mut nrows = 0;
        for (lineno, line) in input.lines().enumerate() {
            let line = line.map_err(|e| e.to_string())?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Result<Vec<f64>, _> = line.split(',').map(|t| t.trim().parse::<f64>()).collect();
            let row = row.map_err(|e| format!("line {}: {e}", lineno + 1))?;
            match ncols {
                None => ncols = Some(row.len()),
                Some(c) if c != row.len() => {
                    return Err(format!("line {}: expected {c} columns, found {}", lineno + 1, row.len()))
                }
                _ => {}
            }
            values.extend(row);
            nrows += 1;
        }
        let ncols = ncols.ok_or_else(|| "empty dataset".to_string())?;
        let x = Array2::from_shape_vec((nrows, ncols), values).map_err(|e| e.to_string())?;
        Ok(Dataset::new(x))
    }
}

/// 17 significant digits, enough for a lossless round trip.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn sample_size(d: usize) -> usize {
    (500.0 * (d as f64).sqrt()).ceil() as usize
}

/// `ceil(500 sqrt(d))` i.i.d. rows from `U(-1, 1)^d`.
pub fn sample_dataset(d: usize, seed: u64) -> Dataset {
    assert!(d >= 1, "d must be at least 1");
    let n = sample_size(d);
    let mut rng = stream(seed, 0);
    let mut x = Array2::from_shape_simple_fn((n, d), || rng.random_range(-1.0..1.0));
    // a constant column would give sigma = 0; redraw it
    for i in 0..d {
        while n > 1 && x.column(i).iter().all(|&v| v == x[[0, i]]) {
            x.column_mut(i).mapv_inplace(|_| rng.random_range(-1.0..1.0));
        }
    }
    Dataset::new(x)
}

pub const KMEANS_MAX_ITER: usize = 100;
pub const KMEANS_TOL: f64 = 1e-6;

/// Result of Lloyd's k-means.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansSummary {
    pub centroids: Array2<f64>,
    /// Rows assigned to each centroid in the final assignment.
    pub counts: Vec<usize>,
    /// Inertia after each assignment step.
    pub inertia_trace: Vec<f64>,
}

impl KMeansSummary {
    pub fn weights(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    pub fn inertia(&self) -> f64 {
        *self.inertia_trace.last().unwrap_or(&0.0)
    }
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn assign(x: ArrayView2<'_, f64>, centroids: &Array2<f64>, labels: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (r, row) in x.rows().into_iter().enumerate() {
        let mut best = (0, f64::INFINITY);
        for (c, centroid) in centroids.rows().into_iter().enumerate() {
            let dist = sq_dist(row, centroid);
            if dist < best.1 {
                best = (c, dist);
            }
        }
        labels[r] = best.0;
        inertia += best.1;
    }
    inertia
}

fn recompute(x: ArrayView2<'_, f64>, labels: &[usize], centroids: &mut Array2<f64>) -> Vec<usize> {
    let k = centroids.nrows();
    let mut sums = Array2::<f64>::zeros(centroids.dim());
    let mut counts = vec![0usize; k];
    for (row, &c) in x.rows().into_iter().zip(labels) {
        sums.row_mut(c).scaled_add(1.0, &row);
        counts[c] += 1;
    }
    for (c, &count) in counts.iter().enumerate() {
        // an empty cluster keeps its previous centroid
        if count > 0 {
            let mean = &sums.row(c) / count as f64;
            centroids.row_mut(c).assign(&mean);
        }
    }
    counts
}

/// Lloyd's k-means seeded with `k` distinct random rows; stops after
/// [`KMEANS_MAX_ITER`] iterations or when no centroid moves more than
/// [`KMEANS_TOL`]. Centroids always equal the means of their final clusters,
/// so the count-weighted centroid mean is the data mean.
pub fn kmeans(x: ArrayView2<'_, f64>, k: usize, seed: u64) -> KMeansSummary {
    let n = x.nrows();
    assert!(k >= 1 && k <= n, "k must lie in 1..=n");
    let mut rng = stream(seed, 0);
    let init = sample_indices(&mut rng, n, k);
    let mut centroids = x.select(Axis(0), &init.into_vec());
    let mut labels = vec![0usize; n];
    let mut trace = Vec::new();
    for _ in 0..KMEANS_MAX_ITER {
        trace.push(assign(x, &centroids, &mut labels));
        let previous = centroids.clone();
        recompute(x, &labels, &mut centroids);
        let shift = previous
            .rows()
            .into_iter()
            .zip(centroids.rows())
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        if shift <= KMEANS_TOL {
            break;
        }
    }
    // final assignment against the final centroids, then recentre so the
    // centroids are exact cluster means
    trace.push(assign(x, &centroids, &mut labels));
    let counts = recompute(x, &labels, &mut centroids);
    KMeansSummary {
        centroids,
        counts,
        inertia_trace: trace,
    }
}

/// `k` k-means centroids of `x` (see [`kmeans`]).
pub fn summarize_background(x: ArrayView2<'_, f64>, k: usize, seed: u64) -> Array2<f64> {
    kmeans(x, k, seed).centroids
}
