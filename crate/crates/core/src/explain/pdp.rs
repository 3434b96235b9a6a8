//! Partial dependence curves and their local read-out.

use crate::dataset::{quantile_sorted, Dataset};
use crate::error::ExplainError;

use super::{BlackBox, Deadline};

pub const PD_GRID_POINTS: usize = 100;

/// One PD curve per feature, on a percentile grid of that feature's column.
#[derive(Debug, Clone, PartialEq)]
pub struct PdCurves {
    grids: Vec<Vec<f64>>,
    values: Vec<Vec<f64>>,
    dropped: u64,
}

/// PD values at one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct PdExplanation {
    pub values: Vec<f64>,
    pub dropped: u64,
}

impl PdCurves {
    pub fn compute<M: BlackBox + ?Sized>(
        model: &M,
        data: &Dataset,
        deadline: Deadline,
    ) -> Result<Self, ExplainError> {
        Self::with_points(model, data, PD_GRID_POINTS, deadline)
    }

    pub fn with_points<M: BlackBox + ?Sized>(
        model: &M,
        data: &Dataset,
        points: usize,
        deadline: Deadline,
    ) -> Result<Self, ExplainError> {
        let (n, d) = data.x().dim();
        if n == 0 {
            return Err(ExplainError::InvalidInput("dataset is empty".into()));
        }
        if points < 1 {
            return Err(ExplainError::InvalidInput("PD grid needs at least one point".into()));
        }
        let mut grids = Vec::with_capacity(d);
        let mut values = Vec::with_capacity(d);
        let mut dropped = 0u64;
        let mut buf = vec![0.0; d];
        for i in 0..d {
            let mut col = data.x().column(i).to_vec();
            col.sort_by(f64::total_cmp);
            let mut grid: Vec<f64> = (0..points)
                .map(|k| {
                    let q = if points == 1 { 0.5 } else { k as f64 / (points - 1) as f64 };
                    quantile_sorted(&col, q)
                })
                .collect();
            grid.dedup();
            let mut curve = Vec::with_capacity(grid.len());
            for (g, &v) in grid.iter().enumerate() {
                deadline.check()?;
                let mut sum = 0.0;
                let mut ok = 0usize;
                for r in 0..n {
                    for (dst, src) in buf.iter_mut().zip(data.x().row(r)) {
                        *dst = *src;
                    }
                    buf[i] = v;
                    let y = model.predict(&buf);
                    if y.is_finite() {
                        sum += y;
                        ok += 1;
                    }
                }
                let bad = n - ok;
                if 2 * bad > n {
                    return Err(ExplainError::DegeneratePd { feature: i, grid_point: g });
                }
                dropped += bad as u64;
                curve.push(sum / ok as f64);
            }
            grids.push(grid);
            values.push(curve);
        }
        Ok(PdCurves { grids, values, dropped })
    }

    pub fn grid(&self, feature: usize) -> &[f64] {
        &self.grids[feature]
    }

    pub fn curve(&self, feature: usize) -> &[f64] {
        &self.values[feature]
    }

    pub fn dropped_evals(&self) -> u64 {
        self.dropped
    }

    /// Piecewise-linear read-out; outside the grid the nearest two points
    /// are extended linearly.
    pub fn value(&self, feature: usize, v: f64) -> f64 {
        let g = &self.grids[feature];
        let y = &self.values[feature];
        if g.len() == 1 {
            return y[0];
        }
        // Segment index k such that g[k] <= v <= g[k+1], clamped to the ends.
        let k = g.partition_point(|&p| p <= v).clamp(1, g.len() - 1) - 1;
        let t = (v - g[k]) / (g[k + 1] - g[k]);
        y[k] + t * (y[k + 1] - y[k])
    }

    pub fn local(&self, x: &[f64]) -> Vec<f64> {
        (0..self.grids.len()).map(|i| self.value(i, x[i])).collect()
    }

    /// Mean local PD value of each feature over the rows of `data`.
    pub fn dataset_means(&self, data: &Dataset) -> Vec<f64> {
        let n = data.n() as f64;
        (0..self.grids.len())
            .map(|i| data.x().column(i).iter().map(|&v| self.value(i, v)).sum::<f64>() / n)
            .collect()
    }
}

pub fn explain_pdp<M: BlackBox + ?Sized>(
    model: &M,
    data: &Dataset,
    x: &[f64],
) -> Result<PdExplanation, ExplainError> {
    let curves = PdCurves::compute(model, data, Deadline::none())?;
    Ok(PdExplanation { values: curves.local(x), dropped: curves.dropped_evals() })
}
