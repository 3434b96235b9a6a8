//! Kernel-weighted regression estimate of Shapley values under a marginal
//! (feature-independence) value function.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::ExplainError;
use crate::rng::{stream, weighted_index};

use super::wls::{weighted_least_squares, Intercept};
use super::{BlackBox, Deadline};

/// Largest `d` explained by full coalition enumeration under the default config.
pub const EXACT_MAX_D: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapMode {
    Exact,
    Sampled(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapConfig {
    pub exact_max_d: usize,
    /// Coalition budget in sampled mode; `None` means `2048 + 2d`.
    pub nsamples: Option<usize>,
    pub force_exact: bool,
}

impl Default for ShapConfig {
    fn default() -> Self {
        ShapConfig { exact_max_d: EXACT_MAX_D, nsamples: None, force_exact: false }
    }
}

impl ShapConfig {
    pub fn mode(&self, d: usize) -> ShapMode {
        if self.force_exact || d <= self.exact_max_d {
            return ShapMode::Exact;
        }
        let budget = self.nsamples.unwrap_or(2048 + 2 * d);
        // A budget covering every proper coalition buys nothing over enumeration.
        if d < 63 && budget as u64 >= (1u64 << d) - 2 {
            ShapMode::Exact
        } else {
            ShapMode::Sampled(budget)
        }
    }
}

/// `(d - 1) / (C(d, s) * s * (d - s))` for `0 < s < d`.
pub fn shapley_kernel_weight(d: usize, s: usize) -> f64 {
    assert!(s > 0 && s < d, "kernel weight is defined for proper non-empty coalitions");
    (d - 1) as f64 / (binomial_f64(d, s) * s as f64 * (d - s) as f64)
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Weighted reference rows that stand in for absent features.
#[derive(Debug, Clone, PartialEq)]
pub struct Background {
    rows: Array2<f64>,
    weights: Vec<f64>,
}

impl Background {
    pub fn uniform(rows: Array2<f64>) -> Self {
        let k = rows.nrows();
        Background { rows, weights: vec![1.0 / k as f64; k] }
    }

    /// Weights are normalized to sum to one.
    pub fn weighted(rows: Array2<f64>, weights: Vec<f64>) -> Self {
        assert_eq!(rows.nrows(), weights.len());
        let total: f64 = weights.iter().sum();
        Background { rows, weights: weights.iter().map(|w| w / total).collect() }
    }

    pub fn rows(&self) -> &Array2<f64> {
        &self.rows
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    /// Weighted mean of each column.
    pub fn mean(&self) -> Vec<f64> {
        (0..self.rows.ncols())
            .map(|i| self.rows.column(i).iter().zip(&self.weights).map(|(v, w)| v * w).sum())
            .collect()
    }

    /// `v(S)`: features in `present` come from `x`, the rest from each row.
    /// Returns the value and the number of non-finite rows skipped.
    pub fn value<M: BlackBox + ?Sized>(
        &self,
        model: &M,
        x: &[f64],
        present: &[bool],
        buf: &mut [f64],
    ) -> Result<(f64, usize), ExplainError> {
        let mut sum = 0.0;
        let mut wsum = 0.0;
        let mut dropped = 0;
        for (row, &w) in self.rows.rows().into_iter().zip(&self.weights) {
            for i in 0..buf.len() {
                buf[i] = if present[i] { x[i] } else { row[i] };
            }
            let y = model.predict(buf);
            if y.is_finite() {
                sum += w * y;
                wsum += w;
            } else {
                dropped += 1;
            }
        }
        if wsum > 0.0 {
            Ok((sum / wsum, dropped))
        } else {
            Err(ExplainError::NonFiniteValueFunction {
                coalition: (0..present.len()).filter(|&i| present[i]).collect(),
            })
        }
    }

    /// `v(empty set)`, i.e. the weighted mean model output.
    pub fn expected_output<M: BlackBox + ?Sized>(&self, model: &M) -> Result<f64, ExplainError> {
        let d = self.rows.ncols();
        let mut buf = vec![0.0; d];
        self.value(model, &vec![0.0; d], &vec![false; d], &mut buf).map(|(v, _)| v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapExplanation {
    pub phi: Vec<f64>,
    pub base_value: f64,
    pub full_value: f64,
    pub coalitions: usize,
    pub dropped: usize,
}

pub fn explain_kernelshap<M: BlackBox + ?Sized>(
    model: &M,
    x: &[f64],
    background: &Background,
    config: &ShapConfig,
    seed: u64,
    deadline: Deadline,
) -> Result<ShapExplanation, ExplainError> {
    let d = x.len();
    if background.is_empty() {
        return Err(ExplainError::InvalidInput("background is empty".into()));
    }
    if background.rows.ncols() != d || model.n_features() != d {
        return Err(ExplainError::InvalidInput(format!(
            "instance has {d} features, background {} and model {}",
            background.rows.ncols(),
            model.n_features()
        )));
    }
    let mut buf = vec![0.0; d];
    let (base, mut dropped) = background.value(model, x, &vec![false; d], &mut buf)?;
    let full = model.predict(x);
    if !full.is_finite() {
        return Err(ExplainError::NonFiniteValueFunction { coalition: (0..d).collect() });
    }
    let delta = full - base;
    if d == 1 {
        return Ok(ShapExplanation { phi: vec![delta], base_value: base, full_value: full, coalitions: 0, dropped });
    }

    // Coalitions with their regression weights.
    let coalitions: Vec<(Vec<bool>, f64)> = match config.mode(d) {
        ShapMode::Exact => {
            assert!(d < 31, "exact enumeration requested for d = {d}");
            (1u32..(1u32 << d) - 1)
                .map(|mask| {
                    let present: Vec<bool> = (0..d).map(|i| mask >> i & 1 == 1).collect();
                    let s = mask.count_ones() as usize;
                    (present, shapley_kernel_weight(d, s))
                })
                .collect()
        }
        ShapMode::Sampled(budget) => sample_coalitions(d, budget, seed),
    };

    let q = d - 1;
    let p = coalitions.len();
    let mut a = Array2::<f64>::zeros((p, q));
    let mut b = Array1::<f64>::zeros(p);
    let mut w = Array1::<f64>::zeros(p);
    for (r, (present, weight)) in coalitions.iter().enumerate() {
        if r % 64 == 0 {
            deadline.check()?;
        }
        let (v, skipped) = background.value(model, x, present, &mut buf)?;
        dropped += skipped;
        let last = f64::from(u8::from(present[q]));
        for i in 0..q {
            a[[r, i]] = f64::from(u8::from(present[i])) - last;
        }
        b[r] = v - base - last * delta;
        w[r] = *weight;
    }
    let head = weighted_least_squares(a.view(), b.view(), w.view(), 0.0, Intercept::None)?;
    let mut phi = head.to_vec();
    phi.push(delta - phi.iter().sum::<f64>());
    Ok(ShapExplanation { phi, base_value: base, full_value: full, coalitions: p, dropped })
}

/// Paired draws: each sampled coalition is added together with its
/// complement. Sizes follow the kernel mass `(d - 1) / (s (d - s))`, members
/// are uniform given the size, and repeated coalitions are merged into a
/// multiplicity weight.
fn sample_coalitions(d: usize, budget: usize, seed: u64) -> Vec<(Vec<bool>, f64)> {
    let size_mass: Vec<f64> = (1..d).map(|s| (d - 1) as f64 / (s * (d - s)) as f64).collect();
    let mut rng = stream(seed, 0);
    let mut counts: BTreeMap<Vec<bool>, f64> = BTreeMap::new();
    let pairs = budget.div_ceil(2).max(1);
    for _ in 0..pairs {
        let s = 1 + weighted_index(&mut rng, &size_mass);
        let mut present = vec![false; d];
        for i in sample(&mut rng, d, s) {
            present[i] = true;
        }
        let complement: Vec<bool> = present.iter().map(|&p| !p).collect();
        *counts.entry(present).or_insert(0.0) += 1.0;
        *counts.entry(complement).or_insert(0.0) += 1.0;
    }
    counts.into_iter().collect()
}
