//! Local linear surrogate fitted on Gaussian perturbations in z-score space.

use ndarray::{Array1, Array2};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::ExplainError;
use crate::rng::stream;

use super::wls::{weighted_least_squares, Intercept};
use super::BlackBox;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimeConfig {
    pub num_samples: usize,
    /// Kernel width in z-space; `None` means `0.75 * sqrt(d)`.
    pub kernel_width: Option<f64>,
    pub ridge: f64,
    /// Fewer finite labels than this fraction of `num_samples` is an error.
    pub min_valid_fraction: f64,
}

impl Default for LimeConfig {
    fn default() -> Self {
        LimeConfig {
            num_samples: 5000,
            kernel_width: None,
            ridge: 1.0,
            min_valid_fraction: 0.1,
        }
    }
}

impl LimeConfig {
    pub fn width(&self, d: usize) -> f64 {
        self.kernel_width.unwrap_or(0.75 * (d as f64).sqrt())
    }
}

/// Surrogate in z-space: `F(x) ~ intercept + sum_i coef_i (x_i - mu_i) / sigma_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimeExplanation {
    pub intercept: f64,
    pub coef: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub dropped: usize,
}

pub fn explain_lime<M: BlackBox + ?Sized>(
    model: &M,
    data: &Dataset,
    x: &[f64],
    config: &LimeConfig,
    seed: u64,
) -> Result<LimeExplanation, ExplainError> {
    let d = data.d();
    if x.len() != d {
        return Err(ExplainError::InvalidInput(format!("instance has {} features, data has {d}", x.len())));
    }
    let mu = data.means();
    let sigma = data.stds();
    if let Some(i) = sigma.iter().position(|&s| !(s > 0.0)) {
        return Err(ExplainError::InvalidInput(format!("feature {i} has zero spread")));
    }
    let total = config.num_samples;
    let kw = config.width(d);
    let zx: Vec<f64> = (0..d).map(|i| (x[i] - mu[i]) / sigma[i]).collect();

    let mut rng = stream(seed, 0);
    let mut design = Vec::with_capacity(total * (d + 1));
    let mut labels = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut z = vec![0.0; d];
    let mut raw = vec![0.0; d];
    for _ in 0..total {
        for i in 0..d {
            z[i] = StandardNormal.sample(&mut rng);
            raw[i] = z[i] * sigma[i] + mu[i];
        }
        let y = model.predict(&raw);
        if !y.is_finite() {
            continue;
        }
        let dist2: f64 = z.iter().zip(&zx).map(|(a, b)| (a - b) * (a - b)).sum();
        design.push(1.0);
        design.extend_from_slice(&z);
        labels.push(y);
        weights.push((-dist2 / (kw * kw)).exp());
    }
    let valid = labels.len();
    if (valid as f64) < config.min_valid_fraction * total as f64 || valid == 0 {
        return Err(ExplainError::TooFewValidSamples { valid, total });
    }
    let a = Array2::from_shape_vec((valid, d + 1), design).expect("row-major design");
    let theta = weighted_least_squares(
        a.view(),
        Array1::from(labels).view(),
        Array1::from(weights).view(),
        config.ridge,
        Intercept::FirstColumn,
    )?;
    Ok(LimeExplanation {
        intercept: theta[0],
        coef: theta.iter().skip(1).copied().collect(),
        mu,
        sigma,
        dropped: total - valid,
    })
}
