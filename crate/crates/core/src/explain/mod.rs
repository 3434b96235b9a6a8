//! Reference feature-additive explainers with black-box model access.
//!
//! Each explainer works on one instance at a time; [`explain_batch`] runs one
//! over a set of dataset rows and packs the raw outputs into an
//! [`ExplainerExplanation`].

mod kernel_shap;
mod lime;
mod pdp;
mod wls;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use kernel_shap::{
    explain_kernelshap, shapley_kernel_weight, Background, ShapConfig, ShapExplanation, ShapMode,
    EXACT_MAX_D,
};
pub use lime::{explain_lime, LimeConfig, LimeExplanation};
pub use pdp::{explain_pdp, PdCurves, PdExplanation, PD_GRID_POINTS};
pub use wls::{weighted_least_squares, Intercept};

use crate::dataset::{kmeans, Dataset};
use crate::error::ExplainError;
use crate::expr::AdditiveModel;
use crate::rng::derive_seed;

/// Query-only access to a model.
pub trait BlackBox: Sync {
    fn n_features(&self) -> usize;
    fn predict(&self, x: &[f64]) -> f64;
}

impl BlackBox for AdditiveModel {
    fn n_features(&self) -> usize {
        self.d()
    }

    fn predict(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }
}

/// Wraps a closure as a [`BlackBox`].
pub struct FnModel<F> {
    d: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnModel<F> {
    pub fn new(d: usize, f: F) -> Self {
        FnModel { d, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> BlackBox for FnModel<F> {
    fn n_features(&self) -> usize {
        self.d
    }

    fn predict(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// Optional wall-clock limit checked cooperatively inside explainer loops.
#[derive(Debug, Clone, Copy, Default)]
pub struct Deadline(Option<Instant>);

impl Deadline {
    pub fn none() -> Self {
        Deadline(None)
    }

    pub fn after(limit: Duration) -> Self {
        Deadline(Some(Instant::now() + limit))
    }

    pub fn check(&self) -> Result<(), ExplainError> {
        match self.0 {
            Some(t) if Instant::now() >= t => Err(ExplainError::Timeout),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExplainerId {
    Pdp,
    Lime,
    Shap,
}

impl ExplainerId {
    pub const ALL: [ExplainerId; 3] = [ExplainerId::Pdp, ExplainerId::Lime, ExplainerId::Shap];

    pub fn name(self) -> &'static str {
        match self {
            ExplainerId::Pdp => "pdp",
            ExplainerId::Lime => "lime",
            ExplainerId::Shap => "shap",
        }
    }

    pub fn kind(self) -> ExplanationKind {
        match self {
            ExplainerId::Pdp => ExplanationKind::PdValues,
            ExplainerId::Lime => ExplanationKind::SurrogateCoefficients,
            ExplainerId::Shap => ExplanationKind::ShapleyAttributions,
        }
    }
}

impl fmt::Display for ExplainerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExplainerId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pdp" => Ok(ExplainerId::Pdp),
            "lime" => Ok(ExplainerId::Lime),
            "shap" => Ok(ExplainerId::Shap),
            other => Err(format!("unknown explainer `{other}` (expected pdp, lime or shap)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExplanationKind {
    SurrogateCoefficients,
    ShapleyAttributions,
    PdValues,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub dropped_evals: u64,
    pub coalitions: u64,
}

/// Raw explainer output for a set of dataset rows.
///
/// `payload[s]` has one value per feature: z-space coefficients for
/// surrogate explanations, attributions for Shapley explanations and
/// interpolated PD values for PD explanations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainerExplanation {
    pub kind: ExplanationKind,
    pub effects: Vec<Vec<usize>>,
    pub samples: Vec<usize>,
    pub payload: Vec<Vec<f64>>,
    /// Surrogate intercept (z-space) per sample.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intercepts: Option<Vec<f64>>,
    /// Value of the empty coalition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
    /// Mean PD value of each feature over the whole dataset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pd_means: Option<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

impl ExplainerExplanation {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn d(&self) -> usize {
        self.effects.len()
    }
}

/// Per-explainer knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainerSettings {
    pub lime: LimeConfig,
    pub shap: ShapConfig,
    /// Background size for the Shapley value function.
    pub background_k: usize,
}

impl Default for ExplainerSettings {
    fn default() -> Self {
        ExplainerSettings {
            lime: LimeConfig::default(),
            shap: ShapConfig::default(),
            background_k: 100,
        }
    }
}

fn singleton_effects(d: usize) -> Vec<Vec<usize>> {
    (0..d).map(|i| vec![i]).collect()
}

/// k-means background with cluster-size weights.
pub fn background_for(data: &Dataset, k: usize, seed: u64) -> Background {
    let k = k.clamp(1, data.n());
    let summary = kmeans(data.x(), k, seed);
    Background::weighted(summary.centroids.clone(), summary.weights())
}

/// Explains the given dataset rows with one explainer. Per-row randomness is
/// derived from `(seed, row index)`.
pub fn explain_batch<M: BlackBox + ?Sized>(
    explainer: ExplainerId,
    model: &M,
    data: &Dataset,
    samples: &[usize],
    settings: &ExplainerSettings,
    seed: u64,
    deadline: Deadline,
) -> Result<ExplainerExplanation, ExplainError> {
    let d = data.d();
    if model.n_features() != d {
        return Err(ExplainError::InvalidInput(format!(
            "model expects {} features, data has {d}",
            model.n_features()
        )));
    }
    let mut out = ExplainerExplanation {
        kind: explainer.kind(),
        effects: singleton_effects(d),
        samples: samples.to_vec(),
        payload: Vec::with_capacity(samples.len()),
        intercepts: None,
        base_value: None,
        mu: None,
        sigma: None,
        pd_means: None,
        diagnostics: Diagnostics::default(),
    };
    match explainer {
        ExplainerId::Pdp => {
            let curves = PdCurves::compute(model, data, deadline)?;
            for &s in samples {
                out.payload.push(curves.local(&data.row(s)));
            }
            out.pd_means = Some(curves.dataset_means(data));
            out.diagnostics.dropped_evals = curves.dropped_evals();
        }
        ExplainerId::Lime => {
            let mut intercepts = Vec::with_capacity(samples.len());
            for &s in samples {
                deadline.check()?;
                let e = explain_lime(model, data, &data.row(s), &settings.lime, derive_seed(seed, &[s as u64]))?;
                out.diagnostics.dropped_evals += e.dropped as u64;
                intercepts.push(e.intercept);
                out.payload.push(e.coef);
            }
            out.intercepts = Some(intercepts);
            out.mu = Some(data.means());
            out.sigma = Some(data.stds());
        }
        ExplainerId::Shap => {
            let background = background_for(data, settings.background_k, seed);
            for &s in samples {
                deadline.check()?;
                let e = explain_kernelshap(
                    model,
                    &data.row(s),
                    &background,
                    &settings.shap,
                    derive_seed(seed, &[s as u64]),
                    deadline,
                )?;
                out.diagnostics.dropped_evals += e.dropped as u64;
                out.diagnostics.coalitions = out.diagnostics.coalitions.max(e.coalitions as u64);
                out.base_value = Some(e.base_value);
                out.payload.push(e.phi);
            }
            if out.base_value.is_none() {
                out.base_value = Some(background.expected_output(model)?);
            }
        }
    }
    Ok(out)
}
