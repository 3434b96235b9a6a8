use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::equivalence::DEFAULT_ATOL;
use crate::explain::{ExplainerId, ExplainerSettings};
use crate::model_gen::GridSelection;

use super::HarnessError;

/// Everything a sweep needs. Every field has a default, so `{}` is valid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSelection,
    pub explainers: Vec<ExplainerId>,
    pub settings: ExplainerSettings,
    pub seed: u64,
    pub models_per_cell: usize,
    /// Explained rows per model; the whole dataset when it is smaller.
    pub samples_per_model: usize,
    /// Wall-clock limit per (model, explainer) task.
    pub timeout_secs: f64,
    /// Worker threads; `None` uses every core.
    pub jobs: Option<usize>,
    /// When false, `wall_ms` is written as 0 so reruns are byte-identical.
    pub record_timing: bool,
    pub zero_atol: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            grid: GridSelection::default(),
            explainers: ExplainerId::ALL.to_vec(),
            settings: ExplainerSettings::default(),
            seed: 0,
            models_per_cell: 1,
            samples_per_model: 100,
            timeout_secs: 120.0,
            jobs: None,
            record_timing: true,
            zero_atol: DEFAULT_ATOL,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::ConfigInvalid(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::ConfigInvalid(m));
        if self.models_per_cell == 0 {
            return bad("models_per_cell must be at least 1".into());
        }
        if self.samples_per_model == 0 {
            return bad("samples_per_model must be at least 1".into());
        }
        if !(self.timeout_secs > 0.0) || !self.timeout_secs.is_finite() {
            return bad(format!("timeout_secs must be positive, got {}", self.timeout_secs));
        }
        if self.jobs == Some(0) {
            return bad("jobs must be at least 1".into());
        }
        if !(self.zero_atol >= 0.0) {
            return bad(format!("zero_atol must be non-negative, got {}", self.zero_atol));
        }
        let s = &self.settings;
        if s.lime.num_samples == 0 {
            return bad("settings.lime.num_samples must be at least 1".into());
        }
        if !(s.lime.ridge >= 0.0) {
            return bad(format!("settings.lime.ridge must be non-negative, got {}", s.lime.ridge));
        }
        if matches!(s.lime.kernel_width, Some(w) if !(w > 0.0)) {
            return bad("settings.lime.kernel_width must be positive".into());
        }
        if s.background_k == 0 {
            return bad("settings.background_k must be at least 1".into());
        }
        if s.shap.nsamples == Some(0) {
            return bad("settings.shap.nsamples must be at least 1".into());
        }
        for (i, p) in self.grid.points().iter().enumerate() {
            p.params(0)
                .validate()
                .map_err(|e| HarnessError::ConfigInvalid(format!("grid point {i} ({}): {e}", p.key())))?;
        }
        let mut seen = self.explainers.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.explainers.len() {
            return bad("explainers lists the same explainer twice".into());
        }
        Ok(())
    }
}
