//! Experiment orchestration: generate, sample, explain, align, score, persist.

mod config;
mod single;
mod sweep;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use thiserror::Error;

pub use config::ExperimentConfig;
pub use single::{evaluate_files, run_single, SingleOutcome, SingleRequest};
pub use sweep::{generate_artifacts, report, run_sweep, SweepOutcome, RESULTS_FILE};

use crate::dataset::{sample_dataset, Dataset};
use crate::equivalence::adjust;
use crate::error::{ExplainError, GenError};
use crate::explain::{explain_batch, Deadline, ExplainerExplanation, ExplainerId, ExplainerSettings};
use crate::expr::AdditiveModel;
use crate::ground_truth::{explain_ground_truth, GroundTruthExplanation};
use crate::metrics::{score_explanation, Scores, Status};
use crate::model_gen::{generate_model_with, GenOptions, GridPoint};
use crate::rng::{derive_seed, hash_str, stream};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::ConfigInvalid(_) | HarnessError::InvalidInput(_) => 2,
            HarnessError::Io { .. } | HarnessError::Csv(_) => 1,
        }
    }
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::ExplainFailed => 3,
            Status::Timeout => 4,
            Status::GenerationFailed => 5,
        }
    }
}

/// What a derived seed is used for.
#[derive(Debug, Clone, Copy)]
enum Phase {
    Model = 0,
    Data = 1,
    Samples = 2,
    Explainer = 3,
}

fn task_seed(master: u64, cell: &GridPoint, model_idx: usize, phase: Phase, extra: u64) -> u64 {
    derive_seed(master, &[hash_str(&cell.key()), model_idx as u64, phase as u64, extra])
}

/// Sorted seeded subset of `0..n` with `min(n, k)` rows.
pub fn choose_samples(n: usize, k: usize, seed: u64) -> Vec<usize> {
    if k >= n {
        return (0..n).collect();
    }
    let mut rows = sample(&mut stream(seed, 0), n, k).into_vec();
    rows.sort_unstable();
    rows
}

/// A generated model with its data and truth.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub model: AdditiveModel,
    pub data: Dataset,
    pub gt: GroundTruthExplanation,
    pub samples: Vec<usize>,
}

impl Prepared {
    pub fn outputs(&self) -> Vec<f64> {
        self.samples.iter().map(|&s| self.gt.total(s)).collect()
    }
}

/// Generates model `model_idx` of `cell`. The dataset is drawn first so the
/// model can be validated on it.
pub fn prepare_model(cfg: &ExperimentConfig, cell: &GridPoint, model_idx: usize) -> Result<Prepared, GenError> {
    let data = sample_dataset(cell.d, task_seed(cfg.seed, cell, model_idx, Phase::Data, 0));
    let params = cell.params(task_seed(cfg.seed, cell, model_idx, Phase::Model, 0));
    let model = generate_model_with(&params, Some(data.x()), GenOptions::default())?;
    let gt = explain_ground_truth(&model, &data).map_err(|_| GenError::GenerationFailed { rounds: 0 })?;
    let samples = choose_samples(
        data.n(),
        cfg.samples_per_model,
        task_seed(cfg.seed, cell, model_idx, Phase::Samples, 0),
    );
    Ok(Prepared { model, data, gt, samples })
}

pub(crate) fn explainer_seed(cfg: &ExperimentConfig, cell: &GridPoint, model_idx: usize, id: ExplainerId) -> u64 {
    task_seed(cfg.seed, cell, model_idx, Phase::Explainer, hash_str(id.name()))
}

/// Result of one (model, explainer) task.
#[derive(Debug, Clone)]
pub struct ExplainOutcome {
    pub status: Status,
    pub explanation: Option<ExplainerExplanation>,
    pub scores: Option<Scores>,
    pub error: Option<String>,
    pub wall_ms: u64,
}

/// Explains, corrects and scores, turning every failure (including a panic)
/// into a status.
pub fn explain_and_score(
    prepared: &Prepared,
    explainer: ExplainerId,
    settings: &ExplainerSettings,
    seed: u64,
    timeout: Duration,
    atol: f64,
) -> ExplainOutcome {
    let start = Instant::now();
    let deadline = Deadline::after(timeout);
    let run = catch_unwind(AssertUnwindSafe(|| {
        let expl = explain_batch(
            explainer,
            &prepared.model,
            &prepared.data,
            &prepared.samples,
            settings,
            seed,
            deadline,
        )?;
        deadline.check()?;
        let adjusted = adjust(&expl, &prepared.data).map_err(ExplainError::InvalidInput)?;
        let scores = score_explanation(&prepared.gt, &adjusted, &prepared.outputs(), atol);
        Ok::<_, ExplainError>((expl, scores))
    }));
    let wall_ms = start.elapsed().as_millis() as u64;
    let (status, explanation, scores, error) = match run {
        Ok(Ok((e, s))) => (Status::Ok, Some(e), Some(s), None),
        Ok(Err(ExplainError::Timeout)) => (Status::Timeout, None, None, Some(ExplainError::Timeout.to_string())),
        Ok(Err(e)) => (Status::ExplainFailed, None, None, Some(e.to_string())),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "explainer panicked".into());
            (Status::ExplainFailed, None, None, Some(msg))
        }
    };
    ExplainOutcome { status, explanation, scores, error, wall_ms }
}
