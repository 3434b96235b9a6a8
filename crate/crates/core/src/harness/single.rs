use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::dataset::{sample_dataset, Dataset};
use crate::equivalence::{adjust, DEFAULT_ATOL};
use crate::explain::{ExplainerExplanation, ExplainerId, ExplainerSettings};
use crate::expr::AdditiveModel;
use crate::ground_truth::explain_ground_truth;
use crate::metrics::{score_explanation, write_records, MetricsRecord, Scores, Status};
use crate::model_gen::GridPoint;
use crate::rng::derive_seed;

use super::{choose_samples, explain_and_score, io_err, HarnessError, Prepared};

/// One explainer on one model file.
#[derive(Debug, Clone)]
pub struct SingleRequest {
    pub model_path: PathBuf,
    /// Defaults to `data.csv` beside the model, else a freshly sampled dataset.
    pub data_path: Option<PathBuf>,
    pub explainer: ExplainerId,
    pub seed: u64,
    pub settings: ExplainerSettings,
    pub samples_per_model: usize,
    pub timeout_secs: f64,
    pub atol: f64,
    /// Where outputs go; defaults to the model's directory.
    pub out_dir: Option<PathBuf>,
}

impl SingleRequest {
    pub fn new(model_path: impl Into<PathBuf>, explainer: ExplainerId, seed: u64) -> Self {
        SingleRequest {
            model_path: model_path.into(),
            data_path: None,
            explainer,
            seed,
            settings: ExplainerSettings::default(),
            samples_per_model: 100,
            timeout_secs: 120.0,
            atol: DEFAULT_ATOL,
            out_dir: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SingleOutcome {
    pub record: MetricsRecord,
    pub explanation: Option<ExplainerExplanation>,
    pub scores: Option<Scores>,
    pub error: Option<String>,
    pub written: Vec<PathBuf>,
}

/// Observed structure of a model in grid terms: nonlinear operators and
/// interaction effects per used feature, and the largest effect order.
fn describe(model: &AdditiveModel) -> GridPoint {
    let used = model.used_features().len().max(1) as f64;
    let nonlinear: usize = model.effects().iter().map(|e| e.expr().nonlinear_ops()).sum();
    let interactions = model.effects().iter().filter(|e| e.is_interaction()).count();
    GridPoint {
        d: model.d(),
        n_dummy: model.dummy_features().len(),
        pct_nonlinear: nonlinear as f64 / used,
        pct_interact: interactions as f64 / used,
        order_interact: model.effects().iter().map(|e| e.features().len()).max().unwrap_or(1),
    }
}

fn load_model(path: &Path) -> Result<AdditiveModel, HarnessError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    AdditiveModel::from_json(&text).map_err(|e| HarnessError::ConfigInvalid(format!("{}: {e}", path.display())))
}

fn load_data(path: &Path) -> Result<Dataset, HarnessError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    Dataset::read_csv(BufReader::new(file)).map_err(|e| HarnessError::InvalidInput(format!("{}: {e}", path.display())))
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    parent_dir(path).join(name)
}

fn model_id(path: &Path) -> String {
    path.display().to_string()
}

fn check_dims(model: &AdditiveModel, data: &Dataset) -> Result<(), HarnessError> {
    if model.d() != data.d() {
        return Err(HarnessError::InvalidInput(format!(
            "model has d = {} but the dataset has {} columns",
            model.d(),
            data.d()
        )));
    }
    Ok(())
}

/// Explains, scores and writes `{explainer}.expl.json`, `{explainer}.match.json`
/// and a one-row `{explainer}.metrics.csv`.
pub fn run_single(req: &SingleRequest) -> Result<SingleOutcome, HarnessError> {
    let model = load_model(&req.model_path)?;
    let out_dir = req.out_dir.clone().unwrap_or_else(|| parent_dir(&req.model_path));
    fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;
    let mut written = Vec::new();

    let default_data = sibling(&req.model_path, "data.csv");
    let data = match &req.data_path {
        Some(p) => load_data(p)?,
        None if default_data.is_file() => load_data(&default_data)?,
        None => {
            let data = sample_dataset(model.d(), derive_seed(req.seed, &[1]));
            let path = out_dir.join("data.csv");
            let mut buf = Vec::new();
            data.write_csv(&mut buf).expect("in-memory write");
            fs::write(&path, buf).map_err(io_err(&path))?;
            written.push(path);
            data
        }
    };
    check_dims(&model, &data)?;
    let gt = explain_ground_truth(&model, &data).map_err(|e| HarnessError::InvalidInput(e.to_string()))?;
    let samples = choose_samples(data.n(), req.samples_per_model, derive_seed(req.seed, &[2]));
    let prepared = Prepared { model, data, gt, samples };

    let outcome = explain_and_score(
        &prepared,
        req.explainer,
        &req.settings,
        req.seed,
        Duration::from_secs_f64(req.timeout_secs),
        req.atol,
    );
    let mut record = MetricsRecord::new(
        model_id(&req.model_path),
        req.explainer.name(),
        &describe(&prepared.model),
        outcome.status,
    );
    record.wall_ms = outcome.wall_ms;
    let x = req.explainer;
    if let (Some(expl), Some(scores)) = (&outcome.explanation, &outcome.scores) {
        record.dropped_evals = expl.diagnostics.dropped_evals;
        record = record.with_scores(scores);
        for (name, body) in [("expl", expl.to_json()), ("match", scores.matching.to_json())] {
            let path = out_dir.join(format!("{x}.{name}.json"));
            fs::write(&path, body).map_err(io_err(&path))?;
            written.push(path);
        }
    }
    let path = out_dir.join(format!("{x}.metrics.csv"));
    let mut buf = Vec::new();
    write_records(std::slice::from_ref(&record), &mut buf)?;
    fs::write(&path, buf).map_err(io_err(&path))?;
    written.push(path);
    Ok(SingleOutcome {
        record,
        explanation: outcome.explanation,
        scores: outcome.scores,
        error: outcome.error,
        written,
    })
}

/// Scores a stored explanation. The dataset defaults to `data.csv` beside
/// the explanation, then beside the model.
pub fn evaluate_files(
    model_path: &Path,
    expl_path: &Path,
    data_path: Option<&Path>,
    atol: f64,
) -> Result<(MetricsRecord, Scores), HarnessError> {
    let model = load_model(model_path)?;
    let text = fs::read_to_string(expl_path).map_err(io_err(expl_path))?;
    let expl = ExplainerExplanation::from_json(&text)
        .map_err(|e| HarnessError::ConfigInvalid(format!("{}: {e}", expl_path.display())))?;
    let data_path = match data_path {
        Some(p) => p.to_path_buf(),
        None => [sibling(expl_path, "data.csv"), sibling(model_path, "data.csv")]
            .into_iter()
            .find(|p| p.is_file())
            .ok_or_else(|| HarnessError::InvalidInput("no dataset given and no data.csv found".into()))?,
    };
    let data = load_data(&data_path)?;
    check_dims(&model, &data)?;
    if let Some(&bad) = expl.samples.iter().find(|&&s| s >= data.n()) {
        return Err(HarnessError::InvalidInput(format!("explanation refers to row {bad} of {} rows", data.n())));
    }
    let gt = explain_ground_truth(&model, &data).map_err(|e| HarnessError::InvalidInput(e.to_string()))?;
    let adjusted = adjust(&expl, &data).map_err(HarnessError::InvalidInput)?;
    let outputs: Vec<f64> = expl.samples.iter().map(|&s| gt.total(s)).collect();
    let scores = score_explanation(&gt, &adjusted, &outputs, atol);
    let name = match expl.kind {
        crate::explain::ExplanationKind::PdValues => ExplainerId::Pdp,
        crate::explain::ExplanationKind::SurrogateCoefficients => ExplainerId::Lime,
        crate::explain::ExplanationKind::ShapleyAttributions => ExplainerId::Shap,
    };
    let mut record = MetricsRecord::new(model_id(model_path), name.name(), &describe(&model), Status::Ok)
        .with_scores(&scores);
    record.dropped_evals = expl.diagnostics.dropped_evals;
    Ok((record, scores))
}
