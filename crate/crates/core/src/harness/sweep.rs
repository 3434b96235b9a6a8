use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::explain::ExplainerId;
use crate::metrics::{aggregate, read_records, write_records, write_summary, MetricsRecord, Status, SummaryRow};
use crate::model_gen::GridPoint;

use super::{explain_and_score, explainer_seed, io_err, prepare_model, ExperimentConfig, HarnessError, Prepared};

pub const RESULTS_FILE: &str = "results.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    /// Sorted by model id, then explainer.
    pub records: Vec<MetricsRecord>,
    /// Tasks whose stored rows were reused.
    pub reused: usize,
    pub results_path: PathBuf,
}

/// Stored next to the artifacts of an `ok` task so a rerun can skip it.
#[derive(Serialize, Deserialize)]
struct StoredRow {
    checksum: String,
    record: MetricsRecord,
}

fn model_id(cell: &GridPoint, idx: usize) -> String {
    format!("{}/{idx:04}", cell.key())
}

fn tasks(cfg: &ExperimentConfig) -> Vec<(GridPoint, usize)> {
    let mut out = Vec::new();
    for cell in cfg.grid.points() {
        for idx in 0..cfg.models_per_cell {
            out.push((cell, idx));
        }
    }
    out
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), HarnessError> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn write_model_artifacts(dir: &Path, p: &Prepared) -> Result<Vec<u8>, HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let model_json = p.model.to_json();
    write(&dir.join("model.json"), &model_json)?;
    let mut data = Vec::new();
    p.data.write_csv(&mut data).expect("in-memory write");
    write(&dir.join("data.csv"), &data)?;
    write(&dir.join("gt.json"), p.gt.to_json())?;
    let mut gt = Vec::new();
    p.gt.write_contributions_csv(&mut gt).expect("in-memory write");
    write(&dir.join("gt.csv"), &gt)?;
    Ok(model_json.into_bytes())
}

/// Hash of everything that determines a task's row.
fn checksum(cfg: &ExperimentConfig, model_json: &[u8], expl: &[u8], matching: &[u8]) -> String {
    let settings = serde_json::to_string(&(
        &cfg.settings,
        cfg.seed,
        cfg.samples_per_model,
        cfg.zero_atol,
        cfg.record_timing,
    ))
    .expect("serializable");
    let mut h = Sha256::new();
    for part in [settings.as_bytes(), model_json, expl, matching] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part);
    }
    hex::encode(h.finalize())
}

fn reuse(cfg: &ExperimentConfig, dir: &Path, id: ExplainerId, model_json: &[u8]) -> Option<MetricsRecord> {
    let row: StoredRow = serde_json::from_slice(&fs::read(dir.join(format!("{id}.row.json"))).ok()?).ok()?;
    let expl = fs::read(dir.join(format!("{id}.expl.json"))).ok()?;
    let matching = fs::read(dir.join(format!("{id}.match.json"))).ok()?;
    (row.checksum == checksum(cfg, model_json, &expl, &matching)).then_some(row.record)
}

fn run_task(
    cfg: &ExperimentConfig,
    out: &Path,
    cell: &GridPoint,
    idx: usize,
) -> Result<(Vec<MetricsRecord>, usize), HarnessError> {
    let id = model_id(cell, idx);
    let dir = out.join(cell.key()).join(format!("{idx:04}"));
    let prepared = match prepare_model(cfg, cell, idx) {
        Ok(p) => p,
        Err(e) => {
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
            write(&dir.join("error.txt"), format!("{e}\n"))?;
            let rows = cfg
                .explainers
                .iter()
                .map(|x| MetricsRecord::new(id.clone(), x.name(), cell, Status::GenerationFailed))
                .collect();
            return Ok((rows, 0));
        }
    };
    let model_json = write_model_artifacts(&dir, &prepared)?;
    let mut rows = Vec::with_capacity(cfg.explainers.len());
    let mut reused = 0;
    for &x in &cfg.explainers {
        if let Some(record) = reuse(cfg, &dir, x, &model_json) {
            rows.push(record);
            reused += 1;
            continue;
        }
        let outcome = explain_and_score(
            &prepared,
            x,
            &cfg.settings,
            explainer_seed(cfg, cell, idx, x),
            Duration::from_secs_f64(cfg.timeout_secs),
            cfg.zero_atol,
        );
        let mut record = MetricsRecord::new(id.clone(), x.name(), cell, outcome.status);
        record.wall_ms = if cfg.record_timing { outcome.wall_ms } else { 0 };
        for stale in ["row", "expl", "match"] {
            let _ = fs::remove_file(dir.join(format!("{x}.{stale}.json")));
        }
        if let (Some(expl), Some(scores)) = (&outcome.explanation, &outcome.scores) {
            record.dropped_evals = expl.diagnostics.dropped_evals;
            record = record.with_scores(scores);
            let expl_json = expl.to_json();
            let match_json = scores.matching.to_json();
            write(&dir.join(format!("{x}.expl.json")), &expl_json)?;
            write(&dir.join(format!("{x}.match.json")), &match_json)?;
            let stored = StoredRow {
                checksum: checksum(cfg, &model_json, expl_json.as_bytes(), match_json.as_bytes()),
                record: record.clone(),
            };
            write(&dir.join(format!("{x}.row.json")), serde_json::to_string(&stored).expect("serializable"))?;
        } else if let Some(err) = &outcome.error {
            write(&dir.join(format!("{x}.error.txt")), format!("{err}\n"))?;
        }
        rows.push(record);
    }
    Ok((rows, reused))
}

fn pool(cfg: &ExperimentConfig) -> Result<rayon::ThreadPool, HarnessError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cfg.jobs {
        b = b.num_threads(j);
    }
    b.build().map_err(|e| HarnessError::ConfigInvalid(format!("jobs: {e}")))
}

/// Runs every (grid cell, model, explainer) task and writes `results.csv`
/// under `out`. Task failures become status rows; only configuration and
/// I/O problems abort the sweep.
pub fn run_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<SweepOutcome, HarnessError> {
    cfg.validate()?;
    fs::create_dir_all(out).map_err(io_err(out))?;
    let all = tasks(cfg);
    let results: Vec<Result<(Vec<MetricsRecord>, usize), HarnessError>> =
        pool(cfg)?.install(|| all.par_iter().map(|(cell, idx)| run_task(cfg, out, cell, *idx)).collect());
    let mut records = Vec::new();
    let mut reused = 0;
    for r in results {
        let (rows, n) = r?;
        records.extend(rows);
        reused += n;
    }
    let order = |name: &str| name.parse::<ExplainerId>().ok();
    records.sort_by(|a, b| (&a.model_id, order(&a.explainer)).cmp(&(&b.model_id, order(&b.explainer))));
    let results_path = out.join(RESULTS_FILE);
    let mut buf = Vec::new();
    write_records(&records, &mut buf)?;
    write(&results_path, &buf)?;
    Ok(SweepOutcome { records, reused, results_path })
}

/// Writes model, data and ground-truth artifacts for every task without
/// explaining. Returns the number of models written and of failures.
pub fn generate_artifacts(cfg: &ExperimentConfig, out: &Path) -> Result<(usize, usize), HarnessError> {
    cfg.validate()?;
    let all = tasks(cfg);
    let results: Vec<Result<bool, HarnessError>> = pool(cfg)?.install(|| {
        all.par_iter()
            .map(|(cell, idx)| {
                let dir = out.join(cell.key()).join(format!("{idx:04}"));
                match prepare_model(cfg, cell, *idx) {
                    Ok(p) => write_model_artifacts(&dir, &p).map(|_| true),
                    Err(e) => {
                        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
                        write(&dir.join("error.txt"), format!("{e}\n")).map(|_| false)
                    }
                }
            })
            .collect()
    });
    let mut ok = 0;
    let mut failed = 0;
    for r in results {
        if r? {
            ok += 1;
        } else {
            failed += 1;
        }
    }
    Ok((ok, failed))
}

/// Summarizes `results.csv` in `input` into `out`.
pub fn report(input: &Path, out: &Path) -> Result<Vec<SummaryRow>, HarnessError> {
    let path = if input.is_dir() { input.join(RESULTS_FILE) } else { input.to_path_buf() };
    let file = fs::File::open(&path).map_err(io_err(&path))?;
    let rows = aggregate(&read_records(file)?);
    let mut buf = Vec::new();
    write_summary(&rows, &mut buf)?;
    write(out, &buf)?;
    Ok(rows)
}
