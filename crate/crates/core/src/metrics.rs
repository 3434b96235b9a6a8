//! Infidelity scores between matched true and explained contributions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::alignment::{match_effects, MatchResult};
use crate::dataset::quantile;
use crate::equivalence::AdjustedExplanation;
use crate::error::MetricError;
use crate::ground_truth::GroundTruthExplanation;
use crate::model_gen::GridPoint;

fn max_abs(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, |m, a| m.max(a.abs()))
}

/// `sqrt(sum of squares)`, rescaled when the plain sum would overflow or
/// lose everything to underflow.
fn norm2(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let plain = v.clone().map(|a| a * a).sum::<f64>();
    if plain.is_normal() || plain == 0.0 && v.clone().all(|a| a == 0.0) {
        return plain.sqrt();
    }
    let scale = max_abs(v.clone());
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * v.map(|a| (a / scale) * (a / scale)).sum::<f64>().sqrt()
}

/// `1 - cos(v, w)`. Two zero vectors are at distance 0, one zero vector is at 1.
pub fn cosine_distance(v: &[f64], w: &[f64]) -> f64 {
    assert_eq!(v.len(), w.len(), "cosine distance of vectors with different lengths");
    let dot: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
    let vv: f64 = v.iter().map(|a| a * a).sum();
    let ww: f64 = w.iter().map(|a| a * a).sum();
    let zero = |x: &[f64]| x.iter().all(|&a| a == 0.0);
    match (zero(v), zero(w)) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return 1.0,
        _ => {}
    }
    let cos = if (vv * ww).is_normal() && dot.is_finite() {
        // One square root keeps (v, v) at exactly 0.
        dot / (vv * ww).sqrt()
    } else {
        // Magnitudes far from 1: compare directions of the rescaled vectors.
        let (sv, sw) = (max_abs(v.iter().copied()), max_abs(w.iter().copied()));
        let vs: Vec<f64> = v.iter().map(|a| a / sv).collect();
        let ws: Vec<f64> = w.iter().map(|a| a / sw).collect();
        let dot: f64 = vs.iter().zip(&ws).map(|(a, b)| a * b).sum();
        let vv: f64 = vs.iter().map(|a| a * a).sum();
        let ww: f64 = ws.iter().map(|a| a * a).sum();
        dot / (vv * ww).sqrt()
    };
    // Clamping absorbs rounding just outside [-1, 1].
    (1.0 - cos).clamp(0.0, 2.0)
}

pub fn euclidean_distance(v: &[f64], w: &[f64]) -> f64 {
    assert_eq!(v.len(), w.len(), "euclidean distance of vectors with different lengths");
    norm2(v.iter().zip(w).map(|(a, b)| a - b))
}

pub fn rmse(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| x - y);
    let plain = diff.clone().map(|e| e * e).sum::<f64>();
    if plain.is_finite() {
        (plain / a.len() as f64).sqrt()
    } else {
        norm2(diff) / (a.len() as f64).sqrt()
    }
}

/// RMSE divided by the interquartile range of `a`.
pub fn nrmse(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 4 {
        return Err(MetricError::TooShort { needed: 4, got: a.len() });
    }
    let iqr = quantile(a, 0.75) - quantile(a, 0.25);
    if !(iqr > 0.0) {
        return Err(MetricError::DegenerateIqr);
    }
    Ok(rmse(a, b) / iqr)
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            out[o] = rank;
        }
        i = j + 1;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricError::ZeroVariance);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Spearman's rank correlation (Pearson on average ranks).
pub fn spearman_rho(u: &[f64], w: &[f64]) -> Result<f64, MetricError> {
    if u.len() != w.len() {
        return Err(MetricError::LengthMismatch(u.len(), w.len()));
    }
    if u.len() < 2 {
        return Err(MetricError::TooShort { needed: 2, got: u.len() });
    }
    pearson(&ranks(u), &ranks(w))
}

/// Ground-truth and explained value of every match group at one explained
/// sample (column `c` of the adjusted explanation). `kept` maps the
/// explainer indices used in `matching` to rows of `adjusted`.
pub fn build_comparison_vectors(
    matching: &MatchResult,
    gt: &GroundTruthExplanation,
    adjusted: &AdjustedExplanation,
    kept: &[usize],
    c: usize,
) -> (Vec<f64>, Vec<f64>) {
    let s = adjusted.samples[c];
    let v: Vec<f64> = matching
        .groups
        .iter()
        .map(|g| g.model.iter().map(|&j| gt.contributions[[j, s]]).sum())
        .collect();
    let sums = adjusted.group_sums(matching, kept, c);
    let vh = if adjusted.add_expectation {
        crate::equivalence::shap_add_expectation(&sums, matching, &gt.expected)
    } else {
        sums
    };
    (v, vh)
}

/// Scores of one explanation against the truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    pub matching: MatchResult,
    pub kept: Vec<usize>,
    pub maiou: f64,
    pub mean_cosine: f64,
    pub mean_euclidean: f64,
    /// NRMSE per group; `None` where it is undefined (e.g. constant truth).
    pub per_group_nrmse: Vec<Option<f64>>,
    pub mean_nrmse: Option<f64>,
    pub explainer_rmse: f64,
}

/// Filters near-zero explainer effects, matches, corrects and scores.
/// `outputs[c]` is the model output at explained sample `c`.
pub fn score_explanation(
    gt: &GroundTruthExplanation,
    adjusted: &AdjustedExplanation,
    outputs: &[f64],
    atol: f64,
) -> Scores {
    let kept: Vec<usize> = adjusted
        .presence(atol)
        .iter()
        .enumerate()
        .filter_map(|(k, &p)| p.then_some(k))
        .collect();
    let kept_effects: Vec<Vec<usize>> = kept.iter().map(|&k| adjusted.effects[k].clone()).collect();
    let matching = match_effects(&gt.effects, &kept_effects);
    let n = adjusted.samples.len();
    let g = matching.groups.len();
    let mut cos = 0.0;
    let mut euc = 0.0;
    let mut series_v = vec![Vec::with_capacity(n); g];
    let mut series_vh = vec![Vec::with_capacity(n); g];
    for c in 0..n {
        let (v, vh) = build_comparison_vectors(&matching, gt, adjusted, &kept, c);
        cos += cosine_distance(&v, &vh);
        euc += euclidean_distance(&v, &vh);
        for q in 0..g {
            series_v[q].push(v[q]);
            series_vh[q].push(vh[q]);
        }
    }
    let per_group_nrmse: Vec<Option<f64>> =
        series_v.iter().zip(&series_vh).map(|(a, b)| nrmse(a, b).ok()).collect();
    let defined: Vec<f64> = per_group_nrmse.iter().flatten().copied().collect();
    let mean_nrmse = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);

    let mean_output = gt.expected_output();
    let predictions: Vec<f64> = (0..n)
        .map(|c| {
            let constant = adjusted.offset.as_ref().map_or(mean_output, |o| o[c]);
            adjusted.contributions.column(c).sum() + constant
        })
        .collect();
    let explainer_rmse = rmse(&predictions, outputs);
    Scores {
        maiou: matching.maiou,
        matching,
        kept,
        mean_cosine: cos / n as f64,
        mean_euclidean: euc / n as f64,
        per_group_nrmse,
        mean_nrmse,
        explainer_rmse,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    ExplainFailed,
    Timeout,
    GenerationFailed,
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub model_id: String,
    pub explainer: String,
    pub d: usize,
    pub n_dummy: usize,
    pub pct_nonlinear: f64,
    pub pct_interact: f64,
    pub order_interact: usize,
    pub maiou: Option<f64>,
    pub mean_cosine: Option<f64>,
    pub mean_euclidean: Option<f64>,
    pub mean_nrmse: Option<f64>,
    pub explainer_rmse: Option<f64>,
    pub dropped_evals: u64,
    pub wall_ms: u64,
    pub status: Status,
}

pub const RESULTS_HEADER: [&str; 15] = [
    "model_id",
    "explainer",
    "d",
    "n_dummy",
    "pct_nonlinear",
    "pct_interact",
    "order_interact",
    "maiou",
    "mean_cosine",
    "mean_euclidean",
    "mean_nrmse",
    "explainer_rmse",
    "dropped_evals",
    "wall_ms",
    "status",
];

impl MetricsRecord {
    pub fn new(model_id: String, explainer: &str, cell: &GridPoint, status: Status) -> Self {
        MetricsRecord {
            model_id,
            explainer: explainer.to_string(),
            d: cell.d,
            n_dummy: cell.n_dummy,
            pct_nonlinear: cell.pct_nonlinear,
            pct_interact: cell.pct_interact,
            order_interact: cell.order_interact,
            maiou: None,
            mean_cosine: None,
            mean_euclidean: None,
            mean_nrmse: None,
            explainer_rmse: None,
            dropped_evals: 0,
            wall_ms: 0,
            status,
        }
    }

    pub fn with_scores(mut self, scores: &Scores) -> Self {
        self.maiou = Some(scores.maiou);
        self.mean_cosine = Some(scores.mean_cosine);
        self.mean_euclidean = Some(scores.mean_euclidean);
        self.mean_nrmse = scores.mean_nrmse;
        self.explainer_rmse = Some(scores.explainer_rmse);
        self
    }

    pub fn cell(&self) -> GridPoint {
        GridPoint {
            d: self.d,
            n_dummy: self.n_dummy,
            pct_nonlinear: self.pct_nonlinear,
            pct_interact: self.pct_interact,
            order_interact: self.order_interact,
        }
    }
}

pub fn write_records<W: std::io::Write>(records: &[MetricsRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record(RESULTS_HEADER)?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: std::io::Read>(input: R) -> csv::Result<Vec<MetricsRecord>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

/// Per-(cell, explainer) means over successful rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub cell: String,
    pub explainer: String,
    pub models: usize,
    pub failed: usize,
    pub mean_maiou: f64,
    pub mean_cosine: f64,
    pub mean_euclidean: f64,
    pub mean_explainer_rmse: f64,
    /// Rank correlation across the cell's explainers between fidelity
    /// (`1 - mean_cosine`) and prediction accuracy (`-explainer_rmse`).
    pub rho_perf: Option<f64>,
}

/// Spearman correlation of `1 - cosine` with `-rmse` across explainers.
pub fn rho_perf(mean_cosine: &[f64], explainer_rmse: &[f64]) -> Result<f64, MetricError> {
    let fidelity: Vec<f64> = mean_cosine.iter().map(|c| 1.0 - c).collect();
    let accuracy: Vec<f64> = explainer_rmse.iter().map(|r| -r).collect();
    spearman_rho(&fidelity, &accuracy)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Summaries per grid cell and explainer, plus an `all` cell over every row.
/// Output is sorted by cell key then explainer.
pub fn aggregate(records: &[MetricsRecord]) -> Vec<SummaryRow> {
    let mut buckets: BTreeMap<(String, String), Vec<&MetricsRecord>> = BTreeMap::new();
    for r in records {
        buckets.entry((r.cell().key(), r.explainer.clone())).or_default().push(r);
        buckets.entry(("all".to_string(), r.explainer.clone())).or_default().push(r);
    }
    let mut rows: Vec<SummaryRow> = buckets
        .into_iter()
        .map(|((cell, explainer), rs)| {
            let ok: Vec<&&MetricsRecord> = rs.iter().filter(|r| r.status == Status::Ok).collect();
            SummaryRow {
                cell,
                explainer,
                models: ok.len(),
                failed: rs.len() - ok.len(),
                mean_maiou: mean(ok.iter().filter_map(|r| r.maiou)),
                mean_cosine: mean(ok.iter().filter_map(|r| r.mean_cosine)),
                mean_euclidean: mean(ok.iter().filter_map(|r| r.mean_euclidean)),
                mean_explainer_rmse: mean(ok.iter().filter_map(|r| r.explainer_rmse)),
                rho_perf: None,
            }
        })
        .collect();
    let mut by_cell: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        if r.models > 0 {
            by_cell.entry(r.cell.clone()).or_default().push(i);
        }
    }
    for idx in by_cell.values() {
        let cos: Vec<f64> = idx.iter().map(|&i| rows[i].mean_cosine).collect();
        let err: Vec<f64> = idx.iter().map(|&i| rows[i].mean_explainer_rmse).collect();
        if let Ok(rho) = rho_perf(&cos, &err) {
            for &i in idx {
                rows[i].rho_perf = Some(rho);
            }
        }
    }
    rows
}

pub fn write_summary<W: std::io::Write>(rows: &[SummaryRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
