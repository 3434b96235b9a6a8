//! Analytic per-effect contributions of a white-box model.

use std::io::Write;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::dataset::{format_f64, Dataset};
use crate::error::GroundTruthError;
use crate::expr::{additive_sum, AdditiveModel};

/// Effects, their contributions at every sample (`m x n`), and the empirical
/// expectation of each contribution over the same samples.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthExplanation {
    pub effects: Vec<Vec<usize>>,
    pub contributions: Array2<f64>,
    pub expected: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GroundTruthDoc {
    effects: Vec<Vec<usize>>,
    expected: Vec<f64>,
}

impl GroundTruthExplanation {
    pub fn m(&self) -> usize {
        self.effects.len()
    }

    pub fn n(&self) -> usize {
        self.contributions.ncols()
    }

    /// Contributions of every effect at sample `s`.
    pub fn at(&self, s: usize) -> ArrayView1<'_, f64> {
        self.contributions.column(s)
    }

    /// Sum of contributions at sample `s`, in effect order.
    pub fn total(&self, s: usize) -> f64 {
        additive_sum(self.at(s).iter().copied())
    }

    /// `E[F(x)] = sum_j E[C_j]`.
    pub fn expected_output(&self) -> f64 {
        additive_sum(self.expected.iter().copied())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&GroundTruthDoc {
            effects: self.effects.clone(),
            expected: self.expected.clone(),
        })
        .expect("serializable")
    }

    /// One row per sample, one column per effect.
    pub fn write_contributions_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for s in 0..self.n() {
            let row: Vec<String> = self.at(s).iter().map(|v| format_f64(*v)).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

pub fn explain_ground_truth(
    model: &AdditiveModel,
    data: &Dataset,
) -> Result<GroundTruthExplanation, GroundTruthError> {
    if model.d() != data.d() {
        return Err(GroundTruthError::DimensionMismatch { model: model.d(), data: data.d() });
    }
    let m = model.m();
    let n = data.n();
    let mut contributions = Array2::zeros((m, n));
    for (s, row) in data.x().rows().into_iter().enumerate() {
        let x = row.to_vec();
        for (j, effect) in model.effects().iter().enumerate() {
            let c = effect.eval(&x);
            if !c.is_finite() {
                return Err(GroundTruthError::NonFiniteContribution { effect: j, sample: s });
            }
            contributions[[j, s]] = c;
        }
    }
    let expected = contributions
        .rows()
        .into_iter()
        .map(|r| r.sum() / n as f64)
        .collect();
    Ok(GroundTruthExplanation {
        effects: model.effect_feature_sets(),
        contributions,
        expected,
    })
}
