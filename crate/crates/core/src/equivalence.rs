//! Mapping raw explainer output onto the scale of the true contributions.

use std::io::Write;

use ndarray::{Array2, ArrayView2};

use crate::alignment::MatchResult;
use crate::dataset::{format_f64, Dataset};
use crate::explain::{ExplainerExplanation, ExplanationKind};

pub const DEFAULT_ATOL: f64 = 1e-8;

/// Raw-space coefficients from z-space ones: `theta_i / sigma_i` and
/// `theta0 - sum_i mu_i theta_i / sigma_i`.
pub fn lime_unnormalize(theta0: f64, theta: &[f64], mu: &[f64], sigma: &[f64]) -> (f64, Vec<f64>) {
    let scaled: Vec<f64> = theta.iter().zip(sigma).map(|(t, s)| t / s).collect();
    let shift: f64 = scaled.iter().zip(mu).map(|(t, m)| t * m).sum();
    (theta0 - shift, scaled)
}

/// Entry `(i, s)` is `x[s, i] * theta[i]`.
pub fn coefficients_to_contributions(theta: &[f64], x: ArrayView2<'_, f64>) -> Array2<f64> {
    assert_eq!(theta.len(), x.ncols(), "one coefficient per column");
    let mut out = x.t().to_owned();
    for (mut row, &t) in out.rows_mut().into_iter().zip(theta) {
        row.mapv_inplace(|v| v * t);
    }
    out
}

/// Subtracts `means[i]` from row `i` of a `d x n` PD matrix.
pub fn pdp_center(pd_values: ArrayView2<'_, f64>, means: &[f64]) -> Array2<f64> {
    let mut out = pd_values.to_owned();
    for (mut row, &m) in out.rows_mut().into_iter().zip(means) {
        row.mapv_inplace(|v| v - m);
    }
    out
}

/// Row means of a PD matrix evaluated over the whole dataset.
pub fn pd_row_means(pd_values: ArrayView2<'_, f64>) -> Vec<f64> {
    let n = pd_values.ncols() as f64;
    pd_values.rows().into_iter().map(|r| r.sum() / n).collect()
}

/// `true` for effects with at least one contribution above `atol` in magnitude.
pub fn zero_tolerance_filter(contributions: ArrayView2<'_, f64>, atol: f64) -> Vec<bool> {
    contributions
        .rows()
        .into_iter()
        .map(|r| r.iter().any(|v| v.abs() > atol))
        .collect()
}

/// Per-group explainer sums plus the expected contribution of each model
/// effect in the group.
pub fn shap_add_expectation(group_sums: &[f64], matching: &MatchResult, expected: &[f64]) -> Vec<f64> {
    matching
        .groups
        .iter()
        .zip(group_sums)
        .map(|(g, &s)| s + g.model.iter().map(|&j| expected[j]).sum::<f64>())
        .collect()
}

/// Explainer contributions ready for comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustedExplanation {
    pub effects: Vec<Vec<usize>>,
    pub samples: Vec<usize>,
    /// `m_hat x samples.len()`.
    pub contributions: Array2<f64>,
    /// Per-sample constant term: the raw-space intercept or the base value.
    /// Absent for PD explanations, whose constant is the mean model output.
    pub offset: Option<Vec<f64>>,
    /// Whether group values receive the expected contributions of their model effects.
    pub add_expectation: bool,
}

impl AdjustedExplanation {
    /// Ordered like the ground-truth contributions CSV.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for col in self.contributions.columns() {
            let row: Vec<String> = col.iter().map(|v| format_f64(*v)).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Column `c` of each kept effect, summed per match group.
    pub fn group_sums(&self, matching: &MatchResult, kept: &[usize], c: usize) -> Vec<f64> {
        matching
            .groups
            .iter()
            .map(|g| g.explainer.iter().map(|&k| self.contributions[[kept[k], c]]).sum())
            .collect()
    }

    pub fn presence(&self, atol: f64) -> Vec<bool> {
        zero_tolerance_filter(self.contributions.view(), atol)
    }
}

/// Applies the correction that matches the explanation kind.
pub fn adjust(expl: &ExplainerExplanation, data: &Dataset) -> Result<AdjustedExplanation, String> {
    let d = expl.d();
    let n = expl.samples.len();
    if d != data.d() {
        return Err(format!("explanation has {d} effects, data has {} features", data.d()));
    }
    if expl.payload.len() != n || expl.payload.iter().any(|p| p.len() != d) {
        return Err("payload shape does not match samples x effects".into());
    }
    let mut contributions = Array2::<f64>::zeros((d, n));
    let (offset, add_expectation) = match expl.kind {
        ExplanationKind::SurrogateCoefficients => {
            let (intercepts, mu, sigma) = match (&expl.intercepts, &expl.mu, &expl.sigma) {
                (Some(i), Some(m), Some(s)) => (i, m, s),
                _ => return Err("surrogate explanation needs intercepts, mu and sigma".into()),
            };
            let mut offsets = Vec::with_capacity(n);
            for (c, &s) in expl.samples.iter().enumerate() {
                let (t0, t) = lime_unnormalize(intercepts[c], &expl.payload[c], mu, sigma);
                let x = data.row(s);
                for i in 0..d {
                    contributions[[i, c]] = x[i] * t[i];
                }
                offsets.push(t0);
            }
            (Some(offsets), false)
        }
        ExplanationKind::ShapleyAttributions => {
            let base = expl.base_value.ok_or("Shapley explanation needs base_value")?;
            for (c, phi) in expl.payload.iter().enumerate() {
                for i in 0..d {
                    contributions[[i, c]] = phi[i];
                }
            }
            (Some(vec![base; n]), true)
        }
        ExplanationKind::PdValues => {
            let means = expl.pd_means.as_ref().ok_or("PD explanation needs pd_means")?;
            let mut raw = Array2::<f64>::zeros((d, n));
            for (c, pd) in expl.payload.iter().enumerate() {
                for i in 0..d {
                    raw[[i, c]] = pd[i];
                }
            }
            contributions = pdp_center(raw.view(), means);
            (None, true)
        }
    };
    if contributions.iter().any(|v| !v.is_finite()) {
        return Err("non-finite adjusted contribution".into());
    }
    Ok(AdjustedExplanation {
        effects: expl.effects.clone(),
        samples: expl.samples.clone(),
        contributions,
        offset,
        add_expectation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::match_effects;
    use ndarray::array;

    #[test]
    fn unnormalize_examples() {
        assert_eq!(lime_unnormalize(1.0, &[2.0, -1.0], &[0.0, 0.0], &[1.0, 1.0]), (1.0, vec![2.0, -1.0]));
        assert_eq!(lime_unnormalize(1.0, &[2.0], &[3.0], &[2.0]), (-2.0, vec![1.0]));
    }

    #[test]
    fn contributions_examples() {
        let x = array![[0.5, 0.5], [1.0, -2.0]];
        assert_eq!(coefficients_to_contributions(&[0.0, 0.0], x.view()), Array2::<f64>::zeros((2, 2)));
        assert_eq!(coefficients_to_contributions(&[1.0, 1.0], x.view()), x.t());
        let c = coefficients_to_contributions(&[2.0, -1.0], x.view());
        assert_eq!(c.column(0).to_vec(), vec![1.0, -0.5]);
    }

    #[test]
    fn add_expectation_examples() {
        let m = match_effects(&[vec![0], vec![1]], &[vec![0]]);
        assert_eq!(shap_add_expectation(&[0.7, 0.0], &m, &[0.0, 0.0]), vec![0.7, 0.0]);
        // model effect 1 is unexplained: its group value is its expectation
        assert_eq!(shap_add_expectation(&[0.7, 0.0], &m, &[0.25, -0.5]), vec![0.95, -0.5]);
        // 2 x0 with background mean 0.1
        let x0 = 0.8;
        let phi = 2.0 * (x0 - 0.1);
        let single = match_effects(&[vec![0]], &[vec![0]]);
        let v = shap_add_expectation(&[phi], &single, &[0.2])[0];
        assert!((v - 2.0 * x0).abs() < 1e-15);
    }

    #[test]
    fn centering() {
        let flat = array![[3.0, 3.0, 3.0]];
        assert_eq!(pdp_center(flat.view(), &pd_row_means(flat.view())), array![[0.0, 0.0, 0.0]]);
        let pd = array![[1.0, 2.0, 6.0]];
        assert_eq!(pdp_center(pd.view(), &pd_row_means(pd.view())), array![[-2.0, -1.0, 3.0]]);
    }

    #[test]
    fn filter_examples() {
        let c = array![[0.0, 0.0, 0.0], [0.0, 1e-3, 0.0], [5e-9, -5e-9, 5e-9]];
        assert_eq!(zero_tolerance_filter(c.view(), DEFAULT_ATOL), vec![false, true, false]);
        assert_eq!(zero_tolerance_filter(c.view(), 1e-9), vec![false, true, true]);
    }
}
