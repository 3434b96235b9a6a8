//! Weighted ridge least squares via Cholesky on the normal equations.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::ExplainError;

const JITTER: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Intercept {
    /// Every column is penalized.
    None,
    /// Column 0 is an intercept and is left unpenalized.
    FirstColumn,
}

/// Minimizes `sum_i w_i (b_i - a_i . theta)^2 + ridge * |theta_pen|^2`.
///
/// Diagonal jitter (relative to the largest diagonal entry) is added only if the first factorization fails; a second
/// failure is reported as [`ExplainError::SingularSystem`].
pub fn weighted_least_squares(
    a: ArrayView2<'_, f64>,
    b: ArrayView1<'_, f64>,
    w: ArrayView1<'_, f64>,
    ridge: f64,
    intercept: Intercept,
) -> Result<Array1<f64>, ExplainError> {
    let (n, q) = a.dim();
    if b.len() != n || w.len() != n {
        return Err(ExplainError::InvalidInput(format!(
            "design has {n} rows but targets {} and weights {}",
            b.len(),
            w.len()
        )));
    }
    if w.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(ExplainError::InvalidInput("weights must be finite and non-negative".into()));
    }
    let mut g = Array2::<f64>::zeros((q, q));
    let mut r = Array1::<f64>::zeros(q);
    for i in 0..n {
        let wi = w[i];
        if wi == 0.0 {
            continue;
        }
        let row = a.row(i);
        for j in 0..q {
            let wa = wi * row[j];
            r[j] += wa * b[i];
            for k in j..q {
                g[[j, k]] += wa * row[k];
            }
        }
    }
    for j in 0..q {
        for k in 0..j {
            g[[j, k]] = g[[k, j]];
        }
    }
    let start = usize::from(intercept == Intercept::FirstColumn);
    for j in start..q {
        g[[j, j]] += ridge;
    }
    let l = match cholesky(&g) {
        Some(l) => l,
        None => {
            let scale = (0..q).map(|j| g[[j, j]].abs()).fold(0.0, f64::max);
            for j in 0..q {
                g[[j, j]] += JITTER * scale;
            }
            cholesky(&g).ok_or(ExplainError::SingularSystem)?
        }
    };
    Ok(cholesky_solve(&l, &r))
}

/// Lower-triangular factor, or `None` when a pivot is not clearly positive.
fn cholesky(g: &Array2<f64>) -> Option<Array2<f64>> {
    let q = g.nrows();
    let scale = (0..q).map(|j| g[[j, j]].abs()).fold(0.0, f64::max);
    let tiny = scale * 1e-13;
    let mut l = Array2::<f64>::zeros((q, q));
    for j in 0..q {
        let mut diag = g[[j, j]];
        for k in 0..j {
            diag -= l[[j, k]] * l[[j, k]];
        }
        if !diag.is_finite() || diag <= tiny {
            return None;
        }
        let ljj = diag.sqrt();
        l[[j, j]] = ljj;
        for i in j + 1..q {
            let mut s = g[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / ljj;
        }
    }
    Some(l)
}

fn cholesky_solve(l: &Array2<f64>, r: &Array1<f64>) -> Array1<f64> {
    let q = l.nrows();
    let mut y = Array1::<f64>::zeros(q);
    for i in 0..q {
        let mut s = r[i];
        for k in 0..i {
            s -= l[[i, k]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    let mut x = Array1::<f64>::zeros(q);
    for i in (0..q).rev() {
        let mut s = y[i];
        for k in i + 1..q {
            s -= l[[k, i]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    x
}
