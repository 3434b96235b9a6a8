//! Random generation of feature-additive white boxes.
//!
//! Generation runs in four phases, each drawing from its own RNG stream:
//!
//! 1. nonlinear main effects: `round(pct_nonlinear * u)` unary operators are
//!    binned as evenly as possible over at most `u` features and composed over
//!    each feature's leaf (`u = d - n_dummy`);
//! 2. linear main effects: every remaining used feature becomes a bare leaf;
//! 3. nonlinear interaction effects;
//! 4. linear interaction effects, bridged with `*` or `/` only.
//!
//! Interactions are `min(round(pct_interact * u), C(u, order))` distinct
//! feature combinations, each over exactly `order_interact` features. The
//! nonlinear share of them is chosen the same way as for main effects; their
//! operators are drawn from the unary and nonlinear binary classes together,
//! and any bridge not covered by a nonlinear binary operator is filled with a
//! linear one.
//!
//! An effect whose expression is non-finite somewhere on the validation rows
//! is redrawn (bounded); a model that still fails is regenerated from
//! `seed + round`.

use std::collections::HashSet;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::GenError;
use crate::expr::{AdditiveModel, BinaryOp, Effect, Expr, UnaryOp};
use crate::rng::{stream, weighted_index};

const STREAM_FEATURES: u64 = 0;
const STREAM_NONLINEAR_MAIN: u64 = 1;
const STREAM_INTERACTION_SELECT: u64 = 3;
const STREAM_NONLINEAR_INTERACT: u64 = 4;
const STREAM_LINEAR_INTERACT: u64 = 5;
const STREAM_PROBE: u64 = 6;

pub const DEFAULT_MAX_ROUNDS: usize = 50;
pub const DEFAULT_EFFECT_REDRAWS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub d: usize,
    pub n_dummy: usize,
    pub pct_nonlinear: f64,
    pub pct_interact: f64,
    pub order_interact: usize,
    pub seed: u64,
}

impl GenParams {
    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |msg: String| Err(GenError::InvalidParams(msg));
        if self.d == 0 {
            return bad("d must be at least 1".into());
        }
        if self.n_dummy >= self.d {
            return bad(format!("n_dummy ({}) must be < d ({})", self.n_dummy, self.d));
        }
        if !(self.pct_nonlinear.is_finite() && self.pct_nonlinear >= 0.0) {
            return bad(format!("pct_nonlinear must be >= 0, got {}", self.pct_nonlinear));
        }
        if !(0.0..=0.5).contains(&self.pct_interact) {
            return bad(format!("pct_interact must lie in [0, 0.5], got {}", self.pct_interact));
        }
        if self.order_interact == 0 {
            return bad("order_interact must be at least 1".into());
        }
        Ok(())
    }

    /// Order 1 means no interactions, whatever `pct_interact` says.
    pub fn effective_pct_interact(&self) -> f64 {
        if self.order_interact <= 1 {
            0.0
        } else {
            self.pct_interact
        }
    }

    pub fn used_features(&self) -> usize {
        self.d - self.n_dummy
    }

    pub fn interaction_count(&self) -> usize {
        let u = self.used_features();
        let wanted = (self.effective_pct_interact() * u as f64).round() as usize;
        if self.order_interact <= 1 {
            return 0;
        }
        wanted.min(binomial_saturating(u, self.order_interact))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GenOptions {
    pub max_rounds: usize,
    pub effect_redraws: usize,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            max_rounds: DEFAULT_MAX_ROUNDS,
            effect_redraws: DEFAULT_EFFECT_REDRAWS,
        }
    }
}

/// Generates a model validated on the stratified probe grid only.
pub fn generate_model(params: &GenParams) -> Result<AdditiveModel, GenError> {
    generate_model_with(params, None, GenOptions::default())
}

/// Generates a model that is finite on the probe grid and on `extra_rows`
/// (typically the evaluation dataset).
pub fn generate_model_with(
    params: &GenParams,
    extra_rows: Option<ArrayView2<'_, f64>>,
    options: GenOptions,
) -> Result<AdditiveModel, GenError> {
    params.validate()?;
    if let Some(extra) = &extra_rows {
        if extra.ncols() != params.d {
            return Err(GenError::InvalidParams(format!(
                "validation rows have {} columns, expected {}",
                extra.ncols(),
                params.d
            )));
        }
    }
    for round in 0..options.max_rounds {
        let seed = params.seed.wrapping_add(round as u64);
        let mut rows: Vec<Vec<f64>> = stratified_probe(params.d, seed)
            .rows()
            .into_iter()
            .map(|r| r.to_vec())
            .collect();
        if let Some(extra) = &extra_rows {
            rows.extend(extra.rows().into_iter().map(|r| r.to_vec()));
        }
        let Some(model) = generate_round(params, seed, &rows, options.effect_redraws) else {
            continue;
        };
        let check = Array2::from_shape_vec(
            (rows.len(), params.d),
            rows.iter().flatten().copied().collect(),
        )
        .expect("rows are rectangular");
        if model.validate_domain(check.view()) {
            return Ok(model);
        }
    }
    Err(GenError::GenerationFailed { rounds: options.max_rounds })
}

/// `10 d` rows; column `i` holds the midpoints of `10 d` equal strata of
/// `[-1, 1]` in a seeded random order.
pub fn stratified_probe(d: usize, seed: u64) -> Array2<f64> {
    let n = 10 * d;
    let mut rng = stream(seed, STREAM_PROBE);
    let mut out = Array2::zeros((n, d));
    let mut column: Vec<f64> = (0..n)
        .map(|k| -1.0 + (2 * k + 1) as f64 / n as f64)
        .collect();
    for i in 0..d {
        column.shuffle(&mut rng);
        for (r, &v) in column.iter().enumerate() {
            out[[r, i]] = v;
        }
    }
    out
}

/// Splits `total` items over `bins` bins as evenly as possible; the first
/// `total % bins` bins receive one extra.
pub fn bin_counts(total: usize, bins: usize) -> Vec<usize> {
    if bins == 0 {
        return Vec::new();
    }
    let base = total / bins;
    let extra = total % bins;
    (0..bins).map(|b| base + usize::from(b < extra)).collect()
}

pub fn binomial_saturating(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

fn effect_is_finite(expr: &Expr, rows: &[Vec<f64>]) -> bool {
    rows.iter().all(|r| expr.eval(r).is_finite())
}

fn draw_unary<R: Rng + ?Sized>(rng: &mut R) -> UnaryOp {
    let weights: Vec<f64> = UnaryOp::ALL.iter().map(|op| op.weight()).collect();
    UnaryOp::ALL[weighted_index(rng, &weights)]
}

const LINEAR_BRIDGES: [BinaryOp; 2] = [BinaryOp::Mul, BinaryOp::Div];
const NONLINEAR_BRIDGES: [BinaryOp; 2] = [BinaryOp::Min, BinaryOp::Max];

fn draw_linear_binary<R: Rng + ?Sized>(rng: &mut R) -> BinaryOp {
    let weights = LINEAR_BRIDGES.map(BinaryOp::weight);
    LINEAR_BRIDGES[weighted_index(rng, &weights)]
}

#[derive(Debug, Clone, Copy)]
enum DrawnOp {
    Unary(UnaryOp),
    Binary(BinaryOp),
}

/// Draws from the unary and nonlinear-binary classes with weights normalized
/// over both; binaries are refused once `binary_left` reaches zero.
fn draw_nonlinear<R: Rng + ?Sized>(rng: &mut R, binary_left: usize) -> DrawnOp {
    let mut weights: Vec<f64> = UnaryOp::ALL.iter().map(|op| op.weight()).collect();
    if binary_left > 0 {
        weights.extend(NONLINEAR_BRIDGES.iter().map(|op| op.weight()));
    }
    let idx = weighted_index(rng, &weights);
    if idx < UnaryOp::ALL.len() {
        DrawnOp::Unary(UnaryOp::ALL[idx])
    } else {
        DrawnOp::Binary(NONLINEAR_BRIDGES[idx - UnaryOp::ALL.len()])
    }
}

/// Applies `ops` in order to a pool of terms: a unary wraps a random term, a
/// binary joins two random terms. `ops` must hold exactly `terms.len() - 1`
/// binaries.
fn assemble<R: Rng + ?Sized>(rng: &mut R, mut terms: Vec<Expr>, ops: &[DrawnOp]) -> Expr {
    for op in ops {
        match *op {
            DrawnOp::Unary(u) => {
                let i = rng.random_range(0..terms.len());
                let t = terms.swap_remove(i);
                terms.push(Expr::unary(u, t));
            }
            DrawnOp::Binary(b) => {
                let i = rng.random_range(0..terms.len());
                let lhs = terms.swap_remove(i);
                let j = rng.random_range(0..terms.len());
                let rhs = terms.swap_remove(j);
                terms.push(Expr::binary(b, lhs, rhs));
            }
        }
    }
    debug_assert_eq!(terms.len(), 1);
    terms.pop().expect("at least one term")
}

fn nonlinear_main<R: Rng + ?Sized>(rng: &mut R, feature: usize, n_ops: usize) -> Expr {
    let mut expr = Expr::leaf(feature);
    for _ in 0..n_ops {
        expr = Expr::unary(draw_unary(rng), expr);
    }
    expr
}

fn nonlinear_interaction<R: Rng + ?Sized>(rng: &mut R, features: &[usize], n_ops: usize) -> Expr {
    let bridges = features.len() - 1;
    let mut ops = Vec::with_capacity(n_ops + bridges);
    let mut binary_left = bridges;
    for _ in 0..n_ops {
        let op = draw_nonlinear(rng, binary_left);
        if matches!(op, DrawnOp::Binary(_)) {
            binary_left -= 1;
        }
        ops.push(op);
    }
    for _ in 0..binary_left {
        ops.push(DrawnOp::Binary(draw_linear_binary(rng)));
    }
    ops.shuffle(rng);
    let mut leaves: Vec<Expr> = features.iter().map(|&f| Expr::leaf(f)).collect();
    leaves.shuffle(rng);
    assemble(rng, leaves, &ops)
}

fn linear_interaction<R: Rng + ?Sized>(rng: &mut R, features: &[usize]) -> Expr {
    let ops: Vec<DrawnOp> = (1..features.len())
        .map(|_| DrawnOp::Binary(draw_linear_binary(rng)))
        .collect();
    let mut leaves: Vec<Expr> = features.iter().map(|&f| Expr::leaf(f)).collect();
    leaves.shuffle(rng);
    assemble(rng, leaves, &ops)
}

/// Draws `count` distinct `order`-subsets of `features`, each sorted.
fn select_interactions<R: Rng + ?Sized>(
    rng: &mut R,
    features: &[usize],
    order: usize,
    count: usize,
) -> Vec<Vec<usize>> {
    if count == 0 {
        return Vec::new();
    }
    let mut sorted = features.to_vec();
    sorted.sort_unstable();
    let total = binomial_saturating(sorted.len(), order);
    if total <= 20_000 {
        let mut all = Vec::with_capacity(total);
        let mut combo: Vec<usize> = (0..order).collect();
        loop {
            all.push(combo.iter().map(|&i| sorted[i]).collect::<Vec<_>>());
            // advance to the next lexicographic combination of indices
            let n = sorted.len();
            let mut k = order;
            while k > 0 && combo[k - 1] == n - order + k - 1 {
                k -= 1;
            }
            if k == 0 {
                break;
            }
            combo[k - 1] += 1;
            for t in k..order {
                combo[t] = combo[t - 1] + 1;
            }
        }
        let (picked, _) = all.partial_shuffle(rng, count);
        return picked.to_vec();
    }
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    let mut pool = sorted.clone();
    while out.len() < count {
        let (chosen, _) = pool.partial_shuffle(rng, order);
        let mut combo = chosen.to_vec();
        combo.sort_unstable();
        if seen.insert(combo.clone()) {
            out.push(combo);
        }
    }
    out
}

fn with_redraws<F>(rows: &[Vec<f64>], redraws: usize, mut draw: F) -> Option<Expr>
where
    F: FnMut() -> Expr,
{
    for _ in 0..=redraws {
        let expr = draw();
        if effect_is_finite(&expr, rows) {
            return Some(expr);
        }
    }
    None
}

fn generate_round(
    params: &GenParams,
    seed: u64,
    rows: &[Vec<f64>],
    redraws: usize,
) -> Option<AdditiveModel> {
    let u = params.used_features();

    let mut rng = stream(seed, STREAM_FEATURES);
    let mut order: Vec<usize> = (0..params.d).collect();
    order.shuffle(&mut rng);
    let used = &order[..u];

    let mut exprs = Vec::new();

    // nonlinear main effects
    let main_ops = (params.pct_nonlinear * u as f64).round() as usize;
    let nonlinear_mains = main_ops.min(u);
    let mut rng = stream(seed, STREAM_NONLINEAR_MAIN);
    for (&feature, &n_ops) in used.iter().zip(&bin_counts(main_ops, nonlinear_mains)) {
        exprs.push(with_redraws(rows, redraws, || nonlinear_main(&mut rng, feature, n_ops))?);
    }

    // linear main effects
    exprs.extend(used[nonlinear_mains..].iter().map(|&f| Expr::leaf(f)));

    let n_interactions = params.interaction_count();
    let mut rng = stream(seed, STREAM_INTERACTION_SELECT);
    let combos = select_interactions(&mut rng, used, params.order_interact, n_interactions);

    // nonlinear interaction effects
    let inter_ops = (params.pct_nonlinear * n_interactions as f64).round() as usize;
    let nonlinear_inters = inter_ops.min(n_interactions);
    let mut rng = stream(seed, STREAM_NONLINEAR_INTERACT);
    for (combo, &n_ops) in combos.iter().zip(&bin_counts(inter_ops, nonlinear_inters)) {
        exprs.push(with_redraws(rows, redraws, || {
            nonlinear_interaction(&mut rng, combo, n_ops)
        })?);
    }

    // linear interaction effects
    let mut rng = stream(seed, STREAM_LINEAR_INTERACT);
    for combo in &combos[nonlinear_inters..] {
        exprs.push(with_redraws(rows, redraws, || linear_interaction(&mut rng, combo))?);
    }

    let effects = exprs
        .into_iter()
        .map(|e| Effect::new(e).expect("generated effects reference features"))
        .collect();
    AdditiveModel::new(params.d, effects).ok()
}

/// One point of the model-generation grid (without a seed).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub d: usize,
    pub n_dummy: usize,
    pub pct_nonlinear: f64,
    pub pct_interact: f64,
    pub order_interact: usize,
}

impl GridPoint {
    pub fn params(&self, seed: u64) -> GenParams {
        GenParams {
            d: self.d,
            n_dummy: self.n_dummy,
            pct_nonlinear: self.pct_nonlinear,
            pct_interact: self.pct_interact,
            order_interact: self.order_interact,
            seed,
        }
    }

    /// Stable directory-safe key, e.g. `d4_nd0_nl0.75_pi0.5_o2`.
    pub fn key(&self) -> String {
        format!(
            "d{}_nd{}_nl{}_pi{}_o{}",
            self.d, self.n_dummy, self.pct_nonlinear, self.pct_interact, self.order_interact
        )
    }
}

/// Subsets of each generation parameter. `n_dummy_frac` values are fractions
/// of `d`, rounded down.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSelection {
    pub d: Vec<usize>,
    pub n_dummy_frac: Vec<f64>,
    pub pct_nonlinear: Vec<f64>,
    pub pct_interact: Vec<f64>,
    pub order_interact: Vec<usize>,
}

impl Default for GridSelection {
    fn default() -> Self {
        GridSelection {
            d: vec![2, 4, 7, 16, 32, 64, 127, 256, 512, 1024],
            n_dummy_frac: vec![0.0, 0.2375, 0.475, 0.7125, 0.95],
            pct_nonlinear: vec![0.0, 0.375, 0.75, 1.125, 1.5],
            pct_interact: vec![0.0, 0.167, 0.333, 0.5],
            order_interact: vec![1, 2, 3],
        }
    }
}

impl GridSelection {
    /// Cross product with the coupling `order = 1 <=> pct_interact = 0`:
    /// order 1 rows always carry `pct_interact = 0`, higher orders take the
    /// selected non-zero values.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &d in &self.d {
            for &frac in &self.n_dummy_frac {
                let n_dummy = (frac * d as f64).floor() as usize;
                for &pct_nonlinear in &self.pct_nonlinear {
                    for &order_interact in &self.order_interact {
                        let interacts: Vec<f64> = if order_interact <= 1 {
                            vec![0.0]
                        } else {
                            self.pct_interact.iter().copied().filter(|&p| p > 0.0).collect()
                        };
                        for pct_interact in interacts {
                            out.push(GridPoint {
                                d,
                                n_dummy,
                                pct_nonlinear,
                                pct_interact,
                                order_interact,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

/// The full generation grid.
pub fn parameter_grid() -> Vec<GridPoint> {
    GridSelection::default().points()
}
