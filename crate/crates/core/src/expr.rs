//! Expression trees over feature variables, the operator vocabulary, and the
//! additive white-box container.
//!
//! A model is an ordered list of [`Effect`]s. Each effect owns an expression
//! tree and the exact set of feature indices its leaves reference, so the
//! per-effect contribution at any input is known analytically.
//!
//! Evaluation never panics: operators applied outside their real domain
//! produce NaN or an infinity, and callers decide what to do with it.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;
use std::fmt;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::ModelError;

/// Unary operators. All of them are nonlinear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnaryOp {
    Cos,
    Cosh,
    Sin,
    Sinh,
    Asinh,
    Tan,
    Tanh,
    Atan,
    Cot,
    Acot,
    Csc,
    Sech,
    Sinc,
    Abs,
    Sqrt,
    Square,
    Cube,
    Exp,
    Log,
}

impl UnaryOp {
    pub const ALL: [UnaryOp; 19] = [
        UnaryOp::Cos,
        UnaryOp::Cosh,
        UnaryOp::Sin,
        UnaryOp::Sinh,
        UnaryOp::Asinh,
        UnaryOp::Tan,
        UnaryOp::Tanh,
        UnaryOp::Atan,
        UnaryOp::Cot,
        UnaryOp::Acot,
        UnaryOp::Csc,
        UnaryOp::Sech,
        UnaryOp::Sinc,
        UnaryOp::Abs,
        UnaryOp::Sqrt,
        UnaryOp::Square,
        UnaryOp::Cube,
        UnaryOp::Exp,
        UnaryOp::Log,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Cos => "cos",
            UnaryOp::Cosh => "cosh",
            UnaryOp::Sin => "sin",
            UnaryOp::Sinh => "sinh",
            UnaryOp::Asinh => "asinh",
            UnaryOp::Tan => "tan",
            UnaryOp::Tanh => "tanh",
            UnaryOp::Atan => "atan",
            UnaryOp::Cot => "cot",
            UnaryOp::Acot => "acot",
            UnaryOp::Csc => "csc",
            UnaryOp::Sech => "sech",
            UnaryOp::Sinc => "sinc",
            UnaryOp::Abs => "abs",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Square => "square",
            UnaryOp::Cube => "cube",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
        }
    }

    /// Unnormalized draw weight.
    pub fn weight(self) -> f64 {
        match self {
            UnaryOp::Abs
            | UnaryOp::Sqrt
            | UnaryOp::Square
            | UnaryOp::Cube
            | UnaryOp::Exp
            | UnaryOp::Log => 0.133,
            _ => 0.015,
        }
    }

    pub fn apply(self, x: f64) -> f64 {
        match self {
            UnaryOp::Cos => x.cos(),
            UnaryOp::Cosh => x.cosh(),
            UnaryOp::Sin => x.sin(),
            UnaryOp::Sinh => x.sinh(),
            UnaryOp::Asinh => x.asinh(),
            UnaryOp::Tan => x.tan(),
            UnaryOp::Tanh => x.tanh(),
            UnaryOp::Atan => x.atan(),
            UnaryOp::Cot => x.cos() / x.sin(),
            // acot(0) = pi/2, matching the usual symbolic convention.
            UnaryOp::Acot => {
                if x == 0.0 {
                    FRAC_PI_2
                } else {
                    (1.0 / x).atan()
                }
            }
            UnaryOp::Csc => 1.0 / x.sin(),
            UnaryOp::Sech => 1.0 / x.cosh(),
            UnaryOp::Sinc => {
                if x == 0.0 {
                    1.0
                } else {
                    x.sin() / x
                }
            }
            UnaryOp::Abs => x.abs(),
            UnaryOp::Sqrt => x.sqrt(),
            UnaryOp::Square => x * x,
            UnaryOp::Cube => x * x * x,
            UnaryOp::Exp => x.exp(),
            UnaryOp::Log => x.ln(),
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|op| op.name() == name)
    }
}

/// Binary operators. `Mul`, `Div` and `Add` are the linear bridges; `Min` and
/// `Max` are nonlinear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinaryOp {
    Mul,
    Div,
    Add,
    Min,
    Max,
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 5] = [
        BinaryOp::Mul,
        BinaryOp::Div,
        BinaryOp::Add,
        BinaryOp::Min,
        BinaryOp::Max,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BinaryOp::Mul => "mul",
            BinaryOp::Div => "div",
            BinaryOp::Add => "add",
            BinaryOp::Min => "min",
            BinaryOp::Max => "max",
        }
    }

    pub fn is_nonlinear(self) -> bool {
        matches!(self, BinaryOp::Min | BinaryOp::Max)
    }

    /// Unnormalized draw weight within the operator's class. `Add` carries no
    /// weight and is never drawn.
    pub fn weight(self) -> f64 {
        match self {
            BinaryOp::Mul => 0.8,
            BinaryOp::Div => 0.2,
            BinaryOp::Add => 0.0,
            BinaryOp::Min | BinaryOp::Max => 0.5,
        }
    }

    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinaryOp::Mul => a * b,
            BinaryOp::Div => a / b,
            BinaryOp::Add => a + b,
            // f64::min/max swallow NaN, which would hide a domain violation.
            BinaryOp::Min => {
                if a.is_nan() || b.is_nan() {
                    f64::NAN
                } else {
                    a.min(b)
                }
            }
            BinaryOp::Max => {
                if a.is_nan() || b.is_nan() {
                    f64::NAN
                } else {
                    a.max(b)
                }
            }
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|op| op.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arity {
    Unary,
    Binary,
}

/// Any entry of the operator vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operator {
    Unary(UnaryOp),
    Binary(BinaryOp),
}

impl Operator {
    pub fn vocabulary() -> impl Iterator<Item = Operator> {
        UnaryOp::ALL
            .into_iter()
            .map(Operator::Unary)
            .chain(BinaryOp::ALL.into_iter().map(Operator::Binary))
    }

    pub fn name(self) -> &'static str {
        match self {
            Operator::Unary(op) => op.name(),
            Operator::Binary(op) => op.name(),
        }
    }

    pub fn arity(self) -> Arity {
        match self {
            Operator::Unary(_) => Arity::Unary,
            Operator::Binary(_) => Arity::Binary,
        }
    }

    pub fn is_nonlinear(self) -> bool {
        match self {
            Operator::Unary(_) => true,
            Operator::Binary(op) => op.is_nonlinear(),
        }
    }

    pub fn weight(self) -> f64 {
        match self {
            Operator::Unary(op) => op.weight(),
            Operator::Binary(op) => op.weight(),
        }
    }
}

/// A node of an expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Leaf(usize),
    Const(f64),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn leaf(feature: usize) -> Self {
        Expr::Leaf(feature)
    }

    pub fn unary(op: UnaryOp, child: Expr) -> Self {
        Expr::Unary(op, Box::new(child))
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Evaluates the tree at `x`. Out-of-domain arguments propagate as NaN or
    /// an infinity.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Leaf(i) => x[*i],
            Expr::Const(c) => *c,
            Expr::Unary(op, child) => op.apply(child.eval(x)),
            Expr::Binary(op, lhs, rhs) => op.apply(lhs.eval(x), rhs.eval(x)),
        }
    }

    /// Sorted, deduplicated leaf feature indices.
    pub fn features(&self) -> Vec<usize> {
        let mut set = BTreeSet::new();
        self.collect_features(&mut set);
        set.into_iter().collect()
    }

    fn collect_features(&self, out: &mut BTreeSet<usize>) {
        match self {
            Expr::Leaf(i) => {
                out.insert(*i);
            }
            Expr::Const(_) => {}
            Expr::Unary(_, child) => child.collect_features(out),
            Expr::Binary(_, lhs, rhs) => {
                lhs.collect_features(out);
                rhs.collect_features(out);
            }
        }
    }

    /// Number of operator nodes that are nonlinear.
    pub fn nonlinear_ops(&self) -> usize {
        match self {
            Expr::Leaf(_) | Expr::Const(_) => 0,
            Expr::Unary(_, child) => 1 + child.nonlinear_ops(),
            Expr::Binary(op, lhs, rhs) => {
                usize::from(op.is_nonlinear()) + lhs.nonlinear_ops() + rhs.nonlinear_ops()
            }
        }
    }

    /// Binary operators used in the tree, in prefix order.
    pub fn binary_ops(&self) -> Vec<BinaryOp> {
        let mut ops = Vec::new();
        self.visit_binary(&mut ops);
        ops
    }

    fn visit_binary(&self, ops: &mut Vec<BinaryOp>) {
        match self {
            Expr::Leaf(_) | Expr::Const(_) => {}
            Expr::Unary(_, child) => child.visit_binary(ops),
            Expr::Binary(op, lhs, rhs) => {
                ops.push(*op);
                lhs.visit_binary(ops);
                rhs.visit_binary(ops);
            }
        }
    }

    /// Prefix-notation JSON, e.g. `["log", ["mul", ["leaf", 0], ["leaf", 3]]]`.
    pub fn to_json(&self) -> Value {
        match self {
            Expr::Leaf(i) => Value::Array(vec!["leaf".into(), (*i).into()]),
            Expr::Const(c) => Value::Array(vec!["const".into(), (*c).into()]),
            Expr::Unary(op, child) => Value::Array(vec![op.name().into(), child.to_json()]),
            Expr::Binary(op, lhs, rhs) => {
                Value::Array(vec![op.name().into(), lhs.to_json(), rhs.to_json()])
            }
        }
    }

    pub fn from_json(value: &Value) -> Result<Self, String> {
        let items = value
            .as_array()
            .ok_or_else(|| format!("expected an array, found {value}"))?;
        let head = items
            .first()
            .and_then(Value::as_str)
            .ok_or_else(|| "expected an operator name as the first element".to_string())?;
        let args = &items[1..];
        let expect_args = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(format!("`{head}` takes {n} argument(s), found {}", args.len()))
            }
        };
        match head {
            "leaf" => {
                expect_args(1)?;
                let idx = args[0]
                    .as_u64()
                    .ok_or_else(|| format!("leaf index must be a non-negative integer, found {}", args[0]))?;
                Ok(Expr::Leaf(idx as usize))
            }
            "const" => {
                expect_args(1)?;
                let c = args[0]
                    .as_f64()
                    .ok_or_else(|| format!("const value must be a number, found {}", args[0]))?;
                Ok(Expr::Const(c))
            }
            name => {
                if let Some(op) = UnaryOp::from_name(name) {
                    expect_args(1)?;
                    Ok(Expr::unary(op, Expr::from_json(&args[0])?))
                } else if let Some(op) = BinaryOp::from_name(name) {
                    expect_args(2)?;
                    Ok(Expr::binary(
                        op,
                        Expr::from_json(&args[0])?,
                        Expr::from_json(&args[1])?,
                    ))
                } else {
                    Err(format!("unknown operator `{name}`"))
                }
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Leaf(i) => write!(f, "x{i}"),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Unary(UnaryOp::Square, child) => write!(f, "({child})^2"),
            Expr::Unary(UnaryOp::Cube, child) => write!(f, "({child})^3"),
            Expr::Unary(UnaryOp::Abs, child) => write!(f, "|{child}|"),
            Expr::Unary(op, child) => write!(f, "{}({child})", op.name()),
            Expr::Binary(BinaryOp::Mul, lhs, rhs) => write!(f, "({lhs} * {rhs})"),
            Expr::Binary(BinaryOp::Div, lhs, rhs) => write!(f, "({lhs} / {rhs})"),
            Expr::Binary(BinaryOp::Add, lhs, rhs) => write!(f, "({lhs} + {rhs})"),
            Expr::Binary(op, lhs, rhs) => write!(f, "{}({lhs}, {rhs})", op.name()),
        }
    }
}

impl Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        Expr::from_json(&value).map_err(serde::de::Error::custom)
    }
}

/// One additive term: a function over a non-empty feature subset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Effect {
    features: Vec<usize>,
    expr: Expr,
}

impl Effect {
    pub fn new(expr: Expr) -> Result<Self, ModelError> {
        let features = expr.features();
        if features.is_empty() {
            return Err(ModelError::EmptyEffect);
        }
        Ok(Effect { features, expr })
    }

    pub fn features(&self) -> &[usize] {
        &self.features
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn is_interaction(&self) -> bool {
        self.features.len() > 1
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.expr.eval(x)
    }
}

/// Sums terms in iteration order starting from `0.0`.
///
/// Both the model output and the ground-truth reconstruction go through this
/// function so that the two agree bit for bit.
pub fn additive_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    terms.into_iter().fold(0.0, |acc, t| acc + t)
}

/// A feature-additive white box `F(x) = sum_j f_j(x_{D_j})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelDoc", into = "ModelDoc")]
pub struct AdditiveModel {
    d: usize,
    effects: Vec<Effect>,
    dummy_features: Vec<usize>,
}

impl AdditiveModel {
    /// Builds a model over `d` features; dummy features are every index no
    /// effect references.
    pub fn new(d: usize, effects: Vec<Effect>) -> Result<Self, ModelError> {
        if effects.is_empty() {
            return Err(ModelError::NoEffects);
        }
        let mut used = vec![false; d];
        for (j, effect) in effects.iter().enumerate() {
            for &i in effect.features() {
                if i >= d {
                    return Err(ModelError::FeatureOutOfRange { effect: j, feature: i, d });
                }
                used[i] = true;
            }
        }
        let dummy_features = (0..d).filter(|&i| !used[i]).collect();
        Ok(AdditiveModel { d, effects, dummy_features })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn m(&self) -> usize {
        self.effects.len()
    }

    pub fn dummy_features(&self) -> &[usize] {
        &self.dummy_features
    }

    /// Union of all effect feature sets, sorted.
    pub fn used_features(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self
            .effects
            .iter()
            .flat_map(|e| e.features().iter().copied())
            .collect();
        set.into_iter().collect()
    }

    pub fn effect_feature_sets(&self) -> Vec<Vec<usize>> {
        self.effects.iter().map(|e| e.features().to_vec()).collect()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        additive_sum(self.effects.iter().map(|e| e.eval(x)))
    }

    /// True iff every effect and the model itself are finite on every row.
    pub fn validate_domain(&self, samples: ArrayView2<'_, f64>) -> bool {
        samples.rows().into_iter().all(|row| {
            let row = row.to_vec();
            let terms: Vec<f64> = self.effects.iter().map(|e| e.eval(&row)).collect();
            terms.iter().all(|t| t.is_finite()) && additive_sum(terms).is_finite()
        })
    }

    /// Canonical compact JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))
    }
}

impl fmt::Display for AdditiveModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, effect) in self.effects.iter().enumerate() {
            if j > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{}", effect.expr())?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EffectDoc {
    features: Vec<usize>,
    expr: Expr,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    d: usize,
    dummy_features: Vec<usize>,
    effects: Vec<EffectDoc>,
}

impl From<AdditiveModel> for ModelDoc {
    fn from(model: AdditiveModel) -> Self {
        ModelDoc {
            d: model.d,
            dummy_features: model.dummy_features,
            effects: model
                .effects
                .into_iter()
                .map(|e| EffectDoc { features: e.features, expr: e.expr })
                .collect(),
        }
    }
}

impl TryFrom<ModelDoc> for AdditiveModel {
    type Error = ModelError;

    fn try_from(doc: ModelDoc) -> Result<Self, Self::Error> {
        let mut effects = Vec::with_capacity(doc.effects.len());
        for (j, e) in doc.effects.into_iter().enumerate() {
            let effect = Effect::new(e.expr).map_err(|_| ModelError::EffectWithoutFeatures(j))?;
            if effect.features != e.features {
                return Err(ModelError::FeatureMismatch {
                    effect: j,
                    declared: e.features,
                    actual: effect.features,
                });
            }
            effects.push(effect);
        }
        let model = AdditiveModel::new(doc.d, effects)?;
        if model.dummy_features != doc.dummy_features {
            return Err(ModelError::DummyMismatch {
                declared: doc.dummy_features,
                actual: model.dummy_features,
            });
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    /// x1 + exp(x4) + log(x1 x4) + x4 / x1 with 1-based names mapped to 0 and 3.
    fn methodology_example() -> AdditiveModel {
        let effects = vec![
            Expr::leaf(0),
            Expr::unary(UnaryOp::Exp, Expr::leaf(3)),
            Expr::unary(UnaryOp::Log, Expr::binary(BinaryOp::Mul, Expr::leaf(0), Expr::leaf(3))),
            Expr::binary(BinaryOp::Div, Expr::leaf(3), Expr::leaf(0)),
        ];
        AdditiveModel::new(4, effects.into_iter().map(|e| Effect::new(e).unwrap()).collect())
            .unwrap()
    }

    #[test]
    fn vocabulary_matches_operator_table() {
        let unary: Vec<_> = Operator::vocabulary()
            .filter(|op| op.arity() == Arity::Unary)
            .collect();
        assert_eq!(unary.len(), 19);
        assert!(unary.iter().all(|op| op.is_nonlinear()));
        let nonlinear_binary: Vec<_> = Operator::vocabulary()
            .filter(|op| op.arity() == Arity::Binary && op.is_nonlinear())
            .map(Operator::name)
            .collect();
        assert_eq!(nonlinear_binary, vec!["min", "max"]);
        let total: f64 = UnaryOp::ALL.iter().map(|op| op.weight()).sum();
        assert!((total - (13.0 * 0.015 + 6.0 * 0.133)).abs() < 1e-12);
    }

    #[test]
    fn eval_expr_examples() {
        assert_eq!(Expr::leaf(0).eval(&[0.5, 0.1]), 0.5);
        assert_eq!(Expr::unary(UnaryOp::Log, Expr::Const(1.0)).eval(&[]), 0.0);
        let div = Expr::binary(BinaryOp::Div, Expr::leaf(3), Expr::leaf(0));
        assert!(!div.eval(&[0.0, 0.0, 0.0, 0.7]).is_finite());
    }

    #[test]
    fn guarded_operators() {
        assert_eq!(UnaryOp::Sinc.apply(0.0), 1.0);
        assert!(!UnaryOp::Cot.apply(0.0).is_finite());
        assert!(!UnaryOp::Csc.apply(0.0).is_finite());
        assert!(UnaryOp::Sqrt.apply(-0.5).is_nan());
        assert!(!UnaryOp::Log.apply(0.0).is_finite());
        assert!(BinaryOp::Min.apply(f64::NAN, 1.0).is_nan());
        assert!(BinaryOp::Max.apply(1.0, f64::NAN).is_nan());
        assert_eq!(UnaryOp::Acot.apply(0.0), FRAC_PI_2);
    }

    #[test]
    fn eval_model_examples() {
        let model = methodology_example();
        let x = [1.0, 0.0, 0.0, 1.0];
        assert!((model.eval(&x) - (2.0 + std::f64::consts::E)).abs() < 1e-12);
        assert!((model.eval(&x) - 4.718282).abs() < 1e-6);

        let single = AdditiveModel::new(1, vec![Effect::new(Expr::leaf(0)).unwrap()]).unwrap();
        assert_eq!(single.eval(&[0.3]), 0.3);

        assert!(!model.eval(&[1.0, 0.0, 0.0, 0.0]).is_finite());
    }

    #[test]
    fn model_structure() {
        let model = methodology_example();
        assert_eq!(model.m(), 4);
        assert_eq!(model.dummy_features(), &[1, 2]);
        assert_eq!(model.used_features(), vec![0, 3]);
        assert_eq!(model.effects()[2].features(), &[0, 3]);
        assert!(AdditiveModel::new(2, vec![]).is_err());
        assert!(Effect::new(Expr::Const(2.0)).is_err());
        assert!(AdditiveModel::new(2, vec![Effect::new(Expr::leaf(5)).unwrap()]).is_err());
    }

    #[test]
    fn validate_domain_examples() {
        let square = AdditiveModel::new(
            1,
            vec![Effect::new(Expr::unary(UnaryOp::Square, Expr::leaf(0))).unwrap()],
        )
        .unwrap();
        let grid = Array2::from_shape_fn((201, 1), |(r, _)| -1.0 + r as f64 * 0.01);
        assert!(square.validate_domain(grid.view()));

        let log = AdditiveModel::new(
            1,
            vec![Effect::new(Expr::unary(UnaryOp::Log, Expr::leaf(0))).unwrap()],
        )
        .unwrap();
        assert!(!log.validate_domain(array![[0.5], [-0.2]].view()));
        assert!(log.validate_domain(array![[0.5], [0.2]].view()));
    }

    #[test]
    fn validate_domain_is_exact_zero_finiteness() {
        // x4 / x1 on [-1, 1]^2: invalid iff some sampled x1 is exactly zero.
        let model = AdditiveModel::new(
            2,
            vec![Effect::new(Expr::binary(BinaryOp::Div, Expr::leaf(1), Expr::leaf(0))).unwrap()],
        )
        .unwrap();
        let mut samples = Array2::from_shape_fn((1000, 2), |(r, c)| {
            let t = (r * 7919 + c * 104729) % 2001;
            -1.0 + t as f64 / 1000.0
        });
        let any_zero = samples.column(0).iter().any(|&v| v == 0.0);
        assert_eq!(model.validate_domain(samples.view()), !any_zero);
        samples.column_mut(0).mapv_inplace(|v| if v == 0.0 { 0.25 } else { v });
        assert!(model.validate_domain(samples.view()));
        samples[[17, 0]] = 0.0;
        assert!(!model.validate_domain(samples.view()));
    }

    #[test]
    fn json_round_trip_is_byte_stable() {
        let model = methodology_example();
        let text = model.to_json();
        assert!(text.starts_with(r#"{"d":4,"dummy_features":[1,2],"effects":[{"features":[0],"expr":["leaf",0]}"#));
        let parsed = AdditiveModel::from_json(&text).unwrap();
        assert_eq!(parsed, model);
        assert_eq!(parsed.to_json(), text);
    }

    #[test]
    fn json_prefix_example_parses() {
        let text = r#"{"d":4,"dummy_features":[1,2],"effects":[{"features":[0,3],"expr":["add",["leaf",0],["log",["mul",["leaf",0],["leaf",3]]]]}]}"#;
        let model = AdditiveModel::from_json(text).unwrap();
        assert_eq!(model.to_json(), text);
    }

    #[test]
    fn json_errors_name_the_field() {
        let bad_features = r#"{"d":2,"dummy_features":[],"effects":[{"features":[0],"expr":["mul",["leaf",0],["leaf",1]]}]}"#;
        let err = AdditiveModel::from_json(bad_features).unwrap_err().to_string();
        assert!(err.contains("features"), "{err}");

        let bad_dummy = r#"{"d":3,"dummy_features":[],"effects":[{"features":[0],"expr":["leaf",0]}]}"#;
        let err = AdditiveModel::from_json(bad_dummy).unwrap_err().to_string();
        assert!(err.contains("dummy_features"), "{err}");

        let bad_op = r#"{"d":1,"dummy_features":[],"effects":[{"features":[0],"expr":["frob",["leaf",0]]}]}"#;
        let err = AdditiveModel::from_json(bad_op).unwrap_err().to_string();
        assert!(err.contains("frob"), "{err}");
    }

    #[test]
    fn display_is_readable() {
        let model = methodology_example();
        assert_eq!(model.to_string(), "x0 + exp(x3) + log((x0 * x3)) + (x3 / x0)");
    }
}
