use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("model must contain at least one effect")]
    NoEffects,
    #[error("effect expression references no features")]
    EmptyEffect,
    #[error("effects[{0}].expr references no features")]
    EffectWithoutFeatures(usize),
    #[error("effects[{effect}] uses feature {feature} but d = {d}")]
    FeatureOutOfRange { effect: usize, feature: usize, d: usize },
    #[error("effects[{effect}].features is {declared:?} but the expression uses {actual:?}")]
    FeatureMismatch {
        effect: usize,
        declared: Vec<usize>,
        actual: Vec<usize>,
    },
    #[error("dummy_features is {declared:?} but unused features are {actual:?}")]
    DummyMismatch {
        declared: Vec<usize>,
        actual: Vec<usize>,
    },
    #[error("invalid model JSON: {0}")]
    Parse(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("invalid generation parameters: {0}")]
    InvalidParams(String),
    #[error("no valid model after {rounds} rejection rounds")]
    GenerationFailed { rounds: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroundTruthError {
    #[error("non-finite contribution for effect {effect} at sample {sample}")]
    NonFiniteContribution { effect: usize, sample: usize },
    #[error("model has {model} features but the data has {data}")]
    DimensionMismatch { model: usize, data: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExplainError {
    #[error("weighted least-squares system is singular")]
    SingularSystem,
    #[error("partial dependence of feature {feature} is non-finite for most rows at grid point {grid_point}")]
    DegeneratePd { feature: usize, grid_point: usize },
    #[error("only {valid} of {total} perturbations produced finite labels")]
    TooFewValidSamples { valid: usize, total: usize },
    #[error("value function is non-finite for coalition {coalition:?}")]
    NonFiniteValueFunction { coalition: Vec<usize> },
    #[error("invalid explainer input: {0}")]
    InvalidInput(String),
    #[error("deadline exceeded")]
    Timeout,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("interquartile range of the reference vector is zero")]
    DegenerateIqr,
    #[error("rank vector has zero variance")]
    ZeroVariance,
    #[error("vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },
}
