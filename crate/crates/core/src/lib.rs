//! Ground-truth fidelity testbed for feature-additive explainers.
//!
//! Random symbolic models with a known additive structure are generated,
//! explained by black-box explainers (partial dependence, a LIME-style local
//! surrogate and KernelSHAP), aligned effect-by-effect with the true
//! contributions and scored.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod alignment;
pub mod dataset;
pub mod equivalence;
pub mod error;
pub mod explain;
pub mod expr;
pub mod ground_truth;
pub mod harness;
pub mod metrics;
pub mod model_gen;
pub mod rng;

pub use alignment::{match_effects, MatchGroup, MatchResult};
pub use dataset::{sample_dataset, Dataset};
pub use error::{ExplainError, GenError, GroundTruthError, MetricError, ModelError};
pub use explain::{explain_batch, BlackBox, ExplainerExplanation, ExplainerId, ExplainerSettings};
pub use expr::{AdditiveModel, BinaryOp, Effect, Expr, UnaryOp};
pub use harness::{run_single, run_sweep, ExperimentConfig, HarnessError};
pub use ground_truth::{explain_ground_truth, GroundTruthExplanation};
pub use metrics::{score_explanation, MetricsRecord, Scores, Status};
pub use model_gen::{generate_model, GenParams, GridPoint, GridSelection};
