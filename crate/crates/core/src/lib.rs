//! Budget-constrained active learning with group-fairness-aware selection.
//!
//! The crate trains L2-regularized logistic models on a growing labeled
//! pool and, at each labeling step, scores unlabeled candidates by a
//! convex blend of prediction entropy and the expected drop in a group
//! disparity measure. Two selection strategies implement the blend: an
//! exact one that retrains a model per candidate and label, and a fast
//! approximation that tracks sensitive-attribute covariances through
//! running aggregates. A harness runs repeated-split experiments and
//! writes per-iteration metrics.

pub mod dataset;
pub mod error;
pub mod fairness;
pub mod glm;
pub mod harness;
pub mod schedule;
pub mod strategies;

pub use dataset::{
    Dataset, DataPoint, LabeledRecord, Oracle, PoolState, Schema, Standardization, UnlabeledPoint,
};
pub use error::{Error, Result};
pub use fairness::{
    contingency, disparity, evaluate, measure_disagreement_fixture, DisparityMeasure,
    FixtureValues, JointTable,
};
pub use glm::{train, LinearClassifier, TrainConfig};
pub use harness::{run_experiment, ExperimentConfig, MetricsRecord, Strategy};
pub use schedule::AlphaSchedule;
pub use strategies::{select_entropy, select_fal, select_random, Selection, SelectionScore};
