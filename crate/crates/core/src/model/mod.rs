//! Random-forest model of green perception scores.
//!
//! The forest, its hyperparameter search and the conditional permutation
//! importance are implemented here from scratch so every random draw is
//! reproducible from a single seed: per-tree and per-repeat streams are
//! derived from `(seed, index)`, so parallel execution does not change results.

mod features;
mod forest;
mod importance;
mod matrix;
mod search;
mod split;
mod tree;

use thiserror::Error;

pub use features::{build_feature_table, DropReason, FeatureRow, FeatureTable};
pub use forest::{evaluate, train_forest, Evaluation, ForestConfig, MaxFeatures, TrainedForest};
pub use importance::{
    conditional_permutation_importance, FeatureImportance, ImportanceOptions, ImportanceReport,
};
pub use matrix::Matrix;
pub use search::{random_search_cv, LeaderboardEntry, SearchResult, SearchSpace};
pub use split::{stratified_folds, stratified_split};
pub use tree::{Tree, TreeNode};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("table has no rows")]
    EmptyTable,
    #[error("need at least {needed} rows, found {found}")]
    TooFewRows { needed: usize, found: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{rows} feature rows but {targets} targets")]
    DimensionMismatch { rows: usize, targets: usize },
    #[error("input contains a non-finite value")]
    NonFinite,
}

pub(crate) fn mse(pred: &[f64], y: &[f64]) -> f64 {
    pred.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / y.len() as f64
}
