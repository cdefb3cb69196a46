//! Street-level greenery analysis: image-derived greenery metrics, pairwise
//! perception scores, agreement statistics and a random-forest perception
//! model.

pub mod grid;
pub mod integral;
pub mod metrics;
pub mod model;
pub mod pfm;
pub mod scene;
pub mod scoring;
pub mod stats;

pub use grid::Grid;
pub use metrics::{MetricError, MetricRow, SweepCurve};
pub use model::{FeatureTable, ForestConfig, ImportanceReport, ModelError, TrainedForest};
pub use scene::{BinaryMask, ClassMap, IngestError, LabeledScene, MaskSource, TerrainPolicy};
pub use scoring::{ComparisonRecord, GroupingContext, Indicator, ScoreTable, ScoringError};
pub use stats::{StatsError, TestResult};
