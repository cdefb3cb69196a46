//! Agreement and group-difference statistics between perception scores and
//! image metrics.

mod agreement;
mod correlation;
mod quantile;
mod ranktests;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use agreement::{bland_altman, BlandAltmanResult};
pub use correlation::{pearson, CorrelationResult};
pub use quantile::{qq_data, quantile, quantile_groups, QuantileGroups};
pub use ranktests::{
    average_ranks, mann_whitney_u, mann_whitney_u_with, wilcoxon_signed_rank,
    wilcoxon_signed_rank_with, RankTestOptions, DEFAULT_EXACT_CUTOFF,
};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("series lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} observations, found {found}")]
    TooFew { needed: usize, found: usize },
    #[error("series is constant")]
    ConstantSeries,
    #[error("every difference is exactly zero")]
    AllZeros,
    #[error("a group is empty")]
    EmptyGroup,
    #[error("series contains a non-finite value")]
    NonFinite,
    #[error("{0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: TestMethod,
    pub n_effective: usize,
}

pub(crate) fn check_finite(xs: &[f64]) -> Result<(), StatsError> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
