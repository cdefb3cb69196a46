//! Pairwise perception ratings and the comparative scores derived from them.
//!
//! Scores are only meaningful inside the rating pool they were computed from,
//! so everything here is keyed by a [`GroupingContext`] (participant country ×
//! image city, either of which may be `ALL`) and an [`Indicator`].

mod qscore;
mod records;
mod table;
mod trueskill;

use std::cmp::Ordering;

use thiserror::Error;

pub use qscore::{q_scores, QScore, DEFAULT_MIN_COMPARISONS};
pub use records::{
    filter_by_context, parse_comparisons, read_comparisons, BigFive, Choice, ComparisonRecord,
    GroupingContext, Indicator, Scope,
};
pub use table::{default_contexts, score_table, ScoreRow, ScoreTable, ScoringParams};
pub use trueskill::{
    trueskill_scores, trueskill_update, Outcome, SkillRating, SkillScore, TrueSkillParams,
};

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("comparison file is missing required column {0:?}")]
    SchemaMismatch(String),
    #[error("row {row}: choice {value:?} is not one of left/right/equal")]
    BadChoice { value: String, row: usize },
    #[error("row {row}: unknown indicator {value:?}")]
    BadIndicator { value: String, row: usize },
    #[error("row {row}: bad value {value:?} in column {column:?}")]
    BadValue {
        column: String,
        value: String,
        row: usize,
    },
    #[error("row {row}: an image cannot be compared with itself")]
    SameImage { row: usize },
    #[error("no comparison records")]
    NoRecords,
    #[error("records mix indicators {0} and {1}")]
    MixedIndicators(Indicator, Indicator),
    #[error("invalid grouping context {0:?}, expected \"<participant scope>,<image scope>\"")]
    BadContext(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Orders image ids numerically when both are integers, lexically otherwise.
pub fn image_id_cmp(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}
