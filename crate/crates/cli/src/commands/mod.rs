pub mod agree;
pub mod distrib;
pub mod metrics;
pub mod model;
pub mod scores;
pub mod sweep;

use greenscape::{GroupingContext, Indicator, ScoreTable};

use crate::Run;

/// Significance marks: `*` below alpha, `**` below 0.01, `***` below 0.001.
pub fn stars(p: Option<f64>, alpha: f64) -> &'static str {
    match p {
        Some(p) if p < alpha && p < 0.001 => "***",
        Some(p) if p < alpha && p < 0.01 => "**",
        Some(p) if p < alpha => "*",
        _ => "",
    }
}

/// Contexts to report: the `--context` flag, or every context in the table
/// holding rows for `indicator`.
pub fn report_contexts(run: &Run, table: &ScoreTable, indicator: Indicator) -> Vec<GroupingContext> {
    match &run.context {
        Some(c) => vec![c.clone()],
        None => table
            .contexts()
            .into_iter()
            .filter(|c| table.cell(c, indicator).next().is_some())
            .collect(),
    }
}

/// Min-max scaling to [0, 1]; a constant series maps to zeros.
pub fn min_max(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        values.iter().map(|v| (v - lo) / (hi - lo)).collect()
    } else {
        vec![0.0; values.len()]
    }
}

/// File-name-safe tag for a context.
pub fn context_tag(c: &GroupingContext) -> String {
    format!("{}_{}", c.participant_scope, c.image_scope)
        .chars()
        .map(|ch| if ch.is_ascii_alphanumeric() || ch == '_' { ch } else { '-' })
        .collect()
}
