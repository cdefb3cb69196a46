use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    filter_by_context, q_scores, trueskill_scores, ComparisonRecord, GroupingContext, Indicator,
    Scope, ScoringError, TrueSkillParams, DEFAULT_MIN_COMPARISONS,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoringParams {
    pub min_comparisons: usize,
    pub trueskill: TrueSkillParams,
}

impl Default for ScoringParams {
    fn default() -> Self {
        ScoringParams {
            min_comparisons: DEFAULT_MIN_COMPARISONS,
            trueskill: TrueSkillParams::default(),
        }
    }
}

/// One retained image in one (context, indicator) cell; field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub participant_scope: Scope,
    pub image_scope: Scope,
    pub indicator: Indicator,
    pub image_id: String,
    pub q: f64,
    pub q_normalized: f64,
    pub n_comparisons: usize,
    pub ts_mu: f64,
    pub ts_sigma: f64,
    pub ts_conservative: f64,
}

impl ScoreRow {
    pub fn context(&self) -> GroupingContext {
        GroupingContext {
            participant_scope: self.participant_scope.clone(),
            image_scope: self.image_scope.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    pub rows: Vec<ScoreRow>,
}

impl ScoreTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(
        &self,
        context: &GroupingContext,
        indicator: Indicator,
        image_id: &str,
    ) -> Option<&ScoreRow> {
        self.rows.iter().find(|r| {
            r.indicator == indicator
                && r.image_id == image_id
                && r.participant_scope == context.participant_scope
                && r.image_scope == context.image_scope
        })
    }

    /// Rows of one cell, in table order.
    pub fn cell<'a>(
        &'a self,
        context: &'a GroupingContext,
        indicator: Indicator,
    ) -> impl Iterator<Item = &'a ScoreRow> + 'a {
        self.rows.iter().filter(move |r| {
            r.indicator == indicator
                && r.participant_scope == context.participant_scope
                && r.image_scope == context.image_scope
        })
    }

    /// Distinct contexts in first-appearance order.
    pub fn contexts(&self) -> Vec<GroupingContext> {
        let mut seen = BTreeSet::new();
        self.rows
            .iter()
            .map(ScoreRow::context)
            .filter(|c| seen.insert(c.clone()))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), ScoringError> {
        let mut w = csv::Writer::from_writer(writer);
        if self.rows.is_empty() {
            w.write_record([
                "participant_scope",
                "image_scope",
                "indicator",
                "image_id",
                "q",
                "q_normalized",
                "n_comparisons",
                "ts_mu",
                "ts_sigma",
                "ts_conservative",
            ])?;
        }
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, ScoringError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let rows = rdr.deserialize().collect::<Result<Vec<ScoreRow>, _>>()?;
        Ok(ScoreTable { rows })
    }
}

/// Every participant country × image city seen in `records`, plus `ALL` on
/// both axes, sorted with `ALL` first.
pub fn default_contexts(records: &[ComparisonRecord]) -> Vec<GroupingContext> {
    let countries: BTreeSet<&str> = records
        .iter()
        .map(|r| r.participant_country.as_str())
        .collect();
    let cities: BTreeSet<&str> = records
        .iter()
        .flat_map(|r| [r.left_city.as_deref(), r.right_city.as_deref()])
        .flatten()
        .collect();
    let p_scopes: Vec<Scope> = std::iter::once(Scope::All)
        .chain(countries.into_iter().map(Scope::from))
        .collect();
    let i_scopes: Vec<Scope> = std::iter::once(Scope::All)
        .chain(cities.into_iter().map(Scope::from))
        .collect();
    p_scopes
        .iter()
        .flat_map(|p| {
            i_scopes.iter().map(move |i| GroupingContext {
                participant_scope: p.clone(),
                image_scope: i.clone(),
            })
        })
        .collect()
}

/// Q scores (with TrueSkill ratings attached) for every (context, indicator)
/// cell. Cells are computed independently; rows come out grouped by context,
/// then indicator, then image id. Cells without records contribute nothing.
pub fn score_table(
    records: &[ComparisonRecord],
    contexts: &[GroupingContext],
    indicators: &[Indicator],
    params: &ScoringParams,
) -> Result<ScoreTable, ScoringError> {
    let cells: Vec<(&GroupingContext, Indicator)> = contexts
        .iter()
        .flat_map(|c| indicators.iter().map(move |&i| (c, i)))
        .collect();
    let per_cell: Vec<Vec<ScoreRow>> = cells
        .par_iter()
        .map(|&(ctx, indicator)| score_cell(records, ctx, indicator, params))
        .collect::<Result<_, _>>()?;
    Ok(ScoreTable {
        rows: per_cell.into_iter().flatten().collect(),
    })
}

fn score_cell(
    records: &[ComparisonRecord],
    ctx: &GroupingContext,
    indicator: Indicator,
    params: &ScoringParams,
) -> Result<Vec<ScoreRow>, ScoringError> {
    let pool = filter_by_context(records, ctx, indicator);
    if pool.is_empty() {
        return Ok(Vec::new());
    }
    let q = q_scores(pool.iter().copied(), params.min_comparisons)?;
    let ts: HashMap<String, _> = trueskill_scores(pool.iter().copied(), &params.trueskill)?
        .into_iter()
        .map(|s| (s.image_id.clone(), s))
        .collect();
    Ok(q.into_iter()
        .map(|s| {
            let t = &ts[&s.image_id];
            ScoreRow {
                participant_scope: ctx.participant_scope.clone(),
                image_scope: ctx.image_scope.clone(),
                indicator,
                image_id: s.image_id,
                q: s.q,
                q_normalized: s.q_normalized,
                n_comparisons: s.n_comparisons,
                ts_mu: t.mu,
                ts_sigma: t.sigma,
                ts_conservative: t.conservative,
            }
        })
        .collect())
}
