//! Strength-of-schedule Q scores.
//!
//! For image `i` with `w` wins, `l` losses and `t` ties over `n` comparisons:
//!
//! ```text
//! W_i = (w + t/2) / n        L_i = (l + t/2) / n
//! Q_i = 10/3 · (W_i + mean_{j ∈ B_i} W_j − mean_{k ∈ D_i} L_k + 1)
//! ```
//!
//! `B_i` is the set of distinct images `i` beat at least once and `D_i` the set
//! of distinct images that beat `i`; an empty set contributes 0. Ties never
//! enter `B` or `D`. The bracket lies in `[0, 3]`, so `Q ∈ [0, 10]`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{image_id_cmp, Choice, ComparisonRecord, ScoringError};

/// Images with fewer comparisons than this are dropped from a pool.
pub const DEFAULT_MIN_COMPARISONS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QScore {
    pub image_id: String,
    pub q: f64,
    pub q_normalized: f64,
    pub n_comparisons: usize,
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
}

#[derive(Default)]
struct Tally {
    wins: usize,
    losses: usize,
    ties: usize,
    beaten: BTreeSet<usize>,
    beaten_by: BTreeSet<usize>,
}

impl Tally {
    fn n(&self) -> usize {
        self.wins + self.losses + self.ties
    }
    fn win_ratio(&self) -> f64 {
        (self.wins as f64 + 0.5 * self.ties as f64) / self.n() as f64
    }
    fn loss_ratio(&self) -> f64 {
        (self.losses as f64 + 0.5 * self.ties as f64) / self.n() as f64
    }
}

/// Q scores for one indicator in one pool, sorted by image id. Images with
/// fewer than `min_comparisons` comparisons (ties included) are omitted from
/// the output but still count as opponents of the others.
pub fn q_scores<'a, I>(records: I, min_comparisons: usize) -> Result<Vec<QScore>, ScoringError>
where
    I: IntoIterator<Item = &'a ComparisonRecord>,
{
    let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
    let mut pairs = Vec::new();
    let mut indicator = None;
    for r in records {
        match indicator {
            None => indicator = Some(r.indicator),
            Some(i) if i != r.indicator => {
                return Err(ScoringError::MixedIndicators(i, r.indicator))
            }
            _ => {}
        }
        let next = ids.len();
        let a = *ids.entry(r.left_image.as_str()).or_insert(next);
        let next = ids.len();
        let b = *ids.entry(r.right_image.as_str()).or_insert(next);
        pairs.push((a, b, r.choice));
    }
    if pairs.is_empty() {
        return Err(ScoringError::NoRecords);
    }

    let mut tallies: Vec<Tally> = (0..ids.len()).map(|_| Tally::default()).collect();
    for (a, b, choice) in pairs {
        let (winner, loser) = match choice {
            Choice::Left => (a, b),
            Choice::Right => (b, a),
            Choice::Equal => {
                tallies[a].ties += 1;
                tallies[b].ties += 1;
                continue;
            }
        };
        tallies[winner].wins += 1;
        tallies[winner].beaten.insert(loser);
        tallies[loser].losses += 1;
        tallies[loser].beaten_by.insert(winner);
    }

    let win: Vec<f64> = tallies.iter().map(Tally::win_ratio).collect();
    let loss: Vec<f64> = tallies.iter().map(Tally::loss_ratio).collect();
    let mean_over = |set: &BTreeSet<usize>, values: &[f64]| {
        if set.is_empty() {
            0.0
        } else {
            set.iter().map(|&j| values[j]).sum::<f64>() / set.len() as f64
        }
    };

    let mut out: Vec<QScore> = ids
        .iter()
        .filter_map(|(&id, &i)| {
            let t = &tallies[i];
            if t.n() < min_comparisons {
                return None;
            }
            let q = (10.0 / 3.0)
                * (win[i] + mean_over(&t.beaten, &win) - mean_over(&t.beaten_by, &loss) + 1.0);
            Some(QScore {
                image_id: id.to_string(),
                q,
                q_normalized: q / 10.0,
                n_comparisons: t.n(),
                wins: t.wins,
                losses: t.losses,
                ties: t.ties,
            })
        })
        .collect();
    out.sort_by(|a, b| image_id_cmp(&a.image_id, &b.image_id));
    Ok(out)
}
