use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::metrics::MetricRow;
use crate::scoring::{Indicator, Scope, ScoreTable};

const METRIC_FEATURES: [&str; 4] = ["sky_view_index", "gvi", "spatial_entropy", "global_entropy"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub image_id: String,
    pub participant_scope: Scope,
    pub image_city: String,
    pub features: Vec<f64>,
    pub target: f64,
    pub stratum: String,
}

/// One row per (image, participant scope) with a green score and every
/// other indicator score available.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub feature_names: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn matrix(&self) -> Matrix {
        let data = self.rows.iter().flat_map(|r| r.features.iter().copied()).collect();
        Matrix::from_vec(self.rows.len(), self.feature_names.len(), data)
            .expect("rows have one value per feature")
    }

    pub fn targets(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.target).collect()
    }

    pub fn strata(&self) -> Vec<&str> {
        self.rows.iter().map(|r| r.stratum.as_str()).collect()
    }

    pub fn select(&self, indices: &[usize]) -> FeatureTable {
        FeatureTable {
            feature_names: self.feature_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DropReason {
    MissingIndicator {
        image_id: String,
        participant_scope: Scope,
        indicator: Indicator,
    },
    MissingMetrics {
        image_id: String,
    },
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DropReason::MissingIndicator {
                image_id,
                participant_scope,
                indicator,
            } => write!(
                f,
                "image {image_id} in scope {participant_scope}: no {} score",
                indicator.as_str()
            ),
            DropReason::MissingMetrics { image_id } => write!(f, "image {image_id}: no metrics"),
        }
    }
}

/// Joins image metrics with the scores of every context whose image scope is
/// `image_scope`. Columns are the participant-country one-hot (all zeros for
/// `ALL`), the four image metrics and the nine non-green normalised Q scores;
/// the target is the green normalised Q score. Rows that cannot be completed
/// are reported rather than treated as errors.
pub fn build_feature_table(
    metrics: &[MetricRow],
    scores: &ScoreTable,
    image_scope: &Scope,
) -> (FeatureTable, Vec<DropReason>) {
    let by_image: HashMap<&str, &MetricRow> =
        metrics.iter().map(|m| (m.image_id.as_str(), m)).collect();
    let countries: BTreeSet<&str> = scores
        .rows
        .iter()
        .filter(|r| &r.image_scope == image_scope)
        .filter_map(|r| match &r.participant_scope {
            Scope::Named(n) => Some(n.as_str()),
            Scope::All => None,
        })
        .collect();
    let countries: Vec<&str> = countries.into_iter().collect();
    let others: Vec<Indicator> = Indicator::ALL
        .into_iter()
        .filter(|&i| i != Indicator::Green)
        .collect();

    let mut feature_names: Vec<String> = countries.iter().map(|c| format!("country_{c}")).collect();
    feature_names.extend(METRIC_FEATURES.iter().map(|s| s.to_string()));
    feature_names.extend(others.iter().map(|i| format!("q_{}", i.as_str())));

    let q: HashMap<(&Scope, Indicator, &str), f64> = scores
        .rows
        .iter()
        .filter(|r| &r.image_scope == image_scope)
        .map(|r| ((&r.participant_scope, r.indicator, r.image_id.as_str()), r.q_normalized))
        .collect();

    let mut rows = Vec::new();
    let mut dropped = Vec::new();
    for green in scores
        .rows
        .iter()
        .filter(|r| &r.image_scope == image_scope && r.indicator == Indicator::Green)
    {
        let scope = &green.participant_scope;
        let id = green.image_id.as_str();
        let Some(m) = by_image.get(id) else {
            dropped.push(DropReason::MissingMetrics { image_id: id.to_string() });
            continue;
        };
        let mut features: Vec<f64> = countries
            .iter()
            .map(|c| f64::from(u8::from(scope == &Scope::Named(c.to_string()))))
            .collect();
        features.extend([m.sky_view_index, m.gvi, m.spatial_entropy, m.global_entropy]);
        let missing = others.iter().find(|&&i| !q.contains_key(&(scope, i, id)));
        if let Some(&indicator) = missing {
            dropped.push(DropReason::MissingIndicator {
                image_id: id.to_string(),
                participant_scope: scope.clone(),
                indicator,
            });
            continue;
        }
        features.extend(others.iter().map(|&i| q[&(scope, i, id)]));
        rows.push(FeatureRow {
            image_id: id.to_string(),
            participant_scope: scope.clone(),
            image_city: m.city.clone(),
            features,
            target: green.q_normalized,
            stratum: format!("{}|{}", m.city, scope),
        });
    }
    (FeatureTable { feature_names, rows }, dropped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::ScoreRow;

    fn metric(id: &str) -> MetricRow {
        MetricRow {
            image_id: id.into(),
            city: "Santiago".into(),
            gvi: 0.3,
            sky_view_index: 0.2,
            spatial_entropy: 0.5,
            window_fraction: 0.45,
            global_entropy: 1.5,
            mean_veg_depth: None,
            median_veg_depth: None,
            relative_depth: None,
        }
    }

    fn score(scope: &str, ind: Indicator, id: &str, q: f64) -> ScoreRow {
        ScoreRow {
            participant_scope: scope.into(),
            image_scope: Scope::All,
            indicator: ind,
            image_id: id.into(),
            q,
            q_normalized: q / 10.0,
            n_comparisons: 4,
            ts_mu: 25.0,
            ts_sigma: 8.0,
            ts_conservative: 1.0,
        }
    }

    #[test]
    fn complete_image_gives_one_hot_row_and_missing_walk_is_dropped() {
        let mut rows = Vec::new();
        for (k, ind) in Indicator::ALL.into_iter().enumerate() {
            rows.push(score("Chile", ind, "1", k as f64));
            if ind != Indicator::Walk {
                rows.push(score("Chile", ind, "2", 5.0));
            }
            rows.push(score("USA", ind, "1", 1.0));
        }
        let table = ScoreTable { rows };
        let (ft, dropped) = build_feature_table(&[metric("1"), metric("2")], &table, &Scope::All);
        assert_eq!(ft.feature_names.len(), 2 + 4 + 9);
        assert_eq!(ft.feature_names[0], "country_Chile");
        assert_eq!(ft.len(), 2);
        let chile = ft.rows.iter().find(|r| r.participant_scope == Scope::from("Chile")).unwrap();
        assert_eq!(&chile.features[..2], &[1.0, 0.0]);
        assert_eq!(chile.features[2..6], [0.2, 0.3, 0.5, 1.5]);
        assert_eq!(chile.features[6], 0.0);
        assert_eq!(chile.target, 0.9);
        assert_eq!(chile.stratum, "Santiago|Chile");
        assert_eq!(
            dropped,
            vec![DropReason::MissingIndicator {
                image_id: "2".into(),
                participant_scope: "Chile".into(),
                indicator: Indicator::Walk
            }]
        );
        assert!(ft.matrix().is_finite());
    }

    #[test]
    fn all_scope_has_zero_one_hot_and_missing_metrics_drop() {
        let rows = Indicator::ALL.into_iter().map(|i| score("ALL", i, "7", 3.0)).collect();
        let table = ScoreTable { rows };
        let (ft, dropped) = build_feature_table(&[metric("7")], &table, &Scope::All);
        assert_eq!(ft.feature_names.len(), 13);
        assert_eq!(ft.rows[0].stratum, "Santiago|ALL");
        assert!(dropped.is_empty());
        let (ft, dropped) = build_feature_table(&[], &table, &Scope::All);
        assert!(ft.is_empty());
        assert_eq!(dropped, vec![DropReason::MissingMetrics { image_id: "7".into() }]);
    }
}
