use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mse, Matrix, ModelError, TrainedForest};
use crate::stats::{pearson, quantile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImportanceOptions {
    pub repeats: usize,
    pub correlation_threshold: f64,
    pub n_bins: usize,
    pub seed: u64,
}

impl Default for ImportanceOptions {
    fn default() -> Self {
        ImportanceOptions {
            repeats: 30,
            correlation_threshold: 0.3,
            n_bins: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub mean_delta_mse: f64,
    pub sd_delta_mse: f64,
    /// Features whose bins the permutation was confined to.
    pub conditioning: Vec<String>,
    pub deltas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub baseline_mse: f64,
    pub repeats: usize,
    pub correlation_threshold: f64,
    pub n_bins: usize,
    pub features: Vec<FeatureImportance>,
}

impl ImportanceReport {
    pub fn get(&self, feature: &str) -> Option<&FeatureImportance> {
        self.features.iter().find(|f| f.feature == feature)
    }

    /// Features by decreasing mean ΔMSE.
    pub fn ranked(&self) -> Vec<&FeatureImportance> {
        let mut v: Vec<_> = self.features.iter().collect();
        v.sort_by(|a, b| b.mean_delta_mse.total_cmp(&a.mean_delta_mse));
        v
    }
}

fn abs_correlation(a: &[f64], b: &[f64]) -> f64 {
    // a constant column carries no correlation structure to preserve
    pearson(a, b).map_or(0.0, |c| c.r.abs())
}

/// Bin index of every value: the count of interior quantile cut points
/// strictly below it.
fn bin_column(col: &[f64], n_bins: usize) -> Vec<usize> {
    let cuts: Vec<f64> = (1..n_bins)
        .map(|k| quantile(col, k as f64 / n_bins as f64).expect("column is nonempty and finite"))
        .collect();
    col.iter()
        .map(|&v| cuts.partition_point(|&c| c < v))
        .collect()
}

/// Permutation importance that shuffles each feature only within cells of a
/// grid over the features it is correlated with.
///
/// For feature `j`, every other feature with `|r| >= correlation_threshold`
/// on the test rows is cut into `n_bins` quantile bins; rows sharing all
/// those bins form a cell and `j` is permuted inside each cell. With no such
/// feature the permutation is unconditional. Repeat `r` of feature `j` uses
/// the stream `(seed, j << 32 | r)`.
pub fn conditional_permutation_importance(
    forest: &TrainedForest,
    x: &Matrix,
    y: &[f64],
    options: &ImportanceOptions,
) -> Result<ImportanceReport, ModelError> {
    if options.repeats < 2 {
        return Err(ModelError::InvalidConfig("repeats must be at least 2".into()));
    }
    if options.n_bins < 1 {
        return Err(ModelError::InvalidConfig("n_bins must be positive".into()));
    }
    if x.n_rows() != y.len() {
        return Err(ModelError::DimensionMismatch {
            rows: x.n_rows(),
            targets: y.len(),
        });
    }
    if x.n_cols() != forest.n_features() {
        return Err(ModelError::InvalidConfig(format!(
            "forest has {} features, matrix has {}",
            forest.n_features(),
            x.n_cols()
        )));
    }
    let needed = 2 * options.n_bins;
    if y.len() < needed {
        return Err(ModelError::TooFewRows {
            needed,
            found: y.len(),
        });
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite);
    }

    let n_features = x.n_cols();
    let columns: Vec<Vec<f64>> = (0..n_features).map(|j| x.column(j)).collect();
    let bins: Vec<Vec<usize>> = columns
        .par_iter()
        .map(|c| bin_column(c, options.n_bins))
        .collect();
    let baseline = mse(&forest.predict(x), y);

    let features = (0..n_features)
        .into_par_iter()
        .map(|j| {
            let conditioners: Vec<usize> = (0..n_features)
                .filter(|&k| {
                    k != j
                        && abs_correlation(&columns[j], &columns[k]) >= options.correlation_threshold
                })
                .collect();
            let mut cells: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
            #[allow(clippy::needless_range_loop)]
            for row in 0..y.len() {
                let key: Vec<usize> = conditioners.iter().map(|&k| bins[k][row]).collect();
                cells.entry(key).or_default().push(row);
            }
            let deltas: Vec<f64> = (0..options.repeats)
                .into_par_iter()
                .map(|r| {
                    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
                    rng.set_stream(((j as u64) << 32) | r as u64);
                    let mut permuted = x.clone();
                    for rows in cells.values() {
                        let mut source = rows.clone();
                        source.shuffle(&mut rng);
                        for (&dst, &src) in rows.iter().zip(&source) {
                            permuted.set(dst, j, columns[j][src]);
                        }
                    }
                    mse(&forest.predict(&permuted), y) - baseline
                })
                .collect();
            let k = deltas.len() as f64;
            let mean = deltas.iter().sum::<f64>() / k;
            let var = deltas.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (k - 1.0);
            FeatureImportance {
                feature: forest.feature_names[j].clone(),
                mean_delta_mse: mean,
                sd_delta_mse: var.sqrt(),
                conditioning: conditioners
                    .iter()
                    .map(|&k| forest.feature_names[k].clone())
                    .collect(),
                deltas,
            }
        })
        .collect();

    Ok(ImportanceReport {
        baseline_mse: baseline,
        repeats: options.repeats,
        correlation_threshold: options.correlation_threshold,
        n_bins: options.n_bins,
        features,
    })
}
