use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    evaluate, stratified_folds, train_forest, Evaluation, ForestConfig, Matrix, MaxFeatures,
    ModelError,
};

/// Grid the random search samples from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    pub n_estimators: Vec<usize>,
    pub max_depth: Vec<Option<usize>>,
    pub min_samples_split: Vec<usize>,
    pub min_samples_leaf: Vec<usize>,
    pub max_features: Vec<MaxFeatures>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            n_estimators: (100..=500).step_by(50).collect(),
            max_depth: vec![Some(10), Some(20), Some(30), None],
            min_samples_split: vec![2, 5, 10],
            min_samples_leaf: vec![1, 2, 4],
            max_features: vec![MaxFeatures::Sqrt, MaxFeatures::Log2, MaxFeatures::All],
        }
    }
}

impl SearchSpace {
    pub fn single(config: &ForestConfig) -> Self {
        SearchSpace {
            n_estimators: vec![config.n_estimators],
            max_depth: vec![config.max_depth],
            min_samples_split: vec![config.min_samples_split],
            min_samples_leaf: vec![config.min_samples_leaf],
            max_features: vec![config.max_features],
        }
    }

    pub fn size(&self) -> usize {
        self.n_estimators.len()
            * self.max_depth.len()
            * self.min_samples_split.len()
            * self.min_samples_leaf.len()
            * self.max_features.len()
    }

    /// Every configuration in the grid, in a fixed nested order.
    pub fn enumerate(&self, seed: u64) -> Vec<ForestConfig> {
        let mut out = Vec::with_capacity(self.size());
        for &n_estimators in &self.n_estimators {
            for &max_depth in &self.max_depth {
                for &min_samples_split in &self.min_samples_split {
                    for &min_samples_leaf in &self.min_samples_leaf {
                        for &max_features in &self.max_features {
                            out.push(ForestConfig {
                                n_estimators,
                                max_depth,
                                min_samples_split,
                                min_samples_leaf,
                                max_features,
                                seed,
                                bootstrap: true,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

/// One leaderboard line; field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub rank: usize,
    pub n_estimators: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub mean_mse: f64,
    pub sd_mse: f64,
    pub mean_r2: f64,
    #[serde(skip)]
    pub fold_mse: Vec<f64>,
}

impl LeaderboardEntry {
    pub fn config(&self, seed: u64) -> ForestConfig {
        ForestConfig {
            n_estimators: self.n_estimators,
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            min_samples_leaf: self.min_samples_leaf,
            max_features: self.max_features,
            seed,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: ForestConfig,
    pub cv_mse: f64,
    pub leaderboard: Vec<LeaderboardEntry>,
}

/// Randomised grid search with stratified k-fold cross-validation.
///
/// `n_candidates` configurations are drawn without replacement from `space`;
/// each is scored by mean validation MSE over the same folds. Ties keep the
/// draw order.
#[allow(clippy::too_many_arguments)]
pub fn random_search_cv<S: AsRef<str> + Sync>(
    x: &Matrix,
    y: &[f64],
    strata: &[S],
    feature_names: &[String],
    space: &SearchSpace,
    n_candidates: usize,
    folds: usize,
    seed: u64,
) -> Result<SearchResult, ModelError> {
    if x.n_rows() != y.len() || strata.len() != y.len() {
        return Err(ModelError::DimensionMismatch {
            rows: x.n_rows(),
            targets: y.len(),
        });
    }
    if n_candidates == 0 || space.size() == 0 {
        return Err(ModelError::InvalidConfig("no candidates to search".into()));
    }
    let fold_rows = stratified_folds(strata, folds, seed)?;

    let mut candidates = space.enumerate(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    candidates.shuffle(&mut rng);
    candidates.truncate(n_candidates);
    for c in &candidates {
        c.validate()?;
    }

    // training rows per fold are shared by all candidates
    let splits: Vec<(Matrix, Vec<f64>, Matrix, Vec<f64>)> = fold_rows
        .iter()
        .map(|val| {
            let mut in_val = vec![false; y.len()];
            for &i in val {
                in_val[i] = true;
            }
            let train: Vec<usize> = (0..y.len()).filter(|&i| !in_val[i]).collect();
            (
                x.select_rows(&train),
                train.iter().map(|&i| y[i]).collect(),
                x.select_rows(val),
                val.iter().map(|&i| y[i]).collect(),
            )
        })
        .collect();

    let scored: Vec<(ForestConfig, Vec<Evaluation>)> = candidates
        .into_par_iter()
        .map(|config| {
            let folds = splits
                .iter()
                .map(|(xt, yt, xv, yv)| {
                    let forest = train_forest(xt, yt, feature_names, &config)?;
                    evaluate(&forest, xv, yv)
                })
                .collect::<Result<Vec<Evaluation>, ModelError>>()?;
            Ok((config, folds))
        })
        .collect::<Result<_, ModelError>>()?;

    let mut leaderboard: Vec<LeaderboardEntry> = scored
        .into_iter()
        .map(|(c, folds)| {
            let fold_mse: Vec<f64> = folds.iter().map(|e| e.mse).collect();
            let k = fold_mse.len() as f64;
            let mean = fold_mse.iter().sum::<f64>() / k;
            let var = fold_mse.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
            LeaderboardEntry {
                rank: 0,
                n_estimators: c.n_estimators,
                max_depth: c.max_depth,
                min_samples_split: c.min_samples_split,
                min_samples_leaf: c.min_samples_leaf,
                max_features: c.max_features,
                mean_mse: mean,
                sd_mse: var.sqrt(),
                mean_r2: folds.iter().map(|e| e.r2).sum::<f64>() / k,
                fold_mse,
            }
        })
        .collect();
    leaderboard.sort_by(|a, b| a.mean_mse.total_cmp(&b.mean_mse));
    for (i, e) in leaderboard.iter_mut().enumerate() {
        e.rank = i + 1;
    }
    let best = leaderboard[0].config(seed);
    Ok(SearchResult {
        cv_mse: leaderboard[0].mean_mse,
        best,
        leaderboard,
    })
}
