use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, TreeParams};
use super::{mse, Matrix, ModelError, Tree};

/// Number of features tried at each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaxFeatures {
    Sqrt,
    Log2,
    All,
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let n = n_features as f64;
        let k = match self {
            MaxFeatures::Sqrt => n.sqrt().floor() as usize,
            MaxFeatures::Log2 => n.log2().floor() as usize,
            MaxFeatures::All => n_features,
        };
        k.clamp(1, n_features.max(1))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MaxFeatures::Sqrt => "sqrt",
            MaxFeatures::Log2 => "log2",
            MaxFeatures::All => "all",
        }
    }
}

impl fmt::Display for MaxFeatures {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MaxFeatures {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sqrt" => Ok(MaxFeatures::Sqrt),
            "log2" => Ok(MaxFeatures::Log2),
            "all" | "none" => Ok(MaxFeatures::All),
            other => Err(ModelError::InvalidConfig(format!("max_features {other:?}"))),
        }
    }
}

impl Serialize for MaxFeatures {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for MaxFeatures {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_estimators: usize,
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub seed: u64,
    /// Draw a bootstrap sample per tree. With `false` every tree sees all rows.
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_estimators: 100,
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
            seed: 0,
            bootstrap: true,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        if self.n_estimators == 0 {
            return bad("n_estimators must be positive");
        }
        if self.min_samples_split < 2 {
            return bad("min_samples_split must be at least 2");
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be positive");
        }
        if self.max_depth == Some(0) {
            return bad("max_depth must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedForest {
    pub config: ForestConfig,
    pub feature_names: Vec<String>,
    pub trees: Vec<Tree>,
}

impl TrainedForest {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let first = self.trees[0].predict(row);
        let mut sum = first;
        let mut agree = true;
        for t in &self.trees[1..] {
            let v = t.predict(row);
            agree &= v == first;
            sum += v;
        }
        // averaging identical outputs would not round-trip exactly
        if agree {
            first
        } else {
            sum / self.trees.len() as f64
        }
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        (0..x.n_rows()).map(|r| self.predict_row(x.row(r))).collect()
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

/// Fits a forest of CART trees. Tree `i` draws from its own ChaCha8 stream
/// `(config.seed, i)`, so the result does not depend on the thread count.
pub fn train_forest(
    x: &Matrix,
    y: &[f64],
    feature_names: &[String],
    config: &ForestConfig,
) -> Result<TrainedForest, ModelError> {
    config.validate()?;
    if x.n_rows() == 0 {
        return Err(ModelError::EmptyTable);
    }
    if x.n_rows() != y.len() {
        return Err(ModelError::DimensionMismatch {
            rows: x.n_rows(),
            targets: y.len(),
        });
    }
    if feature_names.len() != x.n_cols() {
        return Err(ModelError::InvalidConfig(format!(
            "{} feature names for {} columns",
            feature_names.len(),
            x.n_cols()
        )));
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite);
    }
    if y.iter().all(|&v| v == y[0]) {
        log::warn!("degenerate target: every training value is {}", y[0]);
    }
    let params = TreeParams {
        max_depth: config.max_depth,
        min_samples_split: config.min_samples_split,
        min_samples_leaf: config.min_samples_leaf,
        n_candidate_features: config.max_features.resolve(x.n_cols()),
    };
    let n = x.n_rows();
    let trees = (0..config.n_estimators)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64);
            let samples: Vec<usize> = if config.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow(x, y, &samples, params, &mut rng)
        })
        .collect();
    Ok(TrainedForest {
        config: config.clone(),
        feature_names: feature_names.to_vec(),
        trees,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub mse: f64,
    pub r2: f64,
    pub n: usize,
}

/// MSE and R² of `forest` on held-out rows. A constant target gives
/// R² = 1 for perfect predictions and 0 otherwise.
pub fn evaluate(forest: &TrainedForest, x: &Matrix, y: &[f64]) -> Result<Evaluation, ModelError> {
    if y.is_empty() {
        return Err(ModelError::EmptyTable);
    }
    if x.n_rows() != y.len() {
        return Err(ModelError::DimensionMismatch {
            rows: x.n_rows(),
            targets: y.len(),
        });
    }
    let pred = forest.predict(x);
    let m = mse(&pred, y);
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let sst = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    let sse = m * y.len() as f64;
    let r2 = if sst == 0.0 {
        if sse == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - sse / sst
    };
    Ok(Evaluation {
        mse: m,
        r2,
        n: y.len(),
    })
}
