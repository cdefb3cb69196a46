use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use greenscape::metrics::{default_sweep_fractions, MetricParams};
use greenscape::model::{ImportanceOptions, SearchSpace};
use greenscape::scoring::ScoringParams;
use greenscape::stats::RankTestOptions;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Project configuration. Relative paths resolve against the directory
/// holding the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub paths: Paths,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub scoring: ScoringParams,
    #[serde(default)]
    pub stats: StatsConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(skip)]
    base_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    #[serde(default)]
    pub labels: Option<PathBuf>,
    #[serde(default)]
    pub depth: Option<PathBuf>,
    #[serde(default)]
    pub rgb: Option<PathBuf>,
    #[serde(default)]
    pub comparisons: Option<PathBuf>,
    #[serde(default)]
    pub classes: Option<PathBuf>,
    /// CSV with `image_id,city`.
    #[serde(default)]
    pub images: Option<PathBuf>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsConfig {
    #[serde(flatten)]
    pub params: MetricParams,
    #[serde(default = "default_sweep_fractions")]
    pub sweep_fractions: Vec<f64>,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            params: MetricParams::default(),
            sweep_fractions: default_sweep_fractions(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub low_quantile: f64,
    pub high_quantile: f64,
    pub exact_cutoff: usize,
    pub continuity_correction: f64,
    pub alpha: f64,
    pub qq_points: usize,
}

impl Default for StatsConfig {
    fn default() -> Self {
        let rank = RankTestOptions::default();
        StatsConfig {
            low_quantile: 0.25,
            high_quantile: 0.75,
            exact_cutoff: rank.exact_cutoff,
            continuity_correction: rank.continuity_correction,
            alpha: 0.05,
            qq_points: 101,
        }
    }
}

impl StatsConfig {
    pub fn rank_options(&self) -> RankTestOptions {
        RankTestOptions {
            exact_cutoff: self.exact_cutoff,
            continuity_correction: self.continuity_correction,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub search_space: SearchSpace,
    pub n_candidates: usize,
    pub folds: usize,
    pub test_fraction: f64,
    pub importance_repeats: usize,
    pub correlation_threshold: f64,
    pub n_bins: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let imp = ImportanceOptions::default();
        ModelConfig {
            search_space: SearchSpace::default(),
            n_candidates: 50,
            folds: 5,
            test_fraction: 0.2,
            importance_repeats: imp.repeats,
            correlation_threshold: imp.correlation_threshold,
            n_bins: imp.n_bins,
        }
    }
}

impl ModelConfig {
    pub fn importance(&self, seed: u64) -> ImportanceOptions {
        ImportanceOptions {
            repeats: self.importance_repeats,
            correlation_threshold: self.correlation_threshold,
            n_bins: self.n_bins,
            seed,
        }
    }
}

impl ProjectConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: ProjectConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        cfg.base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// A configured path, resolved; errors when the config leaves it out.
    pub fn require(&self, p: &Option<PathBuf>, key: &str) -> Result<PathBuf> {
        match p {
            Some(p) => Ok(self.resolve(p)),
            None => bail!("config has no paths.{key}"),
        }
    }

    pub fn optional(&self, p: &Option<PathBuf>) -> Option<PathBuf> {
        p.as_deref().map(|p| self.resolve(p))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.paths.output)
    }

    /// Checks that every referenced input exists and numbers are in range.
    pub fn validate(&self) -> Result<()> {
        let p = &self.paths;
        for (key, path, dir) in [
            ("labels", &p.labels, true),
            ("depth", &p.depth, true),
            ("rgb", &p.rgb, true),
            ("comparisons", &p.comparisons, false),
            ("classes", &p.classes, false),
            ("images", &p.images, false),
        ] {
            if let Some(path) = self.optional(path) {
                let ok = if dir { path.is_dir() } else { path.is_file() };
                ensure!(ok, "paths.{key}: {} does not exist", path.display());
            }
        }

        let m = &self.metrics;
        ensure!(
            m.params.window_fraction > 0.0 && m.params.window_fraction <= 1.0,
            "metrics.window_fraction must be in (0, 1]"
        );
        ensure!(m.params.stride >= 1, "metrics.stride must be at least 1");
        ensure!(
            (-510..=510).contains(&m.params.excess_green_threshold),
            "metrics.excess_green_threshold must be in [-510, 510]"
        );
        ensure!(!m.sweep_fractions.is_empty(), "metrics.sweep_fractions is empty");
        ensure!(
            m.sweep_fractions.iter().all(|&f| f > 0.0 && f <= 1.0)
                && m.sweep_fractions.windows(2).all(|w| w[0] < w[1]),
            "metrics.sweep_fractions must be strictly increasing within (0, 1]"
        );

        let ts = &self.scoring.trueskill;
        ensure!(
            ts.sigma0 > 0.0 && ts.beta > 0.0 && ts.tau >= 0.0,
            "scoring.trueskill needs sigma0 > 0, beta > 0 and tau >= 0"
        );
        ensure!(
            (0.0..1.0).contains(&ts.draw_probability),
            "scoring.trueskill.draw_probability must be in [0, 1)"
        );

        let s = &self.stats;
        ensure!(
            0.0 <= s.low_quantile && s.low_quantile < s.high_quantile && s.high_quantile <= 1.0,
            "stats quantiles must satisfy 0 <= low < high <= 1"
        );
        ensure!(s.alpha > 0.0 && s.alpha < 1.0, "stats.alpha must be in (0, 1)");
        ensure!(s.qq_points >= 2, "stats.qq_points must be at least 2");
        ensure!(
            (0.0..=0.5).contains(&s.continuity_correction),
            "stats.continuity_correction must be in [0, 0.5]"
        );
        ensure!(s.exact_cutoff <= 60, "stats.exact_cutoff must be at most 60");

        let md = &self.model;
        ensure!(md.search_space.size() > 0, "model.search_space is empty");
        ensure!(md.n_candidates >= 1, "model.n_candidates must be at least 1");
        ensure!(md.folds >= 2, "model.folds must be at least 2");
        ensure!(
            md.test_fraction > 0.0 && md.test_fraction < 1.0,
            "model.test_fraction must be in (0, 1)"
        );
        ensure!(md.importance_repeats >= 1, "model.importance_repeats must be at least 1");
        ensure!(
            (0.0..=1.0).contains(&md.correlation_threshold),
            "model.correlation_threshold must be in [0, 1]"
        );
        ensure!(md.n_bins >= 1, "model.n_bins must be at least 1");
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, paths as written.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        format!("sha256:{}", hex::encode(Sha256::digest(&bytes)))
    }
}
