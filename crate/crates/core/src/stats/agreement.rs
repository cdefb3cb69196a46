use serde::{Deserialize, Serialize};

use super::{check_finite, mean, wilcoxon_signed_rank_with, RankTestOptions, StatsError, TestResult};

/// Bland-Altman agreement between two paired series, `a − b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlandAltmanResult {
    /// `((a + b) / 2, a − b)` per pair.
    pub pairs: Vec<(f64, f64)>,
    pub mean_diff: f64,
    pub sd_diff: f64,
    pub loa_low: f64,
    pub loa_high: f64,
    /// Signed-rank test of the differences against a zero median; absent when
    /// every difference is exactly zero.
    pub wilcoxon: Option<TestResult>,
}

const LOA_Z: f64 = 1.96;

pub fn bland_altman(
    a: &[f64],
    b: &[f64],
    options: &RankTestOptions,
) -> Result<BlandAltmanResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(StatsError::TooFew {
            needed: 2,
            found: a.len(),
        });
    }
    check_finite(a)?;
    check_finite(b)?;

    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let pairs = a
        .iter()
        .zip(b)
        .zip(&diffs)
        .map(|((x, y), d)| ((x + y) / 2.0, *d))
        .collect();
    let mean_diff = mean(a) - mean(b);
    let ss: f64 = diffs.iter().map(|d| (d - mean_diff).powi(2)).sum();
    let sd_diff = (ss / (diffs.len() - 1) as f64).sqrt();
    let wilcoxon = match wilcoxon_signed_rank_with(&diffs, options) {
        Ok(t) => Some(t),
        Err(StatsError::AllZeros) => None,
        Err(e) => return Err(e),
    };
    Ok(BlandAltmanResult {
        pairs,
        mean_diff,
        sd_diff,
        loa_low: mean_diff - LOA_Z * sd_diff,
        loa_high: mean_diff + LOA_Z * sd_diff,
        wilcoxon,
    })
}
