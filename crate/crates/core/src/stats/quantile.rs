use serde::{Deserialize, Serialize};

use super::{check_finite, StatsError};

/// Linear-interpolation quantile of pre-sorted data (`h = (n − 1)·q`).
fn sorted_quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted_copy(xs: &[f64]) -> Result<Vec<f64>, StatsError> {
    if xs.is_empty() {
        return Err(StatsError::EmptyGroup);
    }
    check_finite(xs)?;
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

fn check_level(q: f64) -> Result<(), StatsError> {
    if (0.0..=1.0).contains(&q) {
        Ok(())
    } else {
        Err(StatsError::InvalidArgument(format!("quantile level {q} outside [0, 1]")))
    }
}

pub fn quantile(xs: &[f64], q: f64) -> Result<f64, StatsError> {
    check_level(q)?;
    Ok(sorted_quantile(&sorted_copy(xs)?, q))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileGroups {
    pub q_low: f64,
    pub q_high: f64,
    /// Ids with score ≤ `q_low`, in input order.
    pub low: Vec<String>,
    /// Ids with score ≥ `q_high`, in input order.
    pub high: Vec<String>,
}

/// Splits entries into the lower and upper tails of their score distribution.
pub fn quantile_groups(
    entries: &[(String, f64)],
    low_q: f64,
    high_q: f64,
) -> Result<QuantileGroups, StatsError> {
    if entries.len() < 4 {
        return Err(StatsError::TooFew {
            needed: 4,
            found: entries.len(),
        });
    }
    check_level(low_q)?;
    check_level(high_q)?;
    if low_q > high_q {
        return Err(StatsError::InvalidArgument(format!(
            "low quantile {low_q} above high quantile {high_q}"
        )));
    }
    let scores: Vec<f64> = entries.iter().map(|e| e.1).collect();
    let sorted = sorted_copy(&scores)?;
    let (q_low, q_high) = (sorted_quantile(&sorted, low_q), sorted_quantile(&sorted, high_q));
    let pick = |keep: &dyn Fn(f64) -> bool| {
        entries
            .iter()
            .filter(|e| keep(e.1))
            .map(|e| e.0.clone())
            .collect()
    };
    Ok(QuantileGroups {
        q_low,
        q_high,
        low: pick(&|s| s <= q_low),
        high: pick(&|s| s >= q_high),
    })
}

/// Paired quantiles of two samples at `k / (n_quantiles − 1)`.
pub fn qq_data(x: &[f64], y: &[f64], n_quantiles: usize) -> Result<Vec<(f64, f64)>, StatsError> {
    if n_quantiles < 2 {
        return Err(StatsError::InvalidArgument(
            "need at least two quantile levels".into(),
        ));
    }
    let (sx, sy) = (sorted_copy(x)?, sorted_copy(y)?);
    Ok((0..n_quantiles)
        .map(|k| {
            let q = k as f64 / (n_quantiles - 1) as f64;
            (sorted_quantile(&sx, q), sorted_quantile(&sy, q))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entries(scores: &[f64]) -> Vec<(String, f64)> {
        scores.iter().map(|s| (format!("{s}"), *s)).collect()
    }

    #[test]
    fn one_to_eight() {
        let g = quantile_groups(&entries(&[5., 1., 8., 2., 7., 3., 6., 4.]), 0.25, 0.75).unwrap();
        assert_eq!(g.q_low, 2.75);
        assert_eq!(g.q_high, 6.25);
        assert_eq!(g.low, vec!["1", "2"]);
        assert_eq!(g.high, vec!["8", "7"]);
    }

    #[test]
    fn four_entries() {
        let g = quantile_groups(&entries(&[1., 2., 3., 4.]), 0.25, 0.75).unwrap();
        assert_eq!((g.low, g.high), (vec!["1".to_string()], vec!["4".to_string()]));
    }

    #[test]
    fn all_equal() {
        let e: Vec<(String, f64)> = (0..5).map(|i| (i.to_string(), 0.3)).collect();
        let g = quantile_groups(&e, 0.25, 0.75).unwrap();
        assert_eq!(g.low.len(), 5);
        assert_eq!(g.high.len(), 5);
    }

    #[test]
    fn too_few() {
        assert!(matches!(
            quantile_groups(&entries(&[1., 2., 3.]), 0.25, 0.75),
            Err(StatsError::TooFew { .. })
        ));
    }

    #[test]
    fn qq_identity_and_shift() {
        let x = [3.0, 1.0, 2.0, 5.0];
        for (a, b) in qq_data(&x, &x, 7).unwrap() {
            assert_eq!(a, b);
        }
        let y: Vec<f64> = x.iter().map(|v| v + 2.5).collect();
        for (a, b) in qq_data(&x, &y, 5).unwrap() {
            assert!((b - a - 2.5).abs() < 1e-12);
        }
        assert!(qq_data(&x, &[], 5).is_err());
        assert!(qq_data(&x, &x, 1).is_err());
    }

    #[test]
    fn qq_against_direct_quantiles() {
        let x: Vec<f64> = (1..=100).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let pts = qq_data(&x, &y, 11).unwrap();
        for (k, (qx, qy)) in pts.into_iter().enumerate() {
            // position h = 99·k/10 on the 0-based sorted index
            let h = 99.0 * k as f64 / 10.0;
            let (lo, frac) = (h.floor(), h - h.floor());
            let at = |i: f64| (i + 1.0, (i + 1.0) * (i + 1.0));
            let (x0, y0) = at(lo);
            let (x1, y1) = at((lo + 1.0).min(99.0));
            assert!((qx - (x0 + frac * (x1 - x0))).abs() < 1e-9);
            assert!((qy - (y0 + frac * (y1 - y0))).abs() < 1e-9);
        }
    }
}
