//! Wilcoxon signed-rank and Mann-Whitney U tests.
//!
//! Ranks are carried doubled (`2 × average rank`) so tied ranks stay integral
//! and the exact null distributions can be built by counting subset sums.
//! Exact p-values are used whenever the effective sample size is within
//! [`RankTestOptions::exact_cutoff`]; they are the permutation distribution
//! conditional on the observed ties. Larger samples use the normal
//! approximation with tie and continuity corrections.
//!
//! Two-sided exact p-values double the smaller tail and cap at 1.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::{check_finite, StatsError, TestMethod, TestResult};

/// Largest effective sample size handled by exact enumeration.
pub const DEFAULT_EXACT_CUTOFF: usize = 25;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct RankTestOptions {
    pub exact_cutoff: usize,
    pub continuity_correction: f64,
}

impl Default for RankTestOptions {
    fn default() -> Self {
        RankTestOptions {
            exact_cutoff: DEFAULT_EXACT_CUTOFF,
            continuity_correction: 0.5,
        }
    }
}

/// Average (1-based) ranks, doubled, with the size of every tie group.
fn doubled_ranks(values: &[f64]) -> (Vec<u64>, Vec<u64>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0u64; values.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end share rank (start + 1 + end) / 2
        let doubled = (start + 1 + end) as u64;
        for &i in &order[start..end] {
            ranks[i] = doubled;
        }
        let t = (end - start) as u64;
        if t > 1 {
            ties.push(t);
        }
        start = end;
    }
    (ranks, ties)
}

/// Average ranks (1-based) with ties sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    doubled_ranks(values)
        .0
        .into_iter()
        .map(|r| r as f64 / 2.0)
        .collect()
}

fn two_sided_normal(statistic: f64, mean: f64, var: f64, cc: f64) -> f64 {
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((statistic - mean).abs() - cc).max(0.0) / var.sqrt();
    erfc(z / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

/// Doubles the smaller tail of a discrete distribution given as counts per value.
fn two_sided_exact(counts: &[f64], observed: usize) -> f64 {
    let total: f64 = counts.iter().sum();
    let lower: f64 = counts[..=observed].iter().sum();
    let upper: f64 = counts[observed..].iter().sum();
    (2.0 * lower.min(upper) / total).min(1.0)
}

pub fn wilcoxon_signed_rank(diffs: &[f64]) -> Result<TestResult, StatsError> {
    wilcoxon_signed_rank_with(diffs, &RankTestOptions::default())
}

/// Signed-rank test of `diffs` against a zero median. Exact zeros are
/// dropped before ranking; `n_effective` is the count that remains.
pub fn wilcoxon_signed_rank_with(
    diffs: &[f64],
    options: &RankTestOptions,
) -> Result<TestResult, StatsError> {
    check_finite(diffs)?;
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|&d| d != 0.0).collect();
    if nonzero.is_empty() {
        return Err(StatsError::AllZeros);
    }
    let n = nonzero.len();
    let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = doubled_ranks(&abs);
    let total: u64 = ranks.iter().sum();
    let w_plus: u64 = ranks
        .iter()
        .zip(&nonzero)
        .filter(|(_, &d)| d > 0.0)
        .map(|(r, _)| r)
        .sum();
    let w_minus = total - w_plus;
    let statistic = w_plus.min(w_minus) as f64 / 2.0;

    if n <= options.exact_cutoff {
        // counts[s] = number of sign patterns whose doubled positive-rank sum is s
        let mut counts = vec![0f64; total as usize + 1];
        counts[0] = 1.0;
        let mut reach = 0usize;
        for &r in &ranks {
            let r = r as usize;
            for s in (0..=reach).rev() {
                if counts[s] != 0.0 {
                    counts[s + r] += counts[s];
                }
            }
            reach += r;
        }
        return Ok(TestResult {
            statistic,
            p_value: two_sided_exact(&counts, w_plus as usize),
            method: TestMethod::Exact,
            n_effective: n,
        });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    Ok(TestResult {
        statistic,
        p_value: two_sided_normal(w_plus as f64 / 2.0, mean, var, options.continuity_correction),
        method: TestMethod::NormalApprox,
        n_effective: n,
    })
}

pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    mann_whitney_u_with(a, b, &RankTestOptions::default())
}

/// Two-sample rank-sum test; the statistic is `min(U_a, U_b)`.
pub fn mann_whitney_u_with(
    a: &[f64],
    b: &[f64],
    options: &RankTestOptions,
) -> Result<TestResult, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptyGroup);
    }
    check_finite(a)?;
    check_finite(b)?;
    let (na, nb) = (a.len(), b.len());
    let n = na + nb;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = doubled_ranks(&pooled);
    let rank_sum_a: u64 = ranks[..na].iter().sum();
    let offset = (na * (na + 1)) as u64;
    let u_a2 = rank_sum_a - offset;
    let u_b2 = 2 * (na * nb) as u64 - u_a2;
    let statistic = u_a2.min(u_b2) as f64 / 2.0;

    if n <= options.exact_cutoff {
        // counts[k][s] = subsets of size k with doubled rank sum s
        let max_sum: usize = ranks.iter().sum::<u64>() as usize;
        let mut counts = vec![vec![0f64; max_sum + 1]; na + 1];
        counts[0][0] = 1.0;
        let mut reach = 0usize;
        for (seen, &r) in ranks.iter().enumerate() {
            let r = r as usize;
            for k in (0..=na.min(seen)).rev() {
                if k == na {
                    continue;
                }
                let (lower, upper) = counts.split_at_mut(k + 1);
                let (from, to) = (&lower[k], &mut upper[0]);
                for s in 0..=reach {
                    if from[s] != 0.0 {
                        to[s + r] += from[s];
                    }
                }
            }
            reach += r;
        }
        // shift rank sums to doubled U values
        let dist: Vec<f64> = counts[na][offset as usize..].to_vec();
        return Ok(TestResult {
            statistic,
            p_value: two_sided_exact(&dist, u_a2 as usize),
            method: TestMethod::Exact,
            n_effective: n,
        });
    }

    let (naf, nbf, nf) = (na as f64, nb as f64, n as f64);
    let mean = naf * nbf / 2.0;
    let tie_sum: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum();
    let var = naf * nbf / 12.0 * ((nf + 1.0) - tie_sum / (nf * (nf - 1.0)));
    Ok(TestResult {
        statistic,
        p_value: two_sided_normal(u_a2 as f64 / 2.0, mean, var, options.continuity_correction),
        method: TestMethod::NormalApprox,
        n_effective: n,
    })
}
