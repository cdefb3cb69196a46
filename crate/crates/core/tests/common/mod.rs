//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the library's algorithms; inputs and outputs are
//! plain vectors so the comparison is against first principles.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use greenscape::model::{Matrix, TrainedForest};
use greenscape::scoring::{Choice, ComparisonRecord, Indicator};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn entropy_bits(p: f64) -> f64 {
    let mut h = 0.0;
    if p > 0.0 {
        h -= p * p.log2();
    }
    if p < 1.0 {
        h -= (1.0 - p) * (1.0 - p).log2();
    }
    h
}

/// Slides an s×s window over `bits` (row-major, `w` wide) and counts set
/// pixels directly in every window.
pub fn brute_spatial_entropy(bits: &[u8], w: usize, h: usize, fraction: f64, stride: usize) -> f64 {
    let s = (fraction * w.min(h) as f64).round() as usize;
    let axis = |len: usize| {
        let mut v = Vec::new();
        let mut o = 0;
        while o + s <= len {
            v.push(o);
            o += stride;
        }
        if *v.last().unwrap() != len - s {
            v.push(len - s);
        }
        v
    };
    let (xs, ys) = (axis(w), axis(h));
    let mut total = 0.0;
    for &y0 in &ys {
        for &x0 in &xs {
            let mut count = 0usize;
            for y in y0..y0 + s {
                for x in x0..x0 + s {
                    count += bits[y * w + x] as usize;
                }
            }
            total += entropy_bits(count as f64 / (s * s) as f64);
        }
    }
    total / (xs.len() * ys.len()) as f64
}

fn average_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&x| {
            let below = v.iter().filter(|&&y| y < x).count() as f64;
            let equal = v.iter().filter(|&&y| y == x).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn two_sided(stats: &[f64], observed: f64) -> f64 {
    let n = stats.len() as f64;
    let lo = stats.iter().filter(|&&s| s <= observed + 1e-9).count() as f64;
    let hi = stats.iter().filter(|&&s| s >= observed - 1e-9).count() as f64;
    (2.0 * lo.min(hi) / n).min(1.0)
}

/// Exact two-sided signed-rank p-value by enumerating every sign pattern of
/// the nonzero differences.
pub fn brute_wilcoxon_p(diffs: &[f64]) -> f64 {
    let nz: Vec<f64> = diffs.iter().copied().filter(|&d| d != 0.0).collect();
    let ranks = average_ranks(&nz.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let observed: f64 = ranks.iter().zip(&nz).filter(|(_, &d)| d > 0.0).map(|(r, _)| r).sum();
    let n = nz.len();
    let stats: Vec<f64> = (0u32..1 << n)
        .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum())
        .collect();
    two_sided(&stats, observed)
}

/// Exact two-sided rank-sum p-value by enumerating every way of choosing
/// the first sample's positions in the pooled ranking.
pub fn brute_mann_whitney_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = average_ranks(&pooled);
    let n = pooled.len();
    let na = a.len();
    let observed: f64 = ranks[..na].iter().sum();
    let stats: Vec<f64> = (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == na)
        .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum())
        .collect();
    two_sided(&stats, observed)
}

pub fn record(left: &str, right: &str, choice: Choice) -> ComparisonRecord {
    ComparisonRecord {
        participant_id: "p".into(),
        participant_country: "X".into(),
        participant_city: "X".into(),
        demographics: BTreeMap::new(),
        personality: None,
        indicator: Indicator::Green,
        left_image: left.into(),
        right_image: right.into(),
        left_city: None,
        right_city: None,
        choice,
    }
}

/// Q scores straight from the strength-of-schedule definition, for every
/// image with at least `min_comparisons` comparisons.
pub fn q_oracle(records: &[ComparisonRecord], min_comparisons: usize) -> BTreeMap<String, f64> {
    #[derive(Default)]
    struct T {
        w: f64,
        l: f64,
        t: f64,
        beat: BTreeSet<String>,
        lost_to: BTreeSet<String>,
    }
    let mut tally: HashMap<String, T> = HashMap::new();
    for r in records {
        let (a, b) = (r.left_image.clone(), r.right_image.clone());
        match r.choice {
            Choice::Left => {
                let ta = tally.entry(a.clone()).or_default();
                ta.w += 1.0;
                ta.beat.insert(b.clone());
                let tb = tally.entry(b).or_default();
                tb.l += 1.0;
                tb.lost_to.insert(a);
            }
            Choice::Right => {
                let tb = tally.entry(b.clone()).or_default();
                tb.w += 1.0;
                tb.beat.insert(a.clone());
                let ta = tally.entry(a).or_default();
                ta.l += 1.0;
                ta.lost_to.insert(b);
            }
            Choice::Equal => {
                tally.entry(a).or_default().t += 1.0;
                tally.entry(b).or_default().t += 1.0;
            }
        }
    }
    let ratio = |t: &T, x: f64| (x + t.t / 2.0) / (t.w + t.l + t.t);
    let mean = |xs: Vec<f64>| {
        if xs.is_empty() {
            0.0
        } else {
            xs.iter().sum::<f64>() / xs.len() as f64
        }
    };
    tally
        .iter()
        .filter(|(_, t)| (t.w + t.l + t.t) as usize >= min_comparisons)
        .map(|(id, t)| {
            let w = ratio(t, t.w);
            let beaten = mean(t.beat.iter().map(|o| ratio(&tally[o], tally[o].w)).collect());
            let conquerors = mean(t.lost_to.iter().map(|o| ratio(&tally[o], tally[o].l)).collect());
            (id.clone(), 10.0 / 3.0 * (w + beaten - conquerors + 1.0))
        })
        .collect()
}

/// A random tournament over `n_images` images with `n_records` comparisons.
pub fn random_tournament(rng: &mut impl Rng, n_images: usize, n_records: usize) -> Vec<ComparisonRecord> {
    (0..n_records)
        .map(|_| {
            let a = rng.random_range(0..n_images);
            let mut b = rng.random_range(0..n_images - 1);
            if b >= a {
                b += 1;
            }
            let choice = match rng.random_range(0..3) {
                0 => Choice::Left,
                1 => Choice::Right,
                _ => Choice::Equal,
            };
            record(&format!("img{a}"), &format!("img{b}"), choice)
        })
        .collect()
}

fn mse(forest: &TrainedForest, x: &Matrix, y: &[f64]) -> f64 {
    let p = forest.predict(x);
    p.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64
}

/// Plain permutation importance: shuffle one column over all rows and
/// record the MSE increase, once per repeat.
pub fn unconditional_importance(
    forest: &TrainedForest,
    x: &Matrix,
    y: &[f64],
    feature: usize,
    repeats: usize,
    seed: u64,
) -> Vec<f64> {
    let base = mse(forest, x, y);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..repeats)
        .map(|_| {
            let mut col = x.column(feature);
            col.shuffle(&mut rng);
            let mut xp = x.clone();
            for (r, v) in col.into_iter().enumerate() {
                xp.set(r, feature, v);
            }
            mse(forest, &xp, y) - base
        })
        .collect()
}
