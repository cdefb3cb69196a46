use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ModelError;

fn group<S: AsRef<str>>(strata: &[S]) -> BTreeMap<&str, Vec<usize>> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in strata.iter().enumerate() {
        groups.entry(s.as_ref()).or_default().push(i);
    }
    groups
}

/// Splits row indices into (train, test). Each stratum of size `m` sends
/// `round(m * test_fraction)` rows to test, capped at `m - 1` so a stratum
/// always keeps a training row; singletons therefore land in train.
pub fn stratified_split<S: AsRef<str>>(
    strata: &[S],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), ModelError> {
    if strata.is_empty() {
        return Err(ModelError::EmptyTable);
    }
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(ModelError::InvalidConfig(format!(
            "test_fraction {test_fraction} outside [0, 1)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (_, mut rows) in group(strata) {
        let m = rows.len();
        let n_test = ((m as f64 * test_fraction).round() as usize).min(m - 1);
        rows.shuffle(&mut rng);
        test.extend_from_slice(&rows[..n_test]);
        train.extend_from_slice(&rows[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Validation indices for each of `k` folds. Rows of each stratum are
/// shuffled and dealt round-robin, continuing across strata so fold sizes
/// differ by at most one.
pub fn stratified_folds<S: AsRef<str>>(
    strata: &[S],
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>, ModelError> {
    if k < 2 {
        return Err(ModelError::InvalidConfig("need at least 2 folds".into()));
    }
    if strata.len() < k {
        return Err(ModelError::TooFewRows {
            needed: k,
            found: strata.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for (_, mut rows) in group(strata) {
        rows.shuffle(&mut rng);
        for r in rows {
            folds[next].push(r);
            next = (next + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}
