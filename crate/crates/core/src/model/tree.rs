//! CART regression trees with variance-reduction splits.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Matrix;

/// A tree as nested split records; rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        value: f64,
        n_samples: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        n_samples: usize,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tree {
    pub root: TreeNode,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { value, .. } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if row[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(left).max(go(right)),
            }
        }
        go(&self.root)
    }

    pub fn n_leaves(&self) -> usize {
        fn go(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 1,
                TreeNode::Split { left, right, .. } => go(left) + go(right),
            }
        }
        go(&self.root)
    }

    /// Features used by any split.
    pub fn split_features(&self) -> Vec<usize> {
        fn go(n: &TreeNode, out: &mut Vec<usize>) {
            if let TreeNode::Split {
                feature,
                left,
                right,
                ..
            } = n
            {
                out.push(*feature);
                go(left, out);
                go(right, out);
            }
        }
        let mut out = Vec::new();
        go(&self.root, &mut out);
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub n_candidate_features: usize,
}

struct Builder<'a, R> {
    x: &'a Matrix,
    y: &'a [f64],
    params: TreeParams,
    rng: &'a mut R,
    // scratch: (feature value, target) for the node being split
    pairs: Vec<(f64, f64)>,
}

/// Grows one tree on `samples` (row indices, repeats allowed).
pub(crate) fn grow<R: Rng>(
    x: &Matrix,
    y: &[f64],
    samples: &[usize],
    params: TreeParams,
    rng: &mut R,
) -> Tree {
    let mut b = Builder {
        x,
        y,
        params,
        rng,
        pairs: Vec::with_capacity(samples.len()),
    };
    Tree {
        root: b.node(samples, 0),
    }
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl<R: Rng> Builder<'_, R> {
    fn node(&mut self, samples: &[usize], depth: usize) -> TreeNode {
        let n = samples.len();
        let sum: f64 = samples.iter().map(|&i| self.y[i]).sum();
        let first = self.y[samples[0]];
        let pure = samples.iter().all(|&i| self.y[i] == first);
        let leaf = TreeNode::Leaf {
            value: if pure { first } else { sum / n as f64 },
            n_samples: n,
        };

        let p = &self.params;
        let depth_exhausted = p.max_depth.is_some_and(|d| depth >= d);
        if depth_exhausted || n < p.min_samples_split || n < 2 * p.min_samples_leaf || pure {
            return leaf;
        }

        let Some(best) = self.best_split(samples, sum) else {
            return leaf;
        };

        let (left, right): (Vec<usize>, Vec<usize>) = samples
            .iter()
            .partition(|&&i| self.x.get(i, best.feature) <= best.threshold);
        let left_node = self.node(&left, depth + 1);
        let right_node = self.node(&right, depth + 1);
        TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            n_samples: n,
            left: Box::new(left_node),
            right: Box::new(right_node),
        }
    }

    /// Maximises `S_l² / n_l + S_r² / n_r`, which minimises the summed squared error.
    fn best_split(&mut self, samples: &[usize], total: f64) -> Option<BestSplit> {
        let n = samples.len();
        let n_features = self.x.n_cols();
        let k = self.params.n_candidate_features.clamp(1, n_features);
        let min_leaf = self.params.min_samples_leaf.max(1);
        let candidates = index::sample(self.rng, n_features, k).into_vec();
        let parent_score = total * total / n as f64;

        let mut best: Option<BestSplit> = None;
        for feature in candidates {
            self.pairs.clear();
            self.pairs
                .extend(samples.iter().map(|&i| (self.x.get(i, feature), self.y[i])));
            self.pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

            let mut left_sum = 0.0;
            for split in 1..n {
                left_sum += self.pairs[split - 1].1;
                if split < min_leaf || n - split < min_leaf {
                    continue;
                }
                let (lo, hi) = (self.pairs[split - 1].0, self.pairs[split].0);
                if lo >= hi {
                    continue;
                }
                let right_sum = total - left_sum;
                let score = left_sum * left_sum / split as f64
                    + right_sum * right_sum / (n - split) as f64;
                if best.as_ref().is_none_or(|b| score > b.score) {
                    let mid = lo + (hi - lo) / 2.0;
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some(BestSplit {
                        feature,
                        threshold,
                        score,
                    });
                }
            }
        }
        // a split that does not reduce the error is not worth a node
        best.filter(|b| b.score > parent_score * (1.0 + 1e-12))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> TreeParams {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            n_candidate_features: usize::MAX,
        }
    }

    #[test]
    fn step_function_is_split_once() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = (0..10).map(|i| if i < 4 { 1.0 } else { 3.0 }).collect();
        let s: Vec<usize> = (0..10).collect();
        let t = grow(&x, &y, &s, params(), &mut ChaCha8Rng::seed_from_u64(1));
        match &t.root {
            TreeNode::Split { feature: 0, threshold, .. } => assert_eq!(*threshold, 3.5),
            other => panic!("{other:?}"),
        }
        assert_eq!(t.n_leaves(), 2);
        assert_eq!(t.predict(&[2.0]), 1.0);
        assert_eq!(t.predict(&[7.0]), 3.0);
    }

    #[test]
    fn min_samples_leaf_is_respected() {
        let rows: Vec<Vec<f64>> = (0..9).map(|i| vec![i as f64]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = (0..9).map(|i| (i * i) as f64).collect();
        let s: Vec<usize> = (0..9).collect();
        let p = TreeParams { min_samples_leaf: 4, ..params() };
        let t = grow(&x, &y, &s, p, &mut ChaCha8Rng::seed_from_u64(1));
        fn check(n: &TreeNode) {
            match n {
                TreeNode::Leaf { n_samples, .. } => assert!(*n_samples >= 4),
                TreeNode::Split { left, right, .. } => {
                    check(left);
                    check(right);
                }
            }
        }
        check(&t.root);
    }

    #[test]
    fn max_depth_caps_growth() {
        let rows: Vec<Vec<f64>> = (0..64).map(|i| vec![i as f64]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = (0..64).map(|i| ((i * 37) % 11) as f64).collect();
        let s: Vec<usize> = (0..64).collect();
        let p = TreeParams { max_depth: Some(3), ..params() };
        let t = grow(&x, &y, &s, p, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(t.depth() <= 3);
    }

    #[test]
    fn json_is_nested() {
        let t = Tree {
            root: TreeNode::Split {
                feature: 1,
                threshold: 0.5,
                n_samples: 3,
                left: Box::new(TreeNode::Leaf { value: 1.0, n_samples: 1 }),
                right: Box::new(TreeNode::Leaf { value: 2.0, n_samples: 2 }),
            },
        };
        let json = serde_json::to_value(&t).unwrap();
        assert_eq!(json["kind"], "split");
        assert_eq!(json["left"]["kind"], "leaf");
        let back: Tree = serde_json::from_value(json).unwrap();
        assert_eq!(back, t);
    }
}
