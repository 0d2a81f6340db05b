//! Exact-split binary trees grown on presorted columns.

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(Vec<f64>),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// A fitted tree. Leaves hold a class distribution (classification) or a
/// single weight (boosting).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// What a split optimizes. Gain is `score(left) + score(right) - score(parent)`.
pub(crate) trait Objective {
    type Stats: Copy;
    fn empty(&self) -> Self::Stats;
    fn add(&self, s: &mut Self::Stats, row: usize);
    fn minus(&self, a: &Self::Stats, b: &Self::Stats) -> Self::Stats;
    fn score(&self, s: &Self::Stats) -> f64;
    fn leaf(&self, s: &Self::Stats) -> Vec<f64>;
    fn is_pure(&self, s: &Self::Stats) -> bool;
    /// Splits must gain strictly more than this.
    fn min_gain(&self) -> f64;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Criterion {
    Gini,
    Entropy,
}

pub(crate) struct Classification<'a> {
    pub y: &'a [usize],
    pub criterion: Criterion,
}

impl Objective for Classification<'_> {
    type Stats = [f64; 3];

    fn empty(&self) -> [f64; 3] {
        [0.0; 3]
    }

    fn add(&self, s: &mut [f64; 3], row: usize) {
        s[self.y[row]] += 1.0;
    }

    fn minus(&self, a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
        [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
    }

    fn score(&self, s: &[f64; 3]) -> f64 {
        let n: f64 = s.iter().sum();
        if n <= 0.0 {
            return 0.0;
        }
        match self.criterion {
            Criterion::Gini => s.iter().map(|c| c * c).sum::<f64>() / n - n,
            Criterion::Entropy => s
                .iter()
                .filter(|c| **c > 0.0)
                .map(|c| c * (c / n).ln())
                .sum(),
        }
    }

    fn leaf(&self, s: &[f64; 3]) -> Vec<f64> {
        let n: f64 = s.iter().sum();
        s.iter().map(|c| c / n).collect()
    }

    fn is_pure(&self, s: &[f64; 3]) -> bool {
        s.iter().filter(|c| **c > 0.0).count() <= 1
    }

    fn min_gain(&self) -> f64 {
        // Zero-gain splits are allowed so impure nodes can keep splitting
        // (e.g. XOR-like layouts), as exact CART does.
        -1e-12
    }
}

/// Second-order boosting objective for one class column.
pub(crate) struct Newton<'a> {
    pub grad: &'a [f64],
    pub hess: &'a [f64],
    pub lambda: f64,
}

impl Objective for Newton<'_> {
    type Stats = [f64; 2];

    fn empty(&self) -> [f64; 2] {
        [0.0; 2]
    }

    fn add(&self, s: &mut [f64; 2], row: usize) {
        s[0] += self.grad[row];
        s[1] += self.hess[row];
    }

    fn minus(&self, a: &[f64; 2], b: &[f64; 2]) -> [f64; 2] {
        [a[0] - b[0], a[1] - b[1]]
    }

    fn score(&self, s: &[f64; 2]) -> f64 {
        s[0] * s[0] / (s[1] + self.lambda)
    }

    fn leaf(&self, s: &[f64; 2]) -> Vec<f64> {
        vec![-s[0] / (s[1] + self.lambda)]
    }

    fn is_pure(&self, _: &[f64; 2]) -> bool {
        false
    }

    fn min_gain(&self) -> f64 {
        1e-12
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Candidate features per node; all features when ≥ the column count.
    pub max_features: usize,
}

/// Row indices sorted by each column's value (ties by row index).
pub(crate) fn presort(x: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let f = x.first().map_or(0, Vec::len);
    (0..f)
        .map(|j| {
            let mut idx: Vec<usize> = (0..x.len()).collect();
            idx.sort_by(|&a, &b| x[a][j].total_cmp(&x[b][j]).then(a.cmp(&b)));
            idx
        })
        .collect()
}

/// Restricts presorted columns to rows where `keep[row]` is set.
pub(crate) fn restrict(sorted: &[Vec<usize>], keep: &[bool]) -> Vec<Vec<usize>> {
    sorted
        .iter()
        .map(|col| col.iter().copied().filter(|&r| keep[r]).collect())
        .collect()
}

struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Grows a tree over the rows listed in `columns` (each column's rows in
/// ascending value order). `rng` is consumed only for feature subsampling.
pub(crate) fn grow<O: Objective>(
    x: &[Vec<f64>],
    columns: Vec<Vec<usize>>,
    obj: &O,
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
) -> Tree {
    let mut nodes = Vec::new();
    let mut mask = vec![false; x.len()];
    let f = x.first().map_or(0, Vec::len);
    let by_column: Vec<Vec<f64>> = (0..f).map(|j| x.iter().map(|r| r[j]).collect()).collect();
    build(&by_column, columns, obj, params, rng, 0, &mut nodes, &mut mask);
    Tree { nodes }
}

#[allow(clippy::too_many_arguments)]
fn build<O: Objective>(
    // Column-major copy of the feature matrix.
    x: &[Vec<f64>],
    columns: Vec<Vec<usize>>,
    obj: &O,
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
    depth: usize,
    nodes: &mut Vec<Node>,
    mask: &mut [bool],
) -> usize {
    let here = nodes.len();
    let rows = &columns[0];
    let n = rows.len();
    let mut total = obj.empty();
    for &r in rows {
        obj.add(&mut total, r);
    }
    nodes.push(Node::Leaf(obj.leaf(&total)));
    if depth >= params.max_depth
        || n < params.min_samples_split
        || n < 2 * params.min_samples_leaf
        || obj.is_pure(&total)
    {
        return here;
    }

    let f = columns.len();
    let candidates: Vec<usize> = if params.max_features >= f {
        (0..f).collect()
    } else {
        let mut c = sample(rng, f, params.max_features).into_vec();
        c.sort_unstable();
        c
    };
    let parent = obj.score(&total);
    let mut best: Option<Best> = None;
    for &j in &candidates {
        let col = &columns[j];
        let values = &x[j];
        let mut left = obj.empty();
        let mut hi = values[col[0]];
        for k in 0..n - 1 {
            obj.add(&mut left, col[k]);
            let lo = hi;
            hi = values[col[k + 1]];
            let n_left = k + 1;
            if lo >= hi || n_left < params.min_samples_leaf || n - n_left < params.min_samples_leaf {
                continue;
            }
            let right = obj.minus(&total, &left);
            let gain = obj.score(&left) + obj.score(&right) - parent;
            let better = match &best {
                None => gain > obj.min_gain(),
                Some(b) => gain > b.gain + 1e-12,
            };
            if better {
                let mid = lo + (hi - lo) / 2.0;
                best = Some(Best {
                    gain,
                    feature: j,
                    threshold: if mid < hi { mid } else { lo },
                });
            }
        }
    }
    let Some(best) = best else {
        return here;
    };

    let values = &x[best.feature];
    for &r in rows {
        mask[r] = values[r] <= best.threshold;
    }
    let (mut left_cols, mut right_cols) = (Vec::with_capacity(f), Vec::with_capacity(f));
    for col in columns {
        let (l, r): (Vec<usize>, Vec<usize>) = col.into_iter().partition(|&r| mask[r]);
        left_cols.push(l);
        right_cols.push(r);
    }
    let left = build(x, left_cols, obj, params, rng, depth + 1, nodes, mask);
    let right = build(x, right_cols, obj, params, rng, depth + 1, nodes, mask);
    nodes[here] = Node::Split {
        feature: best.feature,
        threshold: best.threshold,
        left,
        right,
    };
    here
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn params(depth: usize) -> TreeParams {
        TreeParams {
            max_depth: depth,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: usize::MAX,
        }
    }

    #[test]
    fn stump_finds_the_separating_threshold() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<usize> = (0..10).map(|i| usize::from(i >= 4) * 2).collect();
        let obj = Classification { y: &y, criterion: Criterion::Gini };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = grow(&x, presort(&x), &obj, &params(1), &mut rng);
        assert_eq!(t.leaves(), 2);
        assert_eq!(t.predict(&[3.4]), &[1.0, 0.0, 0.0]);
        assert_eq!(t.predict(&[3.6]), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn xor_layout_still_splits_to_purity() {
        let x = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let y = vec![0, 2, 2, 0];
        let obj = Classification { y: &y, criterion: Criterion::Entropy };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = grow(&x, presort(&x), &obj, &params(4), &mut rng);
        for (row, label) in x.iter().zip(&y) {
            assert_eq!(t.predict(row)[*label], 1.0);
        }
    }

    #[test]
    fn newton_leaf_is_regularized_mean_step() {
        let x: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        let grad = [1.0, 1.0, -1.0, -1.0];
        let hess = [0.25; 4];
        let obj = Newton { grad: &grad, hess: &hess, lambda: 1.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = grow(&x, presort(&x), &obj, &params(1), &mut rng);
        // Left leaf: G = 2, H = 0.5 → -2 / 1.5.
        assert!((t.predict(&[0.0])[0] + 2.0 / 1.5).abs() < 1e-12);
        assert!((t.predict(&[3.0])[0] - 2.0 / 1.5).abs() < 1e-12);
    }
}
