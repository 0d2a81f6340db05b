//! Decision trees and bagged random forests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, presort, Classification, Criterion, Tree, TreeParams};
use super::{leaf_triple, ClassifierSpec};
use crate::error::{Error, Result};

/// Depth used when `max_depth` is not set.
const UNBOUNDED_DEPTH: i64 = 64;

fn criterion(spec: &ClassifierSpec) -> Result<Criterion> {
    match spec.text("criterion", "gini")?.as_str() {
        "gini" => Ok(Criterion::Gini),
        "entropy" => Ok(Criterion::Entropy),
        other => Err(Error::Spec(format!("criterion `{other}` is not gini or entropy"))),
    }
}

fn tree_params(spec: &ClassifierSpec, n_features: usize, default_max_features: &str) -> Result<TreeParams> {
    Ok(TreeParams {
        max_depth: spec.positive("max_depth", UNBOUNDED_DEPTH as usize)?,
        min_samples_split: spec.positive("min_samples_split", 2)?.max(2),
        min_samples_leaf: spec.positive("min_samples_leaf", 1)?,
        max_features: spec.max_features(n_features, default_max_features)?,
    })
}

/// Per-tree generator: the spec seed on stream `index`.
fn tree_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub(crate) fn fit_tree(spec: &ClassifierSpec, x: &[Vec<f64>], y: &[usize], n_features: usize) -> Result<Tree> {
    let params = tree_params(spec, n_features, "all")?;
    let obj = Classification { y, criterion: criterion(spec)? };
    Ok(grow(x, presort(x), &obj, &params, &mut tree_rng(spec.seed, 0)))
}

/// Draws `n` rows with replacement. Copies of a row sit next to each other,
/// so the presorted order of the originals yields the sample's order
/// without re-sorting.
fn bootstrap_sample(
    x: &[Vec<f64>],
    y: &[usize],
    sorted: &[Vec<usize>],
    rng: &mut ChaCha8Rng,
) -> (Vec<Vec<f64>>, Vec<usize>, Vec<Vec<usize>>) {
    let n = x.len();
    let mut copies = vec![0usize; n];
    for _ in 0..n {
        copies[rng.random_range(0..n)] += 1;
    }
    let mut first = vec![0usize; n];
    let (mut xb, mut yb) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for r in 0..n {
        first[r] = xb.len();
        for _ in 0..copies[r] {
            xb.push(x[r].clone());
            yb.push(y[r]);
        }
    }
    let columns = sorted
        .iter()
        .map(|col| col.iter().flat_map(|&r| first[r]..first[r] + copies[r]).collect())
        .collect();
    (xb, yb, columns)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub(crate) struct ForestModel {
    trees: Vec<Tree>,
}

impl ForestModel {
    pub fn fit(spec: &ClassifierSpec, x: &[Vec<f64>], y: &[usize]) -> Result<Self> {
        let n_features = x.first().map_or(0, Vec::len);
        let params = tree_params(spec, n_features, "sqrt")?;
        let crit = criterion(spec)?;
        let n_trees = spec.positive("n_estimators", 100)?;
        let bootstrap = spec.flag("bootstrap", true)?;
        let sorted = presort(x);
        let trees = (0..n_trees)
            .into_par_iter()
            .map(|i| {
                let mut rng = tree_rng(spec.seed, i);
                if bootstrap {
                    let (xb, yb, columns) = bootstrap_sample(x, y, &sorted, &mut rng);
                    let obj = Classification { y: &yb, criterion: crit };
                    grow(&xb, columns, &obj, &params, &mut rng)
                } else {
                    let obj = Classification { y, criterion: crit };
                    grow(x, sorted.clone(), &obj, &params, &mut rng)
                }
            })
            .collect();
        Ok(Self { trees })
    }

    pub fn proba(&self, row: &[f64]) -> [f64; 3] {
        let mut acc = [0.0; 3];
        for t in &self.trees {
            let p = leaf_triple(t.predict(row));
            for c in 0..3 {
                acc[c] += p[c];
            }
        }
        acc.map(|v| v / self.trees.len() as f64)
    }
}
