//! k-nearest neighbours on standardized features.

use serde::{Deserialize, Serialize};

use super::matrix::Standardizer;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub(crate) struct KnnModel {
    k: usize,
    scaler: Standardizer,
    x: Vec<Vec<f64>>,
    y: Vec<usize>,
}

impl KnnModel {
    pub fn fit(k: usize, x: &[Vec<f64>], y: &[usize]) -> Self {
        let scaler = Standardizer::fit(x);
        Self {
            k: k.min(x.len()).max(1),
            x: scaler.apply_all(x),
            scaler,
            y: y.to_vec(),
        }
    }

    /// Share of each class among the `k` closest training rows; equal
    /// distances resolve to the earlier training row.
    pub fn proba(&self, row: &[f64]) -> [f64; 3] {
        let q = self.scaler.apply(row);
        let mut dist: Vec<(f64, usize)> = self
            .x
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
            .collect();
        let k = self.k;
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, cmp);
        }
        let mut votes = [0.0; 3];
        for (_, i) in &dist[..k] {
            votes[self.y[*i]] += 1.0;
        }
        votes.map(|v| v / k as f64)
    }
}
