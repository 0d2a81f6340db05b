//! Chance-level reference classifiers that ignore the features.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ingest::MatchKey;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub(crate) struct BaselineModel {
    distribution: [f64; 3],
    seed: u64,
}

impl BaselineModel {
    pub fn uniform(seed: u64) -> Self {
        Self {
            distribution: [1.0 / 3.0; 3],
            seed,
        }
    }

    /// Follows the training label frequencies.
    pub fn stratified(seed: u64, y: &[usize]) -> Self {
        let mut d = [0.0; 3];
        for &c in y {
            d[c] += 1.0;
        }
        let n = y.len().max(1) as f64;
        Self {
            distribution: d.map(|v| v / n),
            seed,
        }
    }

    /// One-hot on a class drawn from the distribution. The draw depends only
    /// on the seed and the match, so it is reproducible row by row.
    pub fn proba(&self, key: &MatchKey) -> [f64; 3] {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ key.digest());
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = self.distribution.iter().rposition(|p| *p > 0.0).unwrap_or(2);
        for (c, p) in self.distribution.iter().enumerate() {
            acc += p;
            if u < acc {
                pick = c;
                break;
            }
        }
        let mut out = [0.0; 3];
        out[pick] = 1.0;
        out
    }
}
