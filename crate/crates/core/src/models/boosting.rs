//! Multiclass gradient boosting with second-order (Newton) trees.
//!
//! Each round fits one regression tree per class to the softmax gradient
//! and hessian. The round's step is halved until the training deviance does
//! not increase, so the recorded loss curve is monotone.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{grow, presort, restrict, Newton, Tree, TreeParams};
use super::{Algorithm, ClassifierSpec};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct BoostParams {
    pub learning_rate: f64,
    pub n_estimators: usize,
    pub subsample: f64,
    pub lambda: f64,
    pub tree: TreeParams,
    pub seed: u64,
}

impl BoostParams {
    pub fn from_spec(spec: &ClassifierSpec, n_features: usize) -> Result<Self> {
        if spec.algorithm == Algorithm::BoostedDeep {
            return Ok(Self {
                learning_rate: spec.float("learning_rate", 0.03)?,
                n_estimators: spec.positive("iterations", 50)?,
                subsample: 1.0,
                lambda: spec.float("l2_leaf_reg", 3.0)?,
                tree: TreeParams {
                    max_depth: spec.positive("depth", 6)?,
                    min_samples_split: 2,
                    min_samples_leaf: 1,
                    max_features: n_features,
                },
                seed: spec.seed,
            });
        }
        let subsample = spec.float("subsample", 1.0)?;
        if !(subsample > 0.0 && subsample <= 1.0) {
            return Err(Error::Spec("subsample must lie in (0, 1]".into()));
        }
        Ok(Self {
            learning_rate: spec.float("learning_rate", 0.1)?,
            n_estimators: spec.positive("n_estimators", 100)?,
            subsample,
            lambda: spec.float("l2_regularization", 1.0)?,
            tree: TreeParams {
                max_depth: spec.positive("max_depth", 3)?,
                min_samples_split: spec.positive("min_samples_split", 2)?.max(2),
                min_samples_leaf: spec.positive("min_samples_leaf", 1)?,
                max_features: spec.max_features(n_features, "all")?,
            },
            seed: spec.seed,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Round {
    step: f64,
    trees: Vec<Tree>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostingModel {
    base: [f64; 3],
    rounds: Vec<Round>,
    /// Mean training deviance before the first round and after each round.
    pub training_loss: Vec<f64>,
}

fn softmax(z: &[f64; 3]) -> [f64; 3] {
    let m = z[0].max(z[1]).max(z[2]);
    let e = z.map(|v| (v - m).exp());
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}

fn deviance(scores: &[[f64; 3]], y: &[usize]) -> f64 {
    let total: f64 = scores
        .iter()
        .zip(y)
        .map(|(z, &c)| {
            let m = z[0].max(z[1]).max(z[2]);
            let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            lse - z[c]
        })
        .sum();
    total / y.len().max(1) as f64
}

impl BoostingModel {
    pub(crate) fn fit(p: &BoostParams, x: &[Vec<f64>], y: &[usize]) -> Result<Self> {
        let n = x.len();
        let mut counts = [1.0; 3];
        for &c in y {
            counts[c] += 1.0;
        }
        let total: f64 = counts.iter().sum();
        let base = counts.map(|c| (c / total).ln());
        let mut scores = vec![base; n];
        let mut loss = deviance(&scores, y);
        let mut training_loss = vec![loss];
        let sorted = presort(x);
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        let draw = ((p.subsample * n as f64).ceil() as usize).clamp(1, n);
        let mut rounds = Vec::with_capacity(p.n_estimators);
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n];

        for _ in 0..p.n_estimators {
            let columns = if draw < n {
                let mut keep = vec![false; n];
                for i in sample(&mut rng, n, draw) {
                    keep[i] = true;
                }
                restrict(&sorted, &keep)
            } else {
                sorted.clone()
            };
            let probs: Vec<[f64; 3]> = scores.iter().map(softmax).collect();
            let mut trees = Vec::with_capacity(3);
            for c in 0..3 {
                for i in 0..n {
                    let target = if y[i] == c { 1.0 } else { 0.0 };
                    grad[i] = probs[i][c] - target;
                    hess[i] = (probs[i][c] * (1.0 - probs[i][c])).max(1e-6);
                }
                let obj = Newton { grad: &grad, hess: &hess, lambda: p.lambda };
                trees.push(grow(x, columns.clone(), &obj, &p.tree, &mut rng));
            }
            let deltas: Vec<[f64; 3]> = x
                .iter()
                .map(|row| [trees[0].predict(row)[0], trees[1].predict(row)[0], trees[2].predict(row)[0]])
                .collect();

            let mut step = p.learning_rate;
            let mut accepted = None;
            for _ in 0..40 {
                let trial: Vec<[f64; 3]> = scores
                    .iter()
                    .zip(&deltas)
                    .map(|(s, d)| [s[0] + step * d[0], s[1] + step * d[1], s[2] + step * d[2]])
                    .collect();
                let l = deviance(&trial, y);
                if l <= loss {
                    accepted = Some((trial, l));
                    break;
                }
                step *= 0.5;
            }
            let Some((trial, l)) = accepted else {
                log::debug!("boosting stopped after {} rounds: no descent step", rounds.len());
                break;
            };
            let converged = loss - l < 1e-12;
            scores = trial;
            loss = l;
            training_loss.push(loss);
            rounds.push(Round { step, trees });
            if converged {
                break;
            }
        }
        if !loss.is_finite() {
            return Err(Error::DegenerateFit("boosting diverged".into()));
        }
        Ok(Self {
            base,
            rounds,
            training_loss,
        })
    }

    pub(crate) fn proba(&self, row: &[f64]) -> [f64; 3] {
        let mut z = self.base;
        for r in &self.rounds {
            for (c, t) in r.trees.iter().enumerate() {
                z[c] += r.step * t.predict(row)[0];
            }
        }
        softmax(&z)
    }

    pub fn rounds(&self) -> usize {
        self.rounds.len()
    }
}
