//! Voting and stacking over single-model members.

use serde::{Deserialize, Serialize};

use super::logistic::{LogisticModel, LogisticParams};
use super::{argmax, check_labels, normalize, Algorithm, ClassifierSpec, Fitted};
use crate::error::Result;
use crate::ingest::MatchKey;

/// Folds used to build out-of-fold member predictions for stacking.
const STACKING_FOLDS: usize = 3;

/// Member specs of an ensemble; defaults to one of each single learner.
pub(crate) fn member_specs(spec: &ClassifierSpec) -> Vec<ClassifierSpec> {
    if !spec.members.is_empty() {
        return spec.members.clone();
    }
    Algorithm::MEMBERS
        .iter()
        .map(|&a| ClassifierSpec::new(a, spec.seed))
        .collect()
}

fn fit_members(specs: &[ClassifierSpec], x: &[Vec<f64>], y: &[usize]) -> Result<Vec<Fitted>> {
    specs.iter().map(|s| Fitted::fit(s, x, y)).collect()
}

fn member_triples(members: &[Fitted], x: &[f64], key: &MatchKey) -> Vec<[f64; 3]> {
    members.iter().map(|m| normalize(m.proba(x, key))).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub(crate) struct VotingModel {
    hard: bool,
    members: Vec<Fitted>,
}

impl VotingModel {
    pub fn fit(spec: &ClassifierSpec, x: &[Vec<f64>], y: &[usize]) -> Result<Self> {
        Ok(Self {
            hard: spec.algorithm == Algorithm::VotingHard,
            members: fit_members(&member_specs(spec), x, y)?,
        })
    }

    pub fn proba(&self, x: &[f64], key: &MatchKey) -> [f64; 3] {
        let triples = member_triples(&self.members, x, key);
        if self.hard {
            hard_vote(&triples)
        } else {
            soft_vote(&triples)
        }
    }
}

/// Mean of the member triples.
pub(crate) fn soft_vote(triples: &[[f64; 3]]) -> [f64; 3] {
    let mut acc = [0.0; 3];
    for t in triples {
        for c in 0..3 {
            acc[c] += t[c];
        }
    }
    acc.map(|v| v / triples.len().max(1) as f64)
}

/// One-hot on the majority of member argmaxes. Tied majorities are settled
/// by the soft vote restricted to the tied classes.
pub(crate) fn hard_vote(triples: &[[f64; 3]]) -> [f64; 3] {
    let mut votes = [0usize; 3];
    for t in triples {
        votes[argmax(t)] += 1;
    }
    let top = *votes.iter().max().unwrap_or(&0);
    let tied: Vec<usize> = (0..3).filter(|&c| votes[c] == top).collect();
    let winner = if tied.len() == 1 {
        tied[0]
    } else {
        let soft = soft_vote(triples);
        let mut masked = [f64::NEG_INFINITY; 3];
        for &c in &tied {
            masked[c] = soft[c];
        }
        argmax(&masked)
    };
    let mut out = [0.0; 3];
    out[winner] = 1.0;
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub(crate) struct StackingModel {
    members: Vec<Fitted>,
    meta: LogisticModel,
}

fn stacked_row(triples: &[[f64; 3]]) -> Vec<f64> {
    triples.iter().flat_map(|t| t.iter().copied()).collect()
}

impl StackingModel {
    /// Members predict each contiguous fold after training on the others;
    /// a logistic regression learns from those out-of-fold triples, and the
    /// members are then refit on every row.
    pub fn fit(spec: &ClassifierSpec, x: &[Vec<f64>], y: &[usize]) -> Result<Self> {
        let specs = member_specs(spec);
        let n = x.len();
        let blank = MatchKey::default();
        let mut stacked = vec![Vec::new(); n];
        for k in 0..STACKING_FOLDS {
            let (lo, hi) = (k * n / STACKING_FOLDS, (k + 1) * n / STACKING_FOLDS);
            let tx: Vec<Vec<f64>> = x[..lo].iter().chain(&x[hi..]).cloned().collect();
            let ty: Vec<usize> = y[..lo].iter().chain(&y[hi..]).copied().collect();
            check_labels(&ty)?;
            let members = fit_members(&specs, &tx, &ty)?;
            for i in lo..hi {
                stacked[i] = stacked_row(&member_triples(&members, &x[i], &blank));
            }
        }
        let meta = LogisticModel::fit(&LogisticParams::default(), &stacked, y)?;
        Ok(Self {
            members: fit_members(&specs, x, y)?,
            meta,
        })
    }

    pub fn proba(&self, x: &[f64], key: &MatchKey) -> [f64; 3] {
        self.meta.proba(&stacked_row(&member_triples(&self.members, x, key)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_vote_is_the_mean() {
        let v = soft_vote(&[[0.6, 0.2, 0.2], [0.2, 0.6, 0.2]]);
        for (a, b) in v.iter().zip([0.4, 0.4, 0.2]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(argmax(&v), 0);
    }

    #[test]
    fn hard_vote_majority_and_tie_fallback() {
        let majority = hard_vote(&[[0.1, 0.8, 0.1], [0.2, 0.5, 0.3], [0.9, 0.05, 0.05]]);
        assert_eq!(majority, [0.0, 1.0, 0.0]);
        // One vote each for home and away; away has more soft mass.
        let tie = hard_vote(&[[0.5, 0.1, 0.4], [0.05, 0.0, 0.95]]);
        assert_eq!(tie, [0.0, 0.0, 1.0]);
    }
}
