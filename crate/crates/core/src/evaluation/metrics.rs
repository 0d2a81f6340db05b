use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::PredictionOutcome;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    /// Per-class precision weighted by each class's share of actual results.
    pub precision: f64,
    /// Unweighted mean of per-class recall; absent classes count as zero.
    pub recall: f64,
    pub f1: f64,
    /// Rows are actual results, columns predictions (home, draw, away).
    pub confusion: [[u32; 3]; 3],
    pub count: usize,
    /// Classes with no actual occurrence in the sample.
    pub absent_classes: Vec<usize>,
}

/// Accuracy, weighted precision, macro recall and F1 of `outcomes`.
///
/// # Panics
/// When `outcomes` is empty.
pub fn compute_metrics(outcomes: &[PredictionOutcome]) -> MetricsReport {
    assert!(!outcomes.is_empty(), "metrics need at least one prediction");
    let mut confusion = [[0u32; 3]; 3];
    for o in outcomes {
        confusion[o.actual.index()][o.predicted.index()] += 1;
    }
    metrics_from_confusion(confusion)
}

pub fn metrics_from_confusion(confusion: [[u32; 3]; 3]) -> MetricsReport {
    let total: u32 = confusion.iter().flatten().sum();
    let n = f64::from(total.max(1));
    let correct: u32 = (0..3).map(|i| confusion[i][i]).sum();
    let support: Vec<u32> = (0..3).map(|i| confusion[i].iter().sum()).collect();
    let predicted: Vec<u32> = (0..3).map(|j| (0..3).map(|i| confusion[i][j]).sum()).collect();

    let mut precision = 0.0;
    let mut recall = 0.0;
    let mut absent_classes = Vec::new();
    for c in 0..3 {
        let tp = f64::from(confusion[c][c]);
        if predicted[c] > 0 {
            precision += tp / f64::from(predicted[c]) * f64::from(support[c]) / n;
        }
        if support[c] > 0 {
            recall += tp / f64::from(support[c]);
        } else {
            absent_classes.push(c);
        }
    }
    if !absent_classes.is_empty() {
        log::debug!("classes {absent_classes:?} absent from sample; recall counts them as 0");
    }
    recall /= 3.0;
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    MetricsReport {
        accuracy: f64::from(correct) / n,
        precision,
        recall,
        f1,
        confusion,
        count: total as usize,
        absent_classes,
    }
}

/// Mean rank of each key across windows; rank 1 is the highest accuracy and
/// tied scores share the mean of their positions.
pub fn rank_algorithms<K: Ord + Clone>(scores: &BTreeMap<K, Vec<f64>>) -> Result<BTreeMap<K, f64>> {
    let Some(windows) = scores.values().next().map(Vec::len) else {
        return Ok(BTreeMap::new());
    };
    if scores.values().any(|v| v.len() != windows) {
        return Err(Error::Protocol("algorithms were scored on different windows".into()));
    }
    let keys: Vec<&K> = scores.keys().collect();
    let mut totals = vec![0.0; keys.len()];
    for w in 0..windows {
        let vals: Vec<f64> = keys.iter().map(|k| scores[*k][w]).collect();
        for (i, v) in vals.iter().enumerate() {
            let better = vals.iter().filter(|o| *o > v).count() as f64;
            let equal = vals.iter().filter(|o| *o == v).count() as f64;
            totals[i] += better + (equal + 1.0) / 2.0;
        }
    }
    let denom = windows.max(1) as f64;
    Ok(keys
        .into_iter()
        .zip(totals)
        .map(|(k, t)| (k.clone(), t / denom))
        .collect())
}

/// Bin edges of the confidence histogram; the last bin is closed.
pub const CONFIDENCE_BINS: [(f64, f64); 5] = [(0.0, 0.4), (0.4, 0.5), (0.5, 0.6), (0.6, 0.7), (0.7, 1.0)];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub correct: usize,
}

impl ConfidenceBin {
    pub fn accuracy(&self) -> Option<f64> {
        (self.count > 0).then(|| self.correct as f64 / self.count as f64)
    }
}

/// Predictions grouped by the confidence of the predicted class.
pub fn confidence_histogram(outcomes: &[PredictionOutcome]) -> Vec<ConfidenceBin> {
    let mut bins: Vec<ConfidenceBin> = CONFIDENCE_BINS
        .iter()
        .map(|&(lower, upper)| ConfidenceBin { lower, upper, count: 0, correct: 0 })
        .collect();
    for o in outcomes {
        let c = o.max_confidence();
        let i = CONFIDENCE_BINS
            .iter()
            .position(|&(_, hi)| c < hi)
            .unwrap_or(CONFIDENCE_BINS.len() - 1);
        bins[i].count += 1;
        bins[i].correct += usize::from(o.correct());
    }
    bins
}
