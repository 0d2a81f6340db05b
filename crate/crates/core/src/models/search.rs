//! Hyperparameter search and attribution-driven feature elimination, both
//! scored on a held-out chronological validation span.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matrix::Design;
use super::{accuracy_of, feature_columns, fit_on, Algorithm, ClassifierSpec, ParamValue, TrainedModel};
use crate::error::{Error, Result};
use crate::features::FeatureVector;

pub type ParamGrid = BTreeMap<String, Vec<ParamValue>>;

fn ints(v: &[i64]) -> Vec<ParamValue> {
    v.iter().map(|&i| ParamValue::Int(i)).collect()
}

fn floats(v: &[f64]) -> Vec<ParamValue> {
    v.iter().map(|&x| ParamValue::Float(x)).collect()
}

fn texts(v: &[&str]) -> Vec<ParamValue> {
    v.iter().map(|&s| ParamValue::Text(s.into())).collect()
}

/// Search grid of `algorithm` for a training span of `n_train` rows and
/// `n_features` columns. Sample-size and feature-count dependent entries
/// use odd neighbour counts up to `√n` and feature counts `⌈√f⌉, ⌈f/2⌉, f`.
pub fn default_grid(algorithm: Algorithm, n_train: usize, n_features: usize) -> ParamGrid {
    let f = n_features.max(1);
    let mut feats = vec![(f as f64).sqrt().ceil() as i64, f.div_ceil(2) as i64, f as i64];
    feats.dedup();
    let mut g = ParamGrid::new();
    let mut put = |k: &str, v: Vec<ParamValue>| {
        g.insert(k.to_string(), v);
    };
    match algorithm {
        Algorithm::LogisticRegression => {
            put("penalty", texts(&["l1", "l2"]));
            put("class_weight", texts(&["1:2:1", "3:3:4", "4:3:3"]));
        }
        Algorithm::DecisionTree => {
            put("criterion", texts(&["gini", "entropy"]));
            put("max_depth", ints(&[2, 4, 6, 8, 10, 12]));
        }
        Algorithm::RandomForest => {
            put("min_samples_leaf", ints(&[2, 5, 8]));
            put("max_features", ints(&feats));
            put("max_depth", ints(&[2, 5, 7, 10]));
        }
        Algorithm::GradientBoosting => {
            put("min_samples_leaf", ints(&[2, 5, 8]));
            put("min_samples_split", ints(&[3, 5, 7, 9]));
            put("max_features", ints(&feats));
            put("max_depth", ints(&[2, 5, 7, 10]));
            put("learning_rate", floats(&[0.1, 1.0, 2.0]));
            put("subsample", floats(&[0.5, 0.8, 1.0]));
        }
        Algorithm::BoostedDeep => {
            put("learning_rate", floats(&[0.01, 0.02, 0.03, 0.04]));
            put("iterations", ints(&[10, 20, 30, 40, 50, 60, 70, 80, 90]));
            put("depth", ints(&[4, 5, 6, 7, 8, 9, 10]));
        }
        Algorithm::Knn => {
            let top = ((n_train as f64).sqrt().floor() as i64).max(3);
            put("n_neighbors", ints(&(3..=top).step_by(2).collect::<Vec<_>>()));
        }
        _ => {}
    }
    g
}

/// Number of configurations in `grid`; errors on an empty value list.
pub fn grid_size(grid: &ParamGrid) -> Result<usize> {
    let mut size = 1usize;
    for (name, values) in grid {
        if values.is_empty() {
            return Err(Error::Spec(format!("grid entry `{name}` has no values")));
        }
        size = size.saturating_mul(values.len());
    }
    Ok(size)
}

/// The `index`-th configuration in mixed-radix order (last name fastest).
pub fn config_at(grid: &ParamGrid, mut index: usize) -> BTreeMap<String, ParamValue> {
    let mut out = BTreeMap::new();
    for (name, values) in grid.iter().rev() {
        out.insert(name.clone(), values[index % values.len()].clone());
        index /= values.len();
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub best: ClassifierSpec,
    pub validation_accuracy: f64,
    /// Every draw in draw order with its validation accuracy.
    pub trials: Vec<(ClassifierSpec, f64)>,
}

/// Draws `n_draws` distinct configurations from `grid` (all of them when the
/// grid is no larger), fits each on `train` and keeps the one with the best
/// validation accuracy; ties go to the earlier draw.
pub fn random_search(
    base: &ClassifierSpec,
    grid: &ParamGrid,
    n_draws: usize,
    train: &[FeatureVector],
    validation: &[FeatureVector],
    seed: u64,
) -> Result<SearchOutcome> {
    if n_draws == 0 {
        return Err(Error::Spec("n_draws must be at least 1".into()));
    }
    if validation.is_empty() {
        return Err(Error::Protocol("random search needs a validation span".into()));
    }
    let size = grid_size(grid)?;
    let picks: Vec<usize> = if n_draws >= size {
        (0..size).collect()
    } else {
        sample(&mut ChaCha8Rng::seed_from_u64(seed), size, n_draws).into_vec()
    };
    let features = feature_columns(train);
    let trials: Vec<(ClassifierSpec, f64)> = picks
        .into_par_iter()
        .map(|i| {
            let mut spec = base.clone();
            spec.hyperparameters.extend(config_at(grid, i));
            let model = fit_on(&spec, train, &features)?;
            Ok((spec, model.accuracy(validation)?))
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, t) in trials.iter().enumerate() {
        if t.1 > trials[best].1 {
            best = i;
        }
    }
    Ok(SearchOutcome {
        best: trials[best].0.clone(),
        validation_accuracy: trials[best].1,
        trials,
    })
}

/// Mean accuracy drop on `rows` when each of the model's feature columns is
/// shuffled, over `repeats` shuffles. Order follows `model.features`.
pub fn permutation_importance(
    model: &TrainedModel,
    rows: &[FeatureVector],
    repeats: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let design = Design::new(rows, &model.features)?;
    let base = accuracy_of(&model.confidences_x(&design.x, &design.keys), &design.y);
    let repeats = repeats.max(1);
    (0..model.features.len())
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64);
            let mut x = design.x.clone();
            let mut column: Vec<f64> = design.x.iter().map(|r| r[j]).collect();
            let mut drop = 0.0;
            for _ in 0..repeats {
                column.shuffle(&mut rng);
                for (r, v) in x.iter_mut().zip(&column) {
                    r[j] = *v;
                }
                drop += base - accuracy_of(&model.confidences_x(&x, &design.keys), &design.y);
            }
            Ok(drop / repeats as f64)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EliminationConfig {
    /// Shuffles per feature when measuring attribution.
    pub repeats: usize,
    pub seed: u64,
}

impl Default for EliminationConfig {
    fn default() -> Self {
        Self { repeats: 10, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EliminationStep {
    pub features: usize,
    pub validation_accuracy: f64,
    pub dropped: Vec<String>,
}

/// Repeatedly fits `spec`, drops every feature whose permutation attribution
/// on `validation` is not positive, and refits, until nothing is dropped or
/// fewer than two features remain. Returns the step with the best
/// validation accuracy (earliest on ties) and the step log.
///
/// Ensembles and baselines are fitted once on all features.
pub fn feature_eliminate(
    spec: &ClassifierSpec,
    train: &[FeatureVector],
    validation: &[FeatureVector],
    cfg: &EliminationConfig,
) -> Result<(TrainedModel, Vec<EliminationStep>)> {
    if validation.is_empty() {
        return Err(Error::Protocol("feature elimination needs a validation span".into()));
    }
    let mut features = feature_columns(train);
    let mut steps = Vec::new();
    let mut best: Option<(TrainedModel, f64)> = None;
    let prune = spec.algorithm.uses_validation();
    loop {
        let model = fit_on(spec, train, &features)?;
        let acc = model.accuracy(validation)?;
        let stop = !prune || features.len() < 2;
        let dropped: Vec<String> = if stop {
            Vec::new()
        } else {
            let seed = cfg.seed ^ (steps.len() as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
            let imp = permutation_importance(&model, validation, cfg.repeats, seed)?;
            features
                .iter()
                .zip(&imp)
                .filter(|(_, v)| **v <= 0.0)
                .map(|(f, _)| f.clone())
                .collect()
        };
        steps.push(EliminationStep {
            features: features.len(),
            validation_accuracy: acc,
            dropped: dropped.clone(),
        });
        if best.as_ref().is_none_or(|(_, b)| acc > *b) {
            best = Some((model, acc));
        }
        if dropped.is_empty() || dropped.len() == features.len() {
            break;
        }
        features.retain(|f| !dropped.contains(f));
    }
    let (model, _) = best.expect("at least one step");
    Ok((model, steps))
}
