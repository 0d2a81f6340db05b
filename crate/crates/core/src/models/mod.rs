//! Classifier zoo behind one contract: fit on labeled feature rows, emit a
//! `(home, draw, away)` confidence triple per row.

mod baseline;
mod boosting;
mod ensemble;
mod forest;
mod knn;
mod logistic;
mod matrix;
mod search;
mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureVector, FEATURE_NAMES};
use crate::ingest::{MatchKey, MatchResult};

pub use boosting::BoostingModel;
pub use logistic::{logistic_objective, LogisticModel};
pub use matrix::Standardizer;
pub use search::{
    config_at, default_grid, feature_eliminate, grid_size, permutation_importance, random_search, EliminationConfig,
    EliminationStep, ParamGrid, SearchOutcome,
};
pub use tree::Tree;

/// Serialization format version of [`TrainedModel`] files.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    LogisticRegression,
    DecisionTree,
    RandomForest,
    GradientBoosting,
    /// Gradient boosting driven by the slow-learning, many-iteration grid.
    BoostedDeep,
    Knn,
    VotingSoft,
    VotingHard,
    Stacking,
    BaselineUniform,
    BaselineStratified,
}

impl Algorithm {
    pub const ALL: [Algorithm; 11] = [
        Algorithm::LogisticRegression,
        Algorithm::DecisionTree,
        Algorithm::RandomForest,
        Algorithm::GradientBoosting,
        Algorithm::BoostedDeep,
        Algorithm::Knn,
        Algorithm::VotingSoft,
        Algorithm::VotingHard,
        Algorithm::Stacking,
        Algorithm::BaselineUniform,
        Algorithm::BaselineStratified,
    ];

    /// The single-model learners that ensembles draw members from.
    pub const MEMBERS: [Algorithm; 5] = [
        Algorithm::LogisticRegression,
        Algorithm::RandomForest,
        Algorithm::GradientBoosting,
        Algorithm::Knn,
        Algorithm::DecisionTree,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::LogisticRegression => "logistic-regression",
            Algorithm::DecisionTree => "decision-tree",
            Algorithm::RandomForest => "random-forest",
            Algorithm::GradientBoosting => "gradient-boosting",
            Algorithm::BoostedDeep => "boosted-deep",
            Algorithm::Knn => "knn",
            Algorithm::VotingSoft => "voting-soft",
            Algorithm::VotingHard => "voting-hard",
            Algorithm::Stacking => "stacking",
            Algorithm::BaselineUniform => "baseline-uniform",
            Algorithm::BaselineStratified => "baseline-stratified",
        }
    }

    pub fn is_baseline(self) -> bool {
        matches!(self, Algorithm::BaselineUniform | Algorithm::BaselineStratified)
    }

    pub fn is_ensemble(self) -> bool {
        matches!(self, Algorithm::VotingSoft | Algorithm::VotingHard | Algorithm::Stacking)
    }

    /// Whether the algorithm is tuned and pruned on a validation span.
    /// Ensembles and baselines train on the union of both spans instead.
    pub fn uses_validation(self) -> bool {
        !self.is_ensemble() && !self.is_baseline()
    }

    fn allowed_params(self) -> &'static [&'static str] {
        const TREE: &[&str] =
            &["criterion", "max_depth", "min_samples_split", "min_samples_leaf", "max_features"];
        match self {
            Algorithm::LogisticRegression => &["penalty", "class_weight", "C", "max_iter"],
            Algorithm::DecisionTree => TREE,
            Algorithm::RandomForest => &[
                "criterion",
                "max_depth",
                "min_samples_split",
                "min_samples_leaf",
                "max_features",
                "n_estimators",
                "bootstrap",
            ],
            Algorithm::GradientBoosting => &[
                "learning_rate",
                "subsample",
                "max_depth",
                "min_samples_split",
                "min_samples_leaf",
                "max_features",
                "n_estimators",
                "l2_regularization",
            ],
            Algorithm::BoostedDeep => &["learning_rate", "iterations", "depth", "l2_leaf_reg"],
            Algorithm::Knn => &["n_neighbors"],
            _ => &[],
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().to_ascii_lowercase().replace('_', "-");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.label() == wanted)
            .ok_or_else(|| Error::Argument(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Bool(b) => write!(f, "{b}"),
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Float(x) => write!(f, "{x}"),
            ParamValue::Text(s) => f.write_str(s),
        }
    }
}

impl From<i64> for ParamValue {
    fn from(v: i64) -> Self {
        ParamValue::Int(v)
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Float(v)
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        ParamValue::Text(v.to_string())
    }
}

impl From<bool> for ParamValue {
    fn from(v: bool) -> Self {
        ParamValue::Bool(v)
    }
}

/// What to train: an algorithm, its hyperparameters and a seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub hyperparameters: BTreeMap<String, ParamValue>,
    #[serde(default)]
    pub seed: u64,
    /// Member specs for voting and stacking; empty means default members.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub members: Vec<ClassifierSpec>,
}

impl ClassifierSpec {
    pub fn new(algorithm: Algorithm, seed: u64) -> Self {
        Self {
            algorithm,
            hyperparameters: BTreeMap::new(),
            seed,
            members: Vec::new(),
        }
    }

    pub fn with(mut self, name: &str, value: impl Into<ParamValue>) -> Self {
        self.hyperparameters.insert(name.to_string(), value.into());
        self
    }

    fn bad(&self, name: &str, why: &str) -> Error {
        Error::Spec(format!("{}: `{name}` {why}", self.algorithm))
    }

    pub(crate) fn int(&self, name: &str, default: i64) -> Result<i64> {
        match self.hyperparameters.get(name) {
            None => Ok(default),
            Some(ParamValue::Int(i)) => Ok(*i),
            Some(ParamValue::Float(x)) if x.fract() == 0.0 => Ok(*x as i64),
            Some(_) => Err(self.bad(name, "must be an integer")),
        }
    }

    pub(crate) fn positive(&self, name: &str, default: usize) -> Result<usize> {
        let v = self.int(name, default as i64)?;
        if v < 1 {
            return Err(self.bad(name, "must be at least 1"));
        }
        Ok(v as usize)
    }

    pub(crate) fn float(&self, name: &str, default: f64) -> Result<f64> {
        match self.hyperparameters.get(name) {
            None => Ok(default),
            Some(ParamValue::Int(i)) => Ok(*i as f64),
            Some(ParamValue::Float(x)) if x.is_finite() => Ok(*x),
            Some(_) => Err(self.bad(name, "must be a finite number")),
        }
    }

    pub(crate) fn text(&self, name: &str, default: &str) -> Result<String> {
        match self.hyperparameters.get(name) {
            None => Ok(default.to_string()),
            Some(ParamValue::Text(s)) => Ok(s.trim().to_ascii_lowercase()),
            Some(_) => Err(self.bad(name, "must be text")),
        }
    }

    pub(crate) fn flag(&self, name: &str, default: bool) -> Result<bool> {
        match self.hyperparameters.get(name) {
            None => Ok(default),
            Some(ParamValue::Bool(b)) => Ok(*b),
            Some(ParamValue::Text(s)) => match s.as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(self.bad(name, "must be true or false")),
            },
            Some(_) => Err(self.bad(name, "must be true or false")),
        }
    }

    /// `max_features` resolved against `n_features`: a count, or one of
    /// `sqrt`, `half`, `all`.
    pub(crate) fn max_features(&self, n_features: usize, default: &str) -> Result<usize> {
        let resolved = match self.hyperparameters.get("max_features") {
            Some(ParamValue::Int(i)) if *i >= 1 => *i as usize,
            Some(ParamValue::Int(_)) => return Err(self.bad("max_features", "must be at least 1")),
            Some(ParamValue::Text(s)) => named_max_features(s, n_features)
                .ok_or_else(|| self.bad("max_features", "must be a count, sqrt, half or all"))?,
            None => named_max_features(default, n_features).expect("known default"),
            Some(_) => return Err(self.bad("max_features", "must be a count or a name")),
        };
        Ok(resolved.clamp(1, n_features.max(1)))
    }

    /// Checks names and ranges of every hyperparameter, recursively.
    pub fn validate(&self) -> Result<()> {
        let allowed = self.algorithm.allowed_params();
        if let Some(name) = self.hyperparameters.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(self.bad(name, "is not a hyperparameter of this algorithm"));
        }
        if !self.members.is_empty() && !self.algorithm.is_ensemble() {
            return Err(Error::Spec(format!("{} takes no members", self.algorithm)));
        }
        let unit = |name: &str, v: f64, open_low: bool| -> Result<()> {
            let ok = if open_low { v > 0.0 && v <= 1.0 } else { (0.0..=1.0).contains(&v) };
            if ok {
                Ok(())
            } else {
                Err(self.bad(name, "must lie in (0, 1]"))
            }
        };
        match self.algorithm {
            Algorithm::LogisticRegression => {
                logistic::LogisticParams::from_spec(self)?;
            }
            Algorithm::DecisionTree | Algorithm::RandomForest => {
                let crit = self.text("criterion", "gini")?;
                if crit != "gini" && crit != "entropy" {
                    return Err(self.bad("criterion", "must be gini or entropy"));
                }
                for name in ["max_depth", "min_samples_leaf", "n_estimators"] {
                    self.positive(name, 1)?;
                }
                if self.positive("min_samples_split", 2)? < 2 {
                    return Err(self.bad("min_samples_split", "must be at least 2"));
                }
                self.max_features(1, "all")?;
                self.flag("bootstrap", true)?;
            }
            Algorithm::GradientBoosting => {
                let lr = self.float("learning_rate", 0.1)?;
                if lr <= 0.0 {
                    return Err(self.bad("learning_rate", "must be positive"));
                }
                unit("subsample", self.float("subsample", 1.0)?, true)?;
                if self.float("l2_regularization", 1.0)? < 0.0 {
                    return Err(self.bad("l2_regularization", "must be non-negative"));
                }
                for name in ["max_depth", "min_samples_leaf", "n_estimators"] {
                    self.positive(name, 1)?;
                }
                if self.positive("min_samples_split", 2)? < 2 {
                    return Err(self.bad("min_samples_split", "must be at least 2"));
                }
                self.max_features(1, "all")?;
            }
            Algorithm::BoostedDeep => {
                if self.float("learning_rate", 0.03)? <= 0.0 {
                    return Err(self.bad("learning_rate", "must be positive"));
                }
                self.positive("iterations", 1)?;
                self.positive("depth", 1)?;
                if self.float("l2_leaf_reg", 3.0)? < 0.0 {
                    return Err(self.bad("l2_leaf_reg", "must be non-negative"));
                }
            }
            Algorithm::Knn => {
                self.positive("n_neighbors", 5)?;
            }
            Algorithm::VotingSoft | Algorithm::VotingHard | Algorithm::Stacking => {
                for m in &self.members {
                    if !m.algorithm.uses_validation() {
                        return Err(Error::Spec(format!(
                            "{} cannot be a member of {}",
                            m.algorithm, self.algorithm
                        )));
                    }
                    m.validate()?;
                }
            }
            Algorithm::BaselineUniform | Algorithm::BaselineStratified => {}
        }
        Ok(())
    }

    /// Stable short identifier, e.g. `random-forest[max_depth=5,n_estimators=100]`.
    pub fn id(&self) -> String {
        if self.hyperparameters.is_empty() {
            return self.algorithm.label().to_string();
        }
        let params: Vec<String> =
            self.hyperparameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{}[{}]", self.algorithm, params.join(","))
    }
}

fn named_max_features(name: &str, n: usize) -> Option<usize> {
    let n = n.max(1);
    match name.trim().to_ascii_lowercase().as_str() {
        "sqrt" => Some((n as f64).sqrt().ceil() as usize),
        "half" => Some(n.div_ceil(2)),
        "all" => Some(n),
        _ => None,
    }
}

/// Fitted parameters of each algorithm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub(crate) enum Fitted {
    Logistic(LogisticModel),
    Tree(Tree),
    Forest(forest::ForestModel),
    Boosting(BoostingModel),
    Knn(knn::KnnModel),
    Voting(ensemble::VotingModel),
    Stacking(ensemble::StackingModel),
    Baseline(baseline::BaselineModel),
}

impl Fitted {
    fn fit(spec: &ClassifierSpec, x: &[Vec<f64>], y: &[usize]) -> Result<Fitted> {
        let n_features = x.first().map_or(0, Vec::len);
        Ok(match spec.algorithm {
            Algorithm::LogisticRegression => Fitted::Logistic(LogisticModel::fit(
                &logistic::LogisticParams::from_spec(spec)?,
                x,
                y,
            )?),
            Algorithm::DecisionTree => Fitted::Tree(forest::fit_tree(spec, x, y, n_features)?),
            Algorithm::RandomForest => Fitted::Forest(forest::ForestModel::fit(spec, x, y)?),
            Algorithm::GradientBoosting | Algorithm::BoostedDeep => {
                Fitted::Boosting(BoostingModel::fit(&boosting::BoostParams::from_spec(spec, n_features)?, x, y)?)
            }
            Algorithm::Knn => Fitted::Knn(knn::KnnModel::fit(spec.positive("n_neighbors", 5)?, x, y)),
            Algorithm::VotingSoft | Algorithm::VotingHard => {
                Fitted::Voting(ensemble::VotingModel::fit(spec, x, y)?)
            }
            Algorithm::Stacking => Fitted::Stacking(ensemble::StackingModel::fit(spec, x, y)?),
            Algorithm::BaselineUniform => Fitted::Baseline(baseline::BaselineModel::uniform(spec.seed)),
            Algorithm::BaselineStratified => {
                Fitted::Baseline(baseline::BaselineModel::stratified(spec.seed, y))
            }
        })
    }

    fn proba(&self, x: &[f64], key: &MatchKey) -> [f64; 3] {
        match self {
            Fitted::Logistic(m) => m.proba(x),
            Fitted::Tree(t) => leaf_triple(t.predict(x)),
            Fitted::Forest(m) => m.proba(x),
            Fitted::Boosting(m) => m.proba(x),
            Fitted::Knn(m) => m.proba(x),
            Fitted::Voting(m) => m.proba(x, key),
            Fitted::Stacking(m) => m.proba(x, key),
            Fitted::Baseline(m) => m.proba(key),
        }
    }
}

fn leaf_triple(v: &[f64]) -> [f64; 3] {
    normalize([v[0], v[1], v[2]])
}

/// Rescales a non-negative triple to sum to one; all-zero becomes uniform.
pub(crate) fn normalize(t: [f64; 3]) -> [f64; 3] {
    let t = t.map(|v| if v.is_finite() { v.max(0.0) } else { 0.0 });
    let s: f64 = t.iter().sum();
    if s > 0.0 {
        t.map(|v| v / s)
    } else {
        [1.0 / 3.0; 3]
    }
}

/// Index of the largest confidence; ties resolve home, draw, away.
pub fn argmax(t: &[f64; 3]) -> usize {
    let mut best = 0;
    for i in 1..3 {
        if t[i] > t[best] {
            best = i;
        }
    }
    best
}

/// A fitted classifier plus the feature columns it reads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub spec: ClassifierSpec,
    pub features: Vec<String>,
    #[serde(default)]
    pub window: Option<String>,
    params: Fitted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionOutcome {
    pub key: MatchKey,
    pub confidences: [f64; 3],
    pub predicted: MatchResult,
    pub actual: MatchResult,
    pub model: String,
}

impl PredictionOutcome {
    pub fn correct(&self) -> bool {
        self.predicted == self.actual
    }

    pub fn max_confidence(&self) -> f64 {
        self.confidences[self.predicted.index()]
    }
}

/// Catalogue features present in `rows`, in catalogue order, followed by
/// any extra columns in name order.
pub fn feature_columns(rows: &[FeatureVector]) -> Vec<String> {
    let Some(first) = rows.first() else {
        return Vec::new();
    };
    let mut cols: Vec<String> = FEATURE_NAMES
        .iter()
        .filter(|n| first.values.contains_key(**n))
        .map(|n| n.to_string())
        .collect();
    cols.extend(
        first
            .values
            .keys()
            .filter(|k| !FEATURE_NAMES.contains(&k.as_str()))
            .cloned(),
    );
    cols
}

/// Fits `spec` on every feature column of `rows`.
pub fn fit(spec: &ClassifierSpec, rows: &[FeatureVector]) -> Result<TrainedModel> {
    fit_on(spec, rows, &feature_columns(rows))
}

/// Fits `spec` on the named feature columns.
pub fn fit_on(spec: &ClassifierSpec, rows: &[FeatureVector], features: &[String]) -> Result<TrainedModel> {
    spec.validate()?;
    if features.is_empty() {
        return Err(Error::Spec("no features selected".into()));
    }
    if rows.len() < 10 {
        return Err(Error::DegenerateFit(format!("{} training rows, need at least 10", rows.len())));
    }
    let design = matrix::Design::new(rows, features)?;
    check_labels(&design.y)?;
    let params = Fitted::fit(spec, &design.x, &design.y)?;
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        spec: spec.clone(),
        features: features.to_vec(),
        window: None,
        params,
    })
}

pub(crate) fn check_labels(y: &[usize]) -> Result<()> {
    let first = y.first().copied();
    if y.iter().all(|&c| Some(c) == first) {
        return Err(Error::DegenerateFit("training labels contain a single class".into()));
    }
    Ok(())
}

/// Predicts one row.
pub fn predict(model: &TrainedModel, row: &FeatureVector) -> Result<PredictionOutcome> {
    Ok(model.predict_rows(std::slice::from_ref(row))?.remove(0))
}

impl TrainedModel {
    pub fn id(&self) -> String {
        self.spec.id()
    }

    pub fn confidences(&self, rows: &[FeatureVector]) -> Result<Vec<[f64; 3]>> {
        let design = matrix::Design::new(rows, &self.features)?;
        Ok(self.confidences_x(&design.x, &design.keys))
    }

    pub(crate) fn confidences_x(&self, x: &[Vec<f64>], keys: &[MatchKey]) -> Vec<[f64; 3]> {
        x.iter()
            .zip(keys)
            .map(|(r, k)| normalize(self.params.proba(r, k)))
            .collect()
    }

    pub fn predict_rows(&self, rows: &[FeatureVector]) -> Result<Vec<PredictionOutcome>> {
        let id = self.id();
        let conf = self.confidences(rows)?;
        Ok(rows
            .iter()
            .zip(conf)
            .map(|(r, c)| PredictionOutcome {
                key: r.key.clone(),
                confidences: c,
                predicted: MatchResult::from_index(argmax(&c)).expect("index < 3"),
                actual: r.label,
                model: id.clone(),
            })
            .collect())
    }

    pub fn accuracy(&self, rows: &[FeatureVector]) -> Result<f64> {
        let preds = self.predict_rows(rows)?;
        Ok(accuracy(&preds))
    }

    /// Fitted boosting model, when the algorithm is gradient boosting.
    pub fn boosting(&self) -> Option<&BoostingModel> {
        match &self.params {
            Fitted::Boosting(m) => Some(m),
            _ => None,
        }
    }

    pub fn logistic(&self) -> Option<&LogisticModel> {
        match &self.params {
            Fitted::Logistic(m) => Some(m),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: TrainedModel = serde_json::from_str(s)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                m.format_version
            )));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

pub(crate) fn accuracy_of(conf: &[[f64; 3]], y: &[usize]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    conf.iter().zip(y).filter(|(c, &l)| argmax(c) == l).count() as f64 / y.len() as f64
}

/// Share of correct predictions; 0 for an empty slice.
pub fn accuracy(outcomes: &[PredictionOutcome]) -> f64 {
    if outcomes.is_empty() {
        return 0.0;
    }
    outcomes.iter().filter(|o| o.correct()).count() as f64 / outcomes.len() as f64
}

/// Writes predictions as CSV: key, three confidences, predicted, actual, model.
pub fn write_predictions_csv<W: Write>(outcomes: &[PredictionOutcome], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "season", "date", "home", "away", "p_home", "p_draw", "p_away", "predicted", "actual", "model",
    ])?;
    for o in outcomes {
        w.write_record([
            o.key.season.clone(),
            o.key.date.to_string(),
            o.key.home.clone(),
            o.key.away.clone(),
            o.confidences[0].to_string(),
            o.confidences[1].to_string(),
            o.confidences[2].to_string(),
            o.predicted.code().to_string(),
            o.actual.code().to_string(),
            o.model.clone(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<predictions csv>", e))
}
