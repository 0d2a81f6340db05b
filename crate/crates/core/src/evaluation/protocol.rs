//! Expanding-window evaluation of the classifier zoo per match stratum.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, confidence_histogram, rank_algorithms, ConfidenceBin, MetricsReport};
use super::windows::{plan_windows_from, TailPolicy, Window};
use crate::error::{Error, Result};
use crate::features::{refit_pca, FeatureVector};
use crate::kelly::MatchType;
use crate::models::{
    default_grid, feature_eliminate, feature_columns, fit, fit_on, random_search, Algorithm, ClassifierSpec,
    EliminationConfig, ParamGrid, ParamValue, PredictionOutcome, TrainedModel,
};

/// A subset of matches evaluated on its own: one Kelly type, or all matches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stratum {
    Type(MatchType),
    All,
}

impl Stratum {
    pub const ALL: [Stratum; 4] = [
        Stratum::Type(MatchType::Type1),
        Stratum::Type(MatchType::Type2),
        Stratum::Type(MatchType::Type3),
        Stratum::All,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Stratum::Type(t) => t.label(),
            Stratum::All => "All",
        }
    }

    pub fn contains(self, t: MatchType) -> bool {
        match self {
            Stratum::Type(s) => s == t,
            Stratum::All => true,
        }
    }
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Stratum {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(Stratum::All);
        }
        s.parse().map(Stratum::Type)
    }
}

impl Serialize for Stratum {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Stratum {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolConfig {
    /// Rows per test span; validation spans have the same length.
    pub test_size: usize,
    /// Hyperparameter draws per algorithm and window.
    pub n_draws: usize,
    pub search: bool,
    pub eliminate: bool,
    pub elimination: EliminationConfig,
    /// Seasons of history used for training, counting the validation season.
    pub training_seasons: usize,
    /// Zero-based position (in order of appearance) of the first season
    /// whose matches are predicted.
    pub first_test_season: usize,
    pub tail: TailPolicy,
    pub algorithms: Vec<Algorithm>,
    pub strata: Vec<Stratum>,
    pub seed: u64,
    /// Keep fitted models in the results (for export).
    pub keep_models: bool,
    /// Fixed hyperparameters per algorithm, applied before any search.
    pub base_params: BTreeMap<Algorithm, BTreeMap<String, ParamValue>>,
    /// Search-grid entries per algorithm; each key replaces the default
    /// grid's entry of the same name.
    pub grids: BTreeMap<Algorithm, ParamGrid>,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            test_size: 25,
            n_draws: 25,
            search: true,
            eliminate: true,
            elimination: EliminationConfig::default(),
            training_seasons: 2,
            first_test_season: 1,
            tail: TailPolicy::Separate,
            algorithms: Algorithm::ALL.to_vec(),
            strata: Stratum::ALL.to_vec(),
            seed: 42,
            keep_models: false,
            base_params: BTreeMap::new(),
            grids: BTreeMap::new(),
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if !(20..=30).contains(&self.test_size) {
            return Err(Error::Config(format!("test_size {} outside 20..=30", self.test_size)));
        }
        if self.n_draws == 0 || self.training_seasons == 0 {
            return Err(Error::Config("n_draws and training_seasons must be positive".into()));
        }
        if self.algorithms.is_empty() || self.strata.is_empty() {
            return Err(Error::Config("algorithms and strata must be non-empty".into()));
        }
        for alg in Algorithm::ALL {
            let base = self.base_spec(alg, 0);
            base.validate()?;
            for (name, values) in self.grids.get(&alg).into_iter().flatten() {
                if values.is_empty() {
                    return Err(Error::Config(format!("empty grid for {alg} `{name}`")));
                }
                for v in values {
                    base.clone().with(name, v.clone()).validate()?;
                }
            }
        }
        Ok(())
    }

    /// Spec of `algorithm` with the configured fixed hyperparameters.
    pub fn base_spec(&self, algorithm: Algorithm, seed: u64) -> ClassifierSpec {
        let mut spec = ClassifierSpec::new(algorithm, seed);
        if let Some(params) = self.base_params.get(&algorithm) {
            spec.hyperparameters.extend(params.clone());
        }
        spec
    }

    /// Search grid with the configured overrides applied.
    pub fn grid(&self, algorithm: Algorithm, n_train: usize, n_features: usize) -> ParamGrid {
        let mut grid = default_grid(algorithm, n_train, n_features);
        if let Some(over) = self.grids.get(&algorithm) {
            grid.extend(over.clone());
        }
        if let Some(fixed) = self.base_params.get(&algorithm) {
            grid.retain(|k, _| !fixed.contains_key(k) || self.grids.get(&algorithm).is_some_and(|g| g.contains_key(k)));
        }
        grid
    }
}

/// One algorithm's result on one window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmWindow {
    pub spec: ClassifierSpec,
    pub features: Vec<String>,
    pub validation_accuracy: Option<f64>,
    pub outcomes: Vec<PredictionOutcome>,
    pub metrics: MetricsReport,
    #[serde(skip)]
    pub model: Option<TrainedModel>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowResult {
    pub window: Window,
    pub train_rows: usize,
    pub results: BTreeMap<Algorithm, AlgorithmWindow>,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    /// Metrics over every test prediction of the algorithm in the stratum.
    pub metrics: MetricsReport,
    /// Mean per-window rank over windows where every algorithm produced
    /// predictions.
    pub mean_rank: Option<f64>,
    pub windows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratumResult {
    pub stratum: Stratum,
    pub rows: usize,
    pub windows: Vec<WindowResult>,
    pub summaries: Vec<AlgorithmSummary>,
    /// Highest pooled accuracy among non-baseline algorithms.
    pub best: Option<Algorithm>,
    /// Confidence distribution of the best algorithm's predictions.
    pub histogram: Vec<ConfidenceBin>,
    pub failures: Vec<String>,
}

impl StratumResult {
    pub fn summary(&self, algorithm: Algorithm) -> Option<&AlgorithmSummary> {
        self.summaries.iter().find(|s| s.algorithm == algorithm)
    }

    /// All test predictions of `algorithm`, in window order.
    pub fn outcomes(&self, algorithm: Algorithm) -> Vec<PredictionOutcome> {
        self.windows
            .iter()
            .filter_map(|w| w.results.get(&algorithm))
            .flat_map(|r| r.outcomes.iter().cloned())
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProtocolResults {
    pub strata: Vec<StratumResult>,
}

impl ProtocolResults {
    pub fn stratum(&self, s: Stratum) -> Option<&StratumResult> {
        self.strata.iter().find(|r| r.stratum == s)
    }
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(mix(seed), |acc, p| mix(acc ^ p.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

/// Runs the expanding-window protocol.
///
/// `types[i]` is the Kelly type of `rows[i]`; rows must be chronological.
/// For each stratum, windows tile the matches of the test seasons. Tuned
/// algorithms search hyperparameters and prune features on the validation
/// span; ensembles and baselines train on training plus validation. The
/// compressed PCA features are refit on each window's training rows.
pub fn run_protocol(rows: &[FeatureVector], types: &[MatchType], cfg: &ProtocolConfig) -> Result<ProtocolResults> {
    cfg.validate()?;
    if rows.len() != types.len() {
        return Err(Error::Protocol(format!(
            "{} feature rows but {} match types",
            rows.len(),
            types.len()
        )));
    }
    let mut ordinal_of: BTreeMap<&str, usize> = BTreeMap::new();
    let mut ordinals = Vec::with_capacity(rows.len());
    for r in rows {
        let next = ordinal_of.len();
        ordinals.push(*ordinal_of.entry(r.key.season.as_str()).or_insert(next));
    }

    let mut strata = Vec::new();
    for (si, &stratum) in cfg.strata.iter().enumerate() {
        let picked: Vec<usize> = (0..rows.len()).filter(|&i| stratum.contains(types[i])).collect();
        let seq: Vec<FeatureVector> = picked.iter().map(|&i| rows[i].clone()).collect();
        let seasons: Vec<usize> = picked.iter().map(|&i| ordinals[i]).collect();
        let mut result = StratumResult {
            stratum,
            rows: seq.len(),
            windows: Vec::new(),
            summaries: Vec::new(),
            best: None,
            histogram: Vec::new(),
            failures: Vec::new(),
        };
        let plan = seasons
            .iter()
            .position(|&s| s >= cfg.first_test_season)
            .ok_or_else(|| Error::Protocol("no rows in the test seasons".into()))
            .and_then(|start| plan_windows_from(seq.len(), start, cfg.test_size, true, cfg.tail));
        let plan = match plan {
            Ok(p) => p,
            Err(e) => {
                log::warn!("{stratum}: {e}");
                result.failures.push(e.to_string());
                strata.push(result);
                continue;
            }
        };
        log::info!("{stratum}: {} rows, {} windows", seq.len(), plan.windows.len());
        result.windows = plan
            .windows
            .par_iter()
            .map(|w| run_window(&seq, &seasons, w, cfg, si as u64))
            .collect();
        summarize(&mut result, &cfg.algorithms)?;
        strata.push(result);
    }
    Ok(ProtocolResults { strata })
}

fn training_indices(w: &Window, seasons: &[usize], horizon: usize) -> Vec<usize> {
    let anchor = if w.validation.is_empty() { w.test.start } else { w.validation.start };
    let lo = seasons[anchor].saturating_sub(horizon.saturating_sub(1));
    let recent: Vec<usize> = w.train.clone().filter(|&i| seasons[i] >= lo).collect();
    if recent.len() >= 10 {
        recent
    } else {
        w.train.clone().collect()
    }
}

fn run_window(seq: &[FeatureVector], seasons: &[usize], w: &Window, cfg: &ProtocolConfig, stratum: u64) -> WindowResult {
    let train_idx = training_indices(w, seasons, cfg.training_seasons);
    let take = |idx: &mut dyn Iterator<Item = usize>| -> Vec<FeatureVector> { idx.map(|i| seq[i].clone()).collect() };

    let mut train = take(&mut train_idx.iter().copied());
    let mut validation = take(&mut w.validation.clone());
    let mut test = take(&mut w.test.clone());
    let mut merged: Vec<FeatureVector> = train.iter().chain(&validation).cloned().collect();
    let mut merged_test = test.clone();

    let mut out = WindowResult {
        window: w.clone(),
        train_rows: train.len(),
        results: BTreeMap::new(),
        failures: Vec::new(),
    };
    if let Err(e) = refit_pca(&mut train, &mut [&mut validation, &mut test])
        .and_then(|_| refit_pca(&mut merged, &mut [&mut merged_test]))
    {
        out.failures.push(format!("window {}: {e}", w.index));
        return out;
    }

    let mut order: Vec<Algorithm> = cfg.algorithms.clone();
    order.sort_by_key(|a| (a.is_ensemble(), *a));
    for alg in order {
        let seed = derive_seed(cfg.seed, &[stratum, w.index as u64, alg as u64]);
        let run = if alg.uses_validation() {
            tuned(alg, seed, &train, &validation, &test, cfg)
        } else {
            let mut spec = cfg.base_spec(alg, seed);
            if alg.is_ensemble() {
                spec.members = Algorithm::MEMBERS
                    .iter()
                    .map(|m| {
                        out.results
                            .get(m)
                            .map(|r| ClassifierSpec { seed, ..r.spec.clone() })
                            .unwrap_or_else(|| cfg.base_spec(*m, seed))
                    })
                    .collect();
            }
            fit(&spec, &merged).and_then(|model| finish(model, None, &merged_test, cfg))
        };
        match run {
            Ok(r) => {
                out.results.insert(alg, r);
            }
            Err(e) => {
                log::warn!("window {} {alg}: {e}", w.index);
                out.failures.push(format!("window {} {alg}: {e}", w.index));
            }
        }
    }
    out
}

fn tuned(
    alg: Algorithm,
    seed: u64,
    train: &[FeatureVector],
    validation: &[FeatureVector],
    test: &[FeatureVector],
    cfg: &ProtocolConfig,
) -> Result<AlgorithmWindow> {
    let base = cfg.base_spec(alg, seed);
    let spec = if cfg.search {
        let grid = cfg.grid(alg, train.len(), feature_columns(train).len());
        random_search(&base, &grid, cfg.n_draws, train, validation, seed)?.best
    } else {
        base
    };
    let (model, acc) = if cfg.eliminate {
        let elim = EliminationConfig { seed, ..cfg.elimination };
        let (model, steps) = feature_eliminate(&spec, train, validation, &elim)?;
        let acc = steps.iter().map(|s| s.validation_accuracy).fold(f64::NEG_INFINITY, f64::max);
        (model, acc)
    } else {
        let model = fit_on(&spec, train, &feature_columns(train))?;
        let acc = model.accuracy(validation)?;
        (model, acc)
    };
    finish(model, Some(acc), test, cfg)
}

fn finish(model: TrainedModel, validation_accuracy: Option<f64>, test: &[FeatureVector], cfg: &ProtocolConfig) -> Result<AlgorithmWindow> {
    let outcomes = model.predict_rows(test)?;
    Ok(AlgorithmWindow {
        spec: model.spec.clone(),
        features: model.features.clone(),
        validation_accuracy,
        metrics: compute_metrics(&outcomes),
        outcomes,
        model: cfg.keep_models.then_some(model),
    })
}

fn summarize(result: &mut StratumResult, algorithms: &[Algorithm]) -> Result<()> {
    let complete: Vec<&WindowResult> = result
        .windows
        .iter()
        .filter(|w| algorithms.iter().all(|a| w.results.contains_key(a)))
        .collect();
    let scores: BTreeMap<Algorithm, Vec<f64>> = algorithms
        .iter()
        .map(|a| (*a, complete.iter().map(|w| w.results[a].metrics.accuracy).collect()))
        .collect();
    let ranks = if complete.is_empty() { BTreeMap::new() } else { rank_algorithms(&scores)? };
    for w in &result.windows {
        result.failures.extend(w.failures.iter().cloned());
    }
    for &a in algorithms {
        let outcomes = result.outcomes(a);
        if outcomes.is_empty() {
            continue;
        }
        result.summaries.push(AlgorithmSummary {
            algorithm: a,
            metrics: compute_metrics(&outcomes),
            mean_rank: ranks.get(&a).copied(),
            windows: result.windows.iter().filter(|w| w.results.contains_key(&a)).count(),
        });
    }
    result.best = result
        .summaries
        .iter()
        .filter(|s| !s.algorithm.is_baseline())
        .fold(None::<&AlgorithmSummary>, |best, s| match best {
            Some(b) if b.metrics.accuracy >= s.metrics.accuracy => Some(b),
            _ => Some(s),
        })
        .map(|s| s.algorithm);
    if let Some(best) = result.best {
        result.histogram = confidence_histogram(&result.outcomes(best));
    }
    Ok(())
}
