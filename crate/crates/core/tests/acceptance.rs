//! Acceptance gate: prints one verdict per criterion and exits non-zero if
//! any criterion fails. Real-data criteria run only when
//! `KELLY_STRATA_REAL_DATA` lists season CSV files or directories
//! (separated like `PATH`); `KELLY_STRATA_REAL_CONFIG` optionally names a
//! pipeline config whose model and protocol settings are used for them.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use kelly_strata::betting::{blanket_roi, simulate, threshold_sweep, BookSelection, Market, RoiTable, StrategyConfig};
use kelly_strata::evaluation::{run_protocol, ProtocolConfig, ProtocolResults, Stratum};
use kelly_strata::features::{build_features, FeatureConfig, FeatureVector};
use kelly_strata::ingest::{synthesize_league, Bookmaker, MatchKey, MatchRecord, MatchResult, OddsTriple};
use kelly_strata::kelly::{classify_match, f99, kelly_indices, profile_matches, KellyTriple, MatchType};
use kelly_strata::models::{fit, logistic_objective, Algorithm, ClassifierSpec, PredictionOutcome};
use kelly_strata::pipeline::type_counts;
use kelly_strata::ratings::{
    elo_expectation, elo_update, odm_fit, streak, weighted_streak, EloConfig, GoalMatrix, OdmConfig, RatingsConfig,
};
use kelly_strata::{Pipeline, PipelineConfig, Stage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Verdict {
    Pass(String),
    Skip(String),
}

type Check = Result<Verdict, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- 1

fn ratings_invariants() -> Check {
    let cfg = EloConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let mut ratings: Vec<f64> = (0..6).map(|_| rng.random_range(700.0..1300.0)).collect();
        let total: f64 = ratings.iter().sum();
        for _ in 0..20 {
            let h = rng.random_range(0..6);
            let a = (h + rng.random_range(1..6)) % 6;
            let (hg, ag) = (rng.random_range(0..6u32), rng.random_range(0..6u32));
            let (nh, na) = elo_update(ratings[h], ratings[a], MatchResult::from_goals(hg, ag), hg.abs_diff(ag), &cfg)
                .map_err(|e| e.to_string())?;
            worst = worst.max(((nh - ratings[h]) + (na - ratings[a])).abs());
            ratings[h] = nh;
            ratings[a] = na;
        }
        worst = worst.max((ratings.iter().sum::<f64>() - total).abs());
    }
    ensure(worst <= 1e-9, || format!("Elo drift {worst:e}"))?;

    let mut exp_err = 0.0f64;
    for _ in 0..100 {
        let (rh, ra) = (rng.random_range(500.0..1500.0), rng.random_range(500.0..1500.0));
        let oracle = 1.0 / (1.0 + 10f64.powf((ra - rh) / 400.0));
        let (eh, ea) = elo_expectation(rh, ra, &cfg);
        exp_err = exp_err.max((eh - oracle).abs()).max((ea - (1.0 - oracle)).abs());
    }
    ensure(exp_err <= 1e-12, || format!("expectation error {exp_err:e}"))?;

    let mut residual = 0.0f64;
    let mut oracle_gap = 0.0f64;
    let mut fixtures = 0;
    for n in 3..=6 {
        for _ in 0..25 {
            let m = random_goal_matrix(n, &mut rng);
            let fitted = odm_fit(&m, &OdmConfig::default()).map_err(|e| e.to_string())?;
            residual = residual.max(fitted.residual(&m));
            if n <= 4 {
                let grid = odm_grid_oracle(&m);
                for j in 0..n {
                    oracle_gap = oracle_gap.max((grid[j] - fitted.offense[j]).abs());
                }
            }
            fixtures += 1;
        }
    }
    ensure(residual < 1e-8, || format!("ODM residual {residual:e}"))?;
    ensure(oracle_gap <= 1e-4, || format!("ODM differs from grid search by {oracle_gap:e}"))?;
    Ok(Verdict::Pass(format!(
        "Elo drift {worst:.1e}, expectation error {exp_err:.1e}, ODM residual {residual:.1e} over {fixtures} fixtures, grid gap {oracle_gap:.1e}"
    )))
}

fn random_goal_matrix(n: usize, rng: &mut ChaCha8Rng) -> GoalMatrix {
    let goals = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 0.0 } else { f64::from(rng.random_range(1..6u32)) }).collect())
        .collect();
    GoalMatrix::new((0..n).map(|i| format!("t{i}")).collect(), goals).unwrap()
}

/// Offense ratings (summing to `n`) found by coarse-to-fine grid search over
/// the fixed-point residual, independent of the alternating iteration.
fn odm_grid_oracle(m: &GoalMatrix) -> Vec<f64> {
    let n = m.len();
    let a = &m.goals;
    let residual = |o: &[f64]| -> f64 {
        let d: Vec<f64> = (0..n).map(|j| (0..n).map(|i| a[j][i] / o[i]).sum()).collect();
        let mut next: Vec<f64> = (0..n).map(|j| (0..n).map(|i| a[i][j] / d[i]).sum()).collect();
        let s = n as f64 / next.iter().sum::<f64>();
        next.iter_mut().for_each(|x| *x *= s);
        next.iter().zip(o).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    };
    let free = n - 1;
    let mut centre = vec![1.0; free];
    let mut half = n as f64;
    let steps = if free == 2 { 20i64 } else { 8 };
    let complete = |c: &[f64]| -> Option<Vec<f64>> {
        let last = n as f64 - c.iter().sum::<f64>();
        (last > 0.0 && c.iter().all(|&x| x > 0.0)).then(|| c.iter().copied().chain([last]).collect())
    };
    while half > 1e-7 {
        let mut best = (f64::INFINITY, centre.clone());
        let total = (2 * steps + 1).pow(free as u32);
        for idx in 0..total {
            let mut rest = idx;
            let c: Vec<f64> = (0..free)
                .map(|k| {
                    let step = rest % (2 * steps + 1) - steps;
                    rest /= 2 * steps + 1;
                    centre[k] + half * step as f64 / steps as f64
                })
                .collect();
            if let Some(o) = complete(&c) {
                let r = residual(&o);
                if r < best.0 {
                    best = (r, c);
                }
            }
        }
        centre = best.1;
        half /= 2.0;
    }
    complete(&centre).unwrap()
}

// ---------------------------------------------------------------- 2

fn streak_exhaustion() -> Check {
    let points = [0u8, 1, 3];
    let mut checked = 0;
    for code in 0..729usize {
        let mut c = code;
        let seq: Vec<u8> = (0..6)
            .map(|_| {
                let p = points[c % 3];
                c /= 3;
                p
            })
            .collect();
        let plain: u32 = seq.iter().map(|&p| u32::from(p)).sum();
        let mut weighted = 0u32;
        for (i, &p) in seq.iter().enumerate() {
            weighted += 2 * (i as u32 + 1) * u32::from(p);
        }
        let (s, w) = (streak(&seq, 6), weighted_streak(&seq, 6));
        ensure(s == f64::from(plain) / 18.0, || format!("streak {seq:?}: {s}"))?;
        ensure(w == f64::from(weighted) / 126.0, || format!("weighted streak {seq:?}: {w}"))?;
        checked += 1;
    }
    Ok(Verdict::Pass(format!("{checked} sequences exact")))
}

// ---------------------------------------------------------------- 3

fn kelly_algebra() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let t = |rng: &mut ChaCha8Rng| {
            OddsTriple::new(rng.random_range(1.05..12.0), rng.random_range(1.05..12.0), rng.random_range(1.05..12.0))
        };
        let (book, avg) = (t(&mut rng), t(&mut rng));
        let lambda = rng.random_range(0.5..3.0);
        let base = kelly_indices(&book, &avg);
        let scaled_book = kelly_indices(&book.scaled(lambda), &avg);
        let scaled_avg = kelly_indices(&book, &avg.scaled(lambda));
        for r in MatchResult::ALL {
            worst = worst
                .max(rel(scaled_book.get(r), lambda * base.get(r)))
                .max(rel(scaled_avg.get(r), base.get(r)));
        }
        worst = worst.max(rel(f99(&avg.scaled(lambda)), lambda * f99(&avg)));
    }
    ensure(worst <= 1e-12, || format!("homogeneity error {worst:e}"))?;
    let unit = f99(&OddsTriple::new(2.0, 3.0, 6.0));
    ensure(unit == 1.0, || format!("f99(2, 3, 6) = {unit}"))?;

    let k = |h: f64, d: f64, a: f64| KellyTriple { home: h, draw: d, away: a };
    let board = |ks: &[KellyTriple]| -> BTreeMap<Bookmaker, KellyTriple> { Bookmaker::ALL.into_iter().zip(ks.iter().copied()).collect() };
    let under = k(0.95, 0.97, 0.99);
    let fixtures = [
        (board(&[k(1.02, 0.9, 0.9), k(0.9, 0.9, 1.01), under, under, under, under]), MatchType::Type1),
        (board(&[k(1.05, 1.02, 0.9), under, k(0.99, 1.0, 1.0), under, under, under]), MatchType::Type2),
        (board(&[under, under, k(1.0, 1.0, 1.0), under, under, under]), MatchType::Type3),
        (board(&[k(1.1, 1.1, 1.1); 6]), MatchType::Type1),
    ];
    for (i, (b, want)) in fixtures.iter().enumerate() {
        let got = classify_match(b).map_err(|e| e.to_string())?;
        ensure(got == *want, || format!("fixture {i}: {got} instead of {want}"))?;
    }
    Ok(Verdict::Pass(format!("homogeneity error {worst:.1e}, f99 exact, {} type fixtures", fixtures.len())))
}

// ---------------------------------------------------------------- 4

fn types_of(matches: &[MatchRecord], rows: &[FeatureVector]) -> Vec<MatchType> {
    let profiles = profile_matches(matches, Default::default()).unwrap();
    let by_key: BTreeMap<MatchKey, MatchType> = matches.iter().zip(&profiles).map(|(m, p)| (m.key(), p.match_type)).collect();
    rows.iter().map(|r| by_key[&r.key]).collect()
}

fn window_predictions(matches: &[MatchRecord], cfg: &ProtocolConfig) -> BTreeMap<(Stratum, Algorithm, MatchKey), PredictionOutcome> {
    let rows = build_features(matches, &RatingsConfig::default(), &FeatureConfig::default()).unwrap().rows;
    let types = types_of(matches, &rows);
    let results = run_protocol(&rows, &types, cfg).unwrap();
    let mut out = BTreeMap::new();
    for s in &results.strata {
        for w in &s.windows {
            for (alg, r) in &w.results {
                for o in &r.outcomes {
                    out.insert((s.stratum, *alg, o.key.clone()), o.clone());
                }
            }
        }
    }
    out
}

fn anti_leakage() -> Check {
    let matches = synthesize_league(20, 3, 7).map_err(|e| e.to_string())?;
    let features = |ms: &[MatchRecord]| build_features(ms, &RatingsConfig::default(), &FeatureConfig::default()).unwrap().rows;
    let full = features(&matches);
    let by_key: BTreeMap<&MatchKey, &FeatureVector> = full.iter().map(|r| (&r.key, r)).collect();
    let mut dates: Vec<_> = matches.iter().map(|m| m.round_date).collect();
    dates.dedup();
    let mut cuts = 0;
    for date in dates.iter().step_by(5) {
        let cut: Vec<MatchRecord> = matches.iter().filter(|m| m.round_date <= *date).cloned().collect();
        let rows = features(&cut);
        let expected = full.iter().filter(|r| r.key.date <= *date).count();
        ensure(rows.len() == expected, || format!("{} rows instead of {expected} at {date}", rows.len()))?;
        for r in &rows {
            ensure(by_key.get(&r.key) == Some(&r), || format!("feature row {} changed", r.key))?;
        }
        cuts += 1;
    }

    let cfg = ProtocolConfig {
        n_draws: 3,
        algorithms: vec![
            Algorithm::LogisticRegression,
            Algorithm::DecisionTree,
            Algorithm::Knn,
            Algorithm::VotingSoft,
            Algorithm::BaselineUniform,
            Algorithm::BaselineStratified,
        ],
        ..ProtocolConfig::default()
    };
    let full_preds = window_predictions(&matches, &cfg);
    let mut compared = 0;
    for frac in [3, 6] {
        let cut_date = matches[matches.len() - matches.len() / frac].round_date;
        let cut: Vec<MatchRecord> = matches.iter().filter(|m| m.round_date <= cut_date).cloned().collect();
        let preds = window_predictions(&cut, &cfg);
        ensure(!preds.is_empty(), || format!("no predictions up to {cut_date}"))?;
        for (k, o) in &preds {
            ensure(full_preds.get(k) == Some(o), || format!("prediction for {:?} changed", k))?;
        }
        compared += preds.len();
    }
    Ok(Verdict::Pass(format!("{cuts} feature cuts, {compared} window predictions replayed")))
}

// ---------------------------------------------------------------- real data

struct RealRun {
    matches: Vec<MatchRecord>,
    evaluated: Vec<String>,
    results: ProtocolResults,
    roi: RoiTable,
}

fn real_paths() -> Option<Vec<PathBuf>> {
    let raw = std::env::var_os("KELLY_STRATA_REAL_DATA")?;
    let paths: Vec<PathBuf> = std::env::split_paths(&raw).filter(|p| !p.as_os_str().is_empty()).collect();
    (!paths.is_empty()).then_some(paths)
}

fn seasons_in_order(matches: &[MatchRecord]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    matches.iter().filter(|m| seen.insert(m.season_id.clone())).map(|m| m.season_id.clone()).collect()
}

fn real_run() -> &'static Result<RealRun, String> {
    static RUN: OnceLock<Result<RealRun, String>> = OnceLock::new();
    RUN.get_or_init(|| {
        let paths = real_paths().ok_or("KELLY_STRATA_REAL_DATA is not set")?;
        let mut config = match std::env::var_os("KELLY_STRATA_REAL_CONFIG") {
            Some(p) => PipelineConfig::load(PathBuf::from(p).as_path()).map_err(|e| e.to_string())?,
            None => PipelineConfig::default(),
        };
        config.data.paths = paths;
        config.data.synthetic = None;
        for b in [Algorithm::BaselineUniform, Algorithm::BaselineStratified] {
            if !config.protocol.algorithms.contains(&b) {
                config.protocol.algorithms.push(b);
            }
        }
        config.protocol.strata = Stratum::ALL.to_vec();
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let ingest = Pipeline::new(config.clone(), dir.path()).map_err(|e| e.to_string())?;
        ingest.run_stage(Stage::Ingest).map_err(|e| e.to_string())?;
        let matches = ingest.matches().map_err(|e| e.to_string())?;
        // The first season only warms up the features; the last three are
        // evaluated, everything in between is training history.
        let seasons = seasons_in_order(&matches);
        if seasons.len() < 3 {
            return Err(format!("need at least three seasons, found {}", seasons.len()));
        }
        let feature_seasons = seasons.len() - 1;
        config.protocol.first_test_season = feature_seasons.saturating_sub(3).max(1);
        let evaluated = seasons[config.protocol.first_test_season + 1..].to_vec();
        let pipeline = Pipeline::new(config, dir.path()).map_err(|e| e.to_string())?;
        for stage in [Stage::Featurize, Stage::Kelly, Stage::Train, Stage::Bet] {
            pipeline.run_stage(stage).map_err(|e| e.to_string())?;
        }
        let results = pipeline.results().map_err(|e| e.to_string())?;
        let text = std::fs::read_to_string(dir.path().join("betting/blanket_roi.json")).map_err(|e| e.to_string())?;
        let roi = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        Ok(RealRun { matches, evaluated, results, roi })
    })
}

fn best_accuracy(results: &ProtocolResults, s: Stratum) -> Option<(Algorithm, f64, f64)> {
    let r = results.stratum(s)?;
    let best = r.best?;
    let acc = |a| r.summary(a).map(|x| x.metrics.accuracy);
    let baseline = acc(Algorithm::BaselineUniform)?.max(acc(Algorithm::BaselineStratified)?);
    Some((best, acc(best)?, baseline))
}

fn real_accuracy_shape() -> Check {
    if real_paths().is_none() {
        return Ok(Verdict::Skip("set KELLY_STRATA_REAL_DATA to the season CSVs".into()));
    }
    let run = real_run().as_ref().map_err(Clone::clone)?;
    let mut accs = Vec::new();
    let mut detail = Vec::new();
    for s in Stratum::ALL {
        let (best, acc, baseline) =
            best_accuracy(&run.results, s).ok_or_else(|| format!("{}: no best model", s.label()))?;
        detail.push(format!("{} {} {:.1}% (baseline {:.1}%)", s.label(), best, 100.0 * acc, 100.0 * baseline));
        ensure(acc > baseline, || format!("{}: {:.3} does not beat baseline {:.3}", s.label(), acc, baseline))?;
        accs.push(acc);
    }
    let detail = format!("seasons {}: {}", run.evaluated.join(", "), detail.join("; "));
    ensure(accs[0] > accs[1] && accs[1] > accs[2], || format!("type ordering violated: {detail}"))?;
    ensure(accs[0] >= 0.60, || format!("Type1 below 60%: {detail}"))?;
    ensure(accs[3] >= 0.45, || format!("All below 45%: {detail}"))?;
    Ok(Verdict::Pass(detail))
}

fn real_season_counts() -> Check {
    if real_paths().is_none() {
        return Ok(Verdict::Skip("set KELLY_STRATA_REAL_DATA to the season CSVs".into()));
    }
    let run = real_run().as_ref().map_err(Clone::clone)?;
    let reference: [[f64; 3]; 3] = [[106.0, 81.0, 193.0], [111.0, 87.0, 182.0], [76.0, 124.0, 180.0]];
    let profiles = profile_matches(&run.matches, Default::default()).map_err(|e| e.to_string())?;
    let counts = type_counts(&run.matches, &profiles);
    let seasons = seasons_in_order(&run.matches);
    let last: Vec<&String> = seasons.iter().rev().take(3).rev().collect();
    ensure(last.len() == 3, || "fewer than three seasons".into())?;
    let mut detail = Vec::new();
    for (season, want) in last.iter().zip(&reference) {
        let c = counts[*season];
        let total: usize = c.iter().sum();
        detail.push(format!("{season}: {}/{}/{}", c[0], c[1], c[2]));
        ensure(total == 380, || format!("{season} has {total} matches"))?;
        for t in 0..3 {
            let dev = (c[t] as f64 - want[t]).abs() / want[t];
            ensure(dev <= 0.15, || format!("{season} Type{}: {} vs {} ({:.0}% off)", t + 1, c[t], want[t], 100.0 * dev))?;
        }
    }
    Ok(Verdict::Pass(detail.join(", ")))
}

// ---------------------------------------------------------------- 7

fn betting_arithmetic() -> Check {
    let lg = common::league(20, 3, 7);
    let market = Market::new(&lg.matches, &lg.profiles).map_err(|e| e.to_string())?;
    let (train, test) = common::split_first_season(&lg.rows);
    let model = fit(&ClassifierSpec::new(Algorithm::LogisticRegression, 1), &train).map_err(|e| e.to_string())?;
    let outcomes = model.predict_rows(&test).map_err(|e| e.to_string())?;

    let columns: Vec<(Stratum, Vec<PredictionOutcome>)> = Stratum::ALL.iter().map(|s| (*s, outcomes.clone())).collect();
    let thresholds: Vec<f64> = (0..=20).map(|i| 1.0 / 3.0 + (2.0 / 3.0) * f64::from(i) / 20.0).collect();
    let mut ledgers = 0;
    for book in [BookSelection::BestOdds, BookSelection::Book(Bookmaker::Pinnacle), BookSelection::Book(Bookmaker::Bet365)] {
        let sweep = threshold_sweep(&columns, &market, &thresholds, book).map_err(|e| e.to_string())?;
        for chunk in sweep.chunks(thresholds.len()) {
            for t in chunk {
                let summed: i64 = t.ledger.entries.iter().map(|b| b.profit_units).sum();
                ensure(t.ledger.returned_units - t.ledger.staked_units == summed, || "ledger does not balance".into())?;
                ledgers += 1;
            }
            for pair in chunk.windows(2) {
                let lo: BTreeSet<_> = pair[0].ledger.entries.iter().map(|b| &b.key).collect();
                let hi: BTreeSet<_> = pair[1].ledger.entries.iter().map(|b| &b.key).collect();
                ensure(hi.is_subset(&lo), || format!("bets grew from tau {} to {}", pair[0].threshold, pair[1].threshold))?;
            }
        }
    }

    let as_outcome = |m: &MatchRecord, predicted: MatchResult| {
        let mut confidences = [0.0; 3];
        confidences[predicted.index()] = 1.0;
        PredictionOutcome { key: m.key(), confidences, predicted, actual: m.ft_result, model: "fixed".into() }
    };
    let oracle: Vec<_> = lg.matches.iter().map(|m| as_outcome(m, m.ft_result)).collect();
    let anti: Vec<_> = lg
        .matches
        .iter()
        .map(|m| as_outcome(m, MatchResult::ALL.into_iter().find(|r| *r != m.ft_result).unwrap()))
        .collect();
    let mut books = 0;
    for book in Bookmaker::ALL {
        let boards: Vec<&OddsTriple> = lg.matches.iter().filter_map(|m| m.odds.book(book)).collect();
        let overround = boards.iter().map(|o| 1.0 / f99(o)).sum::<f64>() / boards.len() as f64;
        if overround <= 1.0 {
            continue;
        }
        let strategy = StrategyConfig { book: BookSelection::Book(book), ..Default::default() };
        let up = simulate(&oracle, &market, &strategy).map_err(|e| e.to_string())?.roi().unwrap_or(f64::NAN);
        let down = simulate(&anti, &market, &strategy).map_err(|e| e.to_string())?.roi().unwrap_or(f64::NAN);
        ensure(up > 0.0 && 0.0 > down, || format!("{}: oracle {up}, anti-oracle {down}", book.label()))?;
        books += 1;
    }
    ensure(books > 0, || "no overround book in the synthetic market".into())?;
    let table = blanket_roi(&[("All".into(), outcomes)], &market).map_err(|e| e.to_string())?;
    ensure(table.rows.len() == 6, || "blanket table needs six books".into())?;
    let mut detail = format!("{ledgers} ledgers balanced and monotone, oracle/anti-oracle ordered at {books} books");

    if real_paths().is_some() {
        match real_accuracy_shape() {
            Ok(Verdict::Pass(_)) => {
                let run = real_run().as_ref().map_err(Clone::clone)?;
                let roi = run.roi.get("Pinnacle", "Type1").ok_or("no Pinnacle Type1 ROI on real data")?;
                ensure((roi - 0.014).abs() <= 0.05, || format!("real Pinnacle Type1 ROI {:.1}% not within 5 points of 1.4%", 100.0 * roi))?;
                detail.push_str(&format!("; real Pinnacle Type1 ROI {:.1}%", 100.0 * roi));
            }
            _ => detail.push_str("; real-data ROI check not applicable (accuracy shape did not pass)"),
        }
    } else {
        detail.push_str("; real-data ROI check skipped (KELLY_STRATA_REAL_DATA not set)");
    }
    Ok(Verdict::Pass(detail))
}

// ---------------------------------------------------------------- 8

fn model_numerics() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (n, f) = (60, 5);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..f).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
    let sw: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let mut worst = 0.0f64;
    for l2 in [0.0, 0.1, 1.0] {
        let w: Vec<f64> = (0..3 * (f + 1)).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, grad) = logistic_objective(&w, &x, &y, &sw, l2);
        for i in 0..w.len() {
            let h = 1e-6;
            let (mut up, mut down) = (w.clone(), w.clone());
            up[i] += h;
            down[i] -= h;
            let numeric =
                (logistic_objective(&up, &x, &y, &sw, l2).0 - logistic_objective(&down, &x, &y, &sw, l2).0) / (2.0 * h);
            worst = worst.max((numeric - grad[i]).abs() / grad[i].abs().max(1e-3));
        }
    }
    ensure(worst < 1e-4, || format!("gradient relative error {worst:e}"))?;

    let lg = common::league(12, 2, 3);
    for (alg, key) in [(Algorithm::GradientBoosting, "n_estimators"), (Algorithm::BoostedDeep, "iterations")] {
        let model = fit(&ClassifierSpec::new(alg, 1).with(key, 40i64), &lg.rows).map_err(|e| e.to_string())?;
        let loss = &model.boosting().ok_or("not a boosting model")?.training_loss;
        for (r, pair) in loss.windows(2).enumerate() {
            ensure(pair[1] <= pair[0] + 1e-12, || format!("{alg} loss rose at round {}", r + 1))?;
        }
    }

    let lg = common::league(20, 3, 6);
    let (train, test) = common::split_first_season(&lg.rows);
    let share = |rows: &[FeatureVector]| {
        let mut c = [0.0; 3];
        for r in rows {
            c[r.label.index()] += 1.0 / rows.len() as f64;
        }
        c
    };
    let (p, q) = (share(&train), share(&test));
    let stratified: f64 = (0..3).map(|c| p[c] * q[c]).sum();
    let mut gaps = Vec::new();
    for (alg, chance) in [(Algorithm::BaselineUniform, 1.0 / 3.0), (Algorithm::BaselineStratified, stratified)] {
        let mut total = 0.0;
        for seed in 0..100u64 {
            total += fit(&ClassifierSpec::new(alg, seed), &train)
                .and_then(|m| m.accuracy(&test))
                .map_err(|e| e.to_string())?;
        }
        let gap = (total / 100.0 - chance).abs();
        ensure(gap < 0.03, || format!("{alg} mean accuracy is {:.1} points off chance", 100.0 * gap))?;
        gaps.push(gap);
    }
    Ok(Verdict::Pass(format!(
        "gradient error {worst:.1e}, boosting losses monotone, baselines within {:.1}/{:.1} points",
        100.0 * gaps[0],
        100.0 * gaps[1]
    )))
}

// ----------------------------------------------------------------

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Check); 8] = [
        ("rating invariants", Duration::from_secs(10), ratings_invariants),
        ("streak exhaustion", Duration::from_secs(1), streak_exhaustion),
        ("Kelly algebra", Duration::from_secs(1), kelly_algebra),
        ("protocol anti-leakage", Duration::from_secs(120), anti_leakage),
        ("real-data accuracy shape", Duration::from_secs(1800), real_accuracy_shape),
        ("real-data season counts", Duration::from_secs(1800), real_season_counts),
        ("betting arithmetic", Duration::from_secs(1800), betting_arithmetic),
        ("model numerics", Duration::from_secs(120), model_numerics),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let verdict = match verdict {
            Ok(Verdict::Pass(_)) if elapsed > budget => Err(format!("took {elapsed:.1?}, budget {budget:?}")),
            v => v,
        };
        match verdict {
            Ok(Verdict::Pass(d)) => println!("criterion {}: PASS  {name} ({elapsed:.2?}): {d}", i + 1),
            Ok(Verdict::Skip(d)) => println!("criterion {}: SKIP  {name}: {d}", i + 1),
            Err(e) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({elapsed:.2?}): {e}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
