mod common;

use std::collections::BTreeSet;

use kelly_strata::betting::{
    agreement_rate, blanket_roi, detect_upsets, simulate, threshold_sweep, BookSelection, Market, StrategyConfig,
    DEFAULT_THRESHOLDS, MONEY_SCALE,
};
use kelly_strata::evaluation::Stratum;
use kelly_strata::ingest::{Bookmaker, MatchRecord, MatchResult};
use kelly_strata::kelly::MatchType;
use kelly_strata::models::{fit, Algorithm, ClassifierSpec, PredictionOutcome};

fn outcome(m: &MatchRecord, predicted: MatchResult, confidence: f64) -> PredictionOutcome {
    let mut confidences = [(1.0 - confidence) / 2.0; 3];
    confidences[predicted.index()] = confidence;
    PredictionOutcome {
        key: m.key(),
        confidences,
        predicted,
        actual: m.ft_result,
        model: "fixed".into(),
    }
}

fn oracle(matches: &[MatchRecord]) -> Vec<PredictionOutcome> {
    matches.iter().map(|m| outcome(m, m.ft_result, 1.0)).collect()
}

fn anti_oracle(matches: &[MatchRecord]) -> Vec<PredictionOutcome> {
    matches
        .iter()
        .map(|m| {
            let wrong = MatchResult::ALL.into_iter().find(|r| *r != m.ft_result).unwrap();
            outcome(m, wrong, 1.0)
        })
        .collect()
}

fn trained_outcomes(lg: &common::League) -> Vec<PredictionOutcome> {
    let (train, test) = common::split_first_season(&lg.rows);
    let model = fit(&ClassifierSpec::new(Algorithm::LogisticRegression, 3), &train).unwrap();
    model.predict_rows(&test).unwrap()
}

#[test]
fn ledger_conserves_money_exactly() {
    let lg = common::league(20, 3, 7);
    let market = Market::new(&lg.matches, &lg.profiles).unwrap();
    let outcomes = trained_outcomes(&lg);
    for book in [BookSelection::BestOdds, BookSelection::Book(Bookmaker::Bet365)] {
        let ledger = simulate(&outcomes, &market, &StrategyConfig { book, ..Default::default() }).unwrap();
        assert!(!ledger.entries.is_empty());
        let summed: i64 = ledger.entries.iter().map(|b| b.profit_units).sum();
        assert_eq!(ledger.returned_units - ledger.staked_units, summed);
        assert_eq!(ledger.staked_units, MONEY_SCALE * ledger.entries.len() as i64);
        assert_eq!(ledger.entries.len() + ledger.skipped.len(), outcomes.len());
    }
}

#[test]
fn higher_thresholds_bet_on_subsets() {
    let lg = common::league(20, 3, 11);
    let market = Market::new(&lg.matches, &lg.profiles).unwrap();
    let outcomes = trained_outcomes(&lg);
    let columns: Vec<(Stratum, Vec<PredictionOutcome>)> =
        Stratum::ALL.iter().map(|s| (*s, outcomes.clone())).collect();
    let mut thresholds = vec![1.0 / 3.0];
    thresholds.extend(DEFAULT_THRESHOLDS);
    thresholds.push(1.0);
    let sweep = threshold_sweep(&columns, &market, &thresholds, BookSelection::default()).unwrap();
    assert_eq!(sweep.len(), 4 * thresholds.len());
    for chunk in sweep.chunks(thresholds.len()) {
        for pair in chunk.windows(2) {
            let lo: BTreeSet<_> = pair[0].ledger.entries.iter().map(|b| b.key.clone()).collect();
            let hi: BTreeSet<_> = pair[1].ledger.entries.iter().map(|b| b.key.clone()).collect();
            assert!(hi.is_subset(&lo), "{} at {} vs {}", pair[0].stratum.label(), pair[0].threshold, pair[1].threshold);
        }
    }
}

#[test]
fn oracle_profits_and_anti_oracle_loses_everywhere() {
    let lg = common::league(12, 2, 5);
    let market = Market::new(&lg.matches, &lg.profiles).unwrap();
    let table = blanket_roi(
        &[("oracle".into(), oracle(&lg.matches)), ("anti".into(), anti_oracle(&lg.matches))],
        &market,
    )
    .unwrap();
    for book in Bookmaker::ALL {
        let up = table.get(book.label(), "oracle").unwrap();
        let down = table.get(book.label(), "anti").unwrap();
        assert!(up > 0.0 && down < 0.0, "{}: {up} {down}", book.label());
        assert_eq!(down, -1.0);
    }
}

#[test]
fn oracle_dominates_any_model_on_the_same_bets() {
    let lg = common::league(20, 3, 7);
    let market = Market::new(&lg.matches, &lg.profiles).unwrap();
    let model = trained_outcomes(&lg);
    let keys: BTreeSet<_> = model.iter().map(|o| o.key.clone()).collect();
    let perfect: Vec<_> = oracle(&lg.matches).into_iter().filter(|o| keys.contains(&o.key)).collect();
    for book in Bookmaker::ALL {
        let strategy = StrategyConfig { book: BookSelection::Book(book), ..Default::default() };
        let a = simulate(&model, &market, &strategy).unwrap();
        let b = simulate(&perfect, &market, &strategy).unwrap();
        assert_eq!(a.entries.len(), b.entries.len());
        assert!(b.roi().unwrap() >= a.roi().unwrap());
    }
}

#[test]
fn always_home_matches_closed_form() {
    let lg = common::league(12, 2, 9);
    let market = Market::new(&lg.matches, &lg.profiles).unwrap();
    let home: Vec<_> = lg.matches.iter().map(|m| outcome(m, MatchResult::HomeWin, 0.5)).collect();
    let ledger = simulate(&home, &market, &StrategyConfig::default()).unwrap();
    let n = lg.matches.len() as f64;
    let won: f64 = lg
        .matches
        .iter()
        .filter(|m| m.ft_result == MatchResult::HomeWin)
        .map(|m| m.odds.book(Bookmaker::Pinnacle).unwrap().home)
        .sum();
    assert!((ledger.roi().unwrap() - (won / n - 1.0)).abs() < 1e-9);
}

#[test]
fn type_filter_and_empty_strata() {
    let lg = common::league(12, 2, 5);
    let market = Market::new(&lg.matches, &lg.profiles).unwrap();
    let all = oracle(&lg.matches);
    let strategy = StrategyConfig { types: vec![MatchType::Type1], ..Default::default() };
    let ledger = simulate(&all, &market, &strategy).unwrap();
    let expected = lg.profiles.iter().filter(|p| p.match_type == MatchType::Type1).count();
    assert_eq!(ledger.entries.len(), expected);
    assert!(ledger.skipped.iter().all(|s| s.reason.contains("filtered")));
    assert_eq!(simulate(&[], &market, &StrategyConfig::default()).unwrap().roi(), None);
    assert!(simulate(&all, &market, &StrategyConfig { threshold: 0.2, ..Default::default() }).is_err());
}

#[test]
fn blanket_table_layout() {
    let lg = common::league(12, 2, 5);
    let market = Market::new(&lg.matches, &lg.profiles).unwrap();
    let table = blanket_roi(&[("Type1".into(), oracle(&lg.matches)), ("Type2".into(), Vec::new())], &market).unwrap();
    assert_eq!(table.rows.len(), 6);
    assert_eq!(table.matches, vec![lg.matches.len(), 0]);
    assert_eq!(table.get("Pinnacle", "Type2"), None);
    let mut buf = Vec::new();
    table.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], ",Type1,Type2");
    assert!(lines[1].starts_with("Match number,"));
    assert_eq!(lines.len(), 8);
    assert!(lines[2..].iter().all(|l| l.ends_with(",undefined")));
}

#[test]
fn upsets_rarer_and_agreement_higher_in_confident_matches() {
    let (mut upset, mut agree) = ([(0, 0); 2], [(0, 0); 2]);
    for seed in [7, 8, 9] {
        let lg = common::league(20, 3, seed);
        let market = Market::new(&lg.matches, &lg.profiles).unwrap();
        let outcomes = trained_outcomes(&lg);
        let strata = [Stratum::Type(MatchType::Type1), Stratum::Type(MatchType::Type3)];
        for (acc, rows) in [
            (&mut upset, detect_upsets(&outcomes, &market, &strata)),
            (&mut agree, agreement_rate(&outcomes, &market, &strata)),
        ] {
            for r in rows.iter().filter(|r| r.book == "Average") {
                let i = usize::from(r.stratum != strata[0]);
                acc[i].0 += r.hits;
                acc[i].1 += r.matches;
            }
        }
    }
    let rate = |(h, n): (usize, usize)| h as f64 / n as f64;
    assert!(rate(upset[0]) < rate(upset[1]), "upsets {upset:?}");
    assert!(rate(agree[0]) > rate(agree[1]), "agreement {agree:?}");
}
