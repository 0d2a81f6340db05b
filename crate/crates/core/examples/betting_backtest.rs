//! Flat-stake betting on a synthetic league: oracle and anti-oracle
//! bounds, always-home, and a fitted model's blanket and threshold ROI.
//!
//!     cargo run --release --example betting_backtest

use kelly_strata::betting::{
    agreement_rate, blanket_roi, detect_upsets, simulate, threshold_sweep, BookSelection, Market,
    StrategyConfig, DEFAULT_THRESHOLDS,
};
use kelly_strata::evaluation::Stratum;
use kelly_strata::features::{build_features, FeatureConfig};
use kelly_strata::ingest::{synthesize_league, Bookmaker, MatchResult};
use kelly_strata::kelly::{profile_matches, KellyRule, MatchType};
use kelly_strata::models::{fit, Algorithm, ClassifierSpec, PredictionOutcome};
use kelly_strata::ratings::RatingsConfig;

fn fixed(rows: &[PredictionOutcome], pick: impl Fn(MatchResult) -> MatchResult, model: &str) -> Vec<PredictionOutcome> {
    rows.iter()
        .map(|o| {
            let predicted = pick(o.actual);
            let mut confidences = [0.0; 3];
            confidences[predicted.index()] = 1.0;
            PredictionOutcome { confidences, predicted, model: model.into(), ..o.clone() }
        })
        .collect()
}

fn main() -> kelly_strata::Result<()> {
    let matches = synthesize_league(20, 3, 7)?;
    let profiles = profile_matches(&matches, KellyRule::Max)?;
    let market = Market::new(&matches, &profiles)?;
    let rows = build_features(&matches, &RatingsConfig::default(), &FeatureConfig::default())?.rows;
    let first = rows[0].key.season.clone();
    let (train, test): (Vec<_>, Vec<_>) = rows.into_iter().partition(|r| r.key.season == first);

    let model = fit(&ClassifierSpec::new(Algorithm::LogisticRegression, 1), &train)?;
    let predictions = model.predict_rows(&test)?;
    let oracle = fixed(&predictions, |a| a, "oracle");
    let anti = fixed(&predictions, |a| MatchResult::from_index((a.index() + 1) % 3).unwrap(), "anti-oracle");
    let home = fixed(&predictions, |_| MatchResult::HomeWin, "always-home");

    let pinnacle = StrategyConfig::default();
    for (name, set) in [("oracle", &oracle), ("anti-oracle", &anti), ("always-home", &home), ("model", &predictions)] {
        let ledger = simulate(set, &market, &pinnacle)?;
        println!(
            "{name:<12} {} bets at Pinnacle, profit {:+.2}, ROI {:+.2}%",
            ledger.entries.len(),
            ledger.profit(),
            100.0 * ledger.roi().unwrap_or(0.0)
        );
    }
    let best = StrategyConfig { book: BookSelection::BestOdds, ..Default::default() };
    let ledger = simulate(&predictions, &market, &best)?;
    println!("model at best available odds: ROI {:+.2}%", 100.0 * ledger.roi().unwrap_or(0.0));

    let by_type = |t: MatchType| -> Vec<PredictionOutcome> {
        predictions.iter().filter(|o| market.match_type(&o.key) == Some(t)).cloned().collect()
    };
    let mut columns: Vec<(String, Vec<PredictionOutcome>)> =
        MatchType::ALL.iter().map(|t| (t.label().to_string(), by_type(*t))).collect();
    columns.push(("Baseline".into(), predictions.clone()));
    let table = blanket_roi(&columns, &market)?;
    let mut out = Vec::new();
    table.write_csv(&mut out)?;
    println!("\nblanket ROI, one model across strata:\n{}", String::from_utf8_lossy(&out));

    let strata: Vec<(Stratum, Vec<PredictionOutcome>)> = MatchType::ALL
        .iter()
        .map(|t| (Stratum::Type(*t), by_type(*t)))
        .chain(std::iter::once((Stratum::All, predictions.clone())))
        .collect();
    let sweep = threshold_sweep(&strata, &market, &DEFAULT_THRESHOLDS, BookSelection::Book(Bookmaker::Pinnacle))?;
    println!("threshold sweep (Pinnacle):");
    for t in &sweep {
        println!(
            "  {:<6} tau {:.1}: {:3} bets, ROI {}",
            t.stratum.label(),
            t.threshold,
            t.ledger.entries.len(),
            t.ledger.roi().map(|r| format!("{:+.1}%", 100.0 * r)).unwrap_or_else(|| "undefined".into())
        );
    }

    let all = [Stratum::Type(MatchType::Type1), Stratum::Type(MatchType::Type3), Stratum::All];
    for (name, rows) in [
        ("upsets", detect_upsets(&predictions, &market, &all)),
        ("agreement", agreement_rate(&predictions, &market, &all)),
    ] {
        for r in rows.iter().filter(|r| r.book == "Average") {
            println!("{name:<9} {:<6} {:.3} over {} matches", r.stratum.label(), r.rate().unwrap_or(0.0), r.matches);
        }
    }
    Ok(())
}
