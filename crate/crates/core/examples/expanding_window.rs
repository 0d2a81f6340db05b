//! Expanding-window protocol per Kelly stratum on a synthetic league with
//! a reduced roster.
//!
//!     cargo run --release --example expanding_window

use kelly_strata::evaluation::{run_protocol, ProtocolConfig};
use kelly_strata::features::{build_features, FeatureConfig};
use kelly_strata::ingest::synthesize_league;
use kelly_strata::kelly::{profile_matches, KellyRule};
use kelly_strata::models::Algorithm;
use kelly_strata::ratings::RatingsConfig;

fn main() -> kelly_strata::Result<()> {
    let matches = synthesize_league(20, 3, 7)?;
    let profiles = profile_matches(&matches, KellyRule::Max)?;
    let build = build_features(&matches, &RatingsConfig::default(), &FeatureConfig::default())?;
    let type_of: std::collections::HashMap<_, _> =
        matches.iter().zip(&profiles).map(|(m, p)| (m.key(), p.match_type)).collect();
    let types: Vec<_> = build.rows.iter().map(|r| type_of[&r.key]).collect();

    let cfg = ProtocolConfig {
        n_draws: 3,
        eliminate: false,
        algorithms: vec![
            Algorithm::LogisticRegression,
            Algorithm::Knn,
            Algorithm::DecisionTree,
            Algorithm::BaselineUniform,
            Algorithm::BaselineStratified,
        ],
        ..ProtocolConfig::default()
    };
    let results = run_protocol(&build.rows, &types, &cfg)?;
    for s in &results.strata {
        println!(
            "{:<6} {} rows, {} windows, best {}",
            s.stratum.label(),
            s.rows,
            s.windows.len(),
            s.best.map(|a| a.label()).unwrap_or("-")
        );
        for sum in &s.summaries {
            println!(
                "    {:<20} acc {:.3}  f1 {:.3}  mean rank {}",
                sum.algorithm.label(),
                sum.metrics.accuracy,
                sum.metrics.f1,
                sum.mean_rank.map(|r| format!("{r:.2}")).unwrap_or_else(|| "-".into())
            );
        }
        for bin in &s.histogram {
            if bin.count > 0 {
                println!(
                    "      confidence [{:.1}, {:.1}): {} predictions, {:.3} correct",
                    bin.lower,
                    bin.upper,
                    bin.count,
                    bin.correct as f64 / bin.count as f64
                );
            }
        }
    }
    Ok(())
}
