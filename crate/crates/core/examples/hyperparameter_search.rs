//! Random search over a grid, then recursive elimination of features with
//! non-positive permutation importance.
//!
//!     cargo run --release --example hyperparameter_search -- [algorithm]

use kelly_strata::features::{build_features, FeatureConfig};
use kelly_strata::ingest::synthesize_league;
use kelly_strata::models::{
    default_grid, feature_columns, feature_eliminate, grid_size, random_search, Algorithm, ClassifierSpec,
    EliminationConfig,
};
use kelly_strata::ratings::RatingsConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alg: Algorithm = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "decision-tree".into())
        .parse()?;
    let matches = synthesize_league(20, 3, 7)?;
    let rows = build_features(&matches, &RatingsConfig::default(), &FeatureConfig::default())?.rows;
    let seasons: Vec<&str> = {
        let mut s: Vec<&str> = rows.iter().map(|r| r.key.season.as_str()).collect();
        s.dedup();
        s
    };
    let train: Vec<_> = rows.iter().filter(|r| r.key.season == seasons[0]).cloned().collect();
    let validation: Vec<_> = rows.iter().filter(|r| r.key.season == seasons[1]).take(150).cloned().collect();

    let grid = default_grid(alg, train.len(), feature_columns(&train).len());
    println!("{alg}: grid of {} configurations", grid_size(&grid)?);
    let base = ClassifierSpec::new(alg, 3);
    let search = random_search(&base, &grid, 8, &train, &validation, 3)?;
    for (spec, acc) in &search.trials {
        println!("  {:.3}  {}", acc, spec.id());
    }
    println!("best {:.3}: {}", search.validation_accuracy, search.best.id());

    let cfg = EliminationConfig { repeats: 5, seed: 3 };
    let (model, steps) = feature_eliminate(&search.best, &train, &validation, &cfg)?;
    for s in &steps {
        println!(
            "  {:2} features -> {:.3}, dropping {}",
            s.features,
            s.validation_accuracy,
            s.dropped.len()
        );
    }
    println!("kept {} features: {}", model.features.len(), model.features.join(", "));
    Ok(())
}
