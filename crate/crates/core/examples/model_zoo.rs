//! Fits every classifier once on the first synthetic feature season and
//! scores it on the next.
//!
//!     cargo run --release --example model_zoo

use std::time::Instant;

use kelly_strata::features::{build_features, FeatureConfig};
use kelly_strata::ingest::synthesize_league;
use kelly_strata::models::{fit, Algorithm, ClassifierSpec};
use kelly_strata::ratings::RatingsConfig;

fn main() -> kelly_strata::Result<()> {
    let matches = synthesize_league(20, 3, 7)?;
    let rows = build_features(&matches, &RatingsConfig::default(), &FeatureConfig::default())?.rows;
    let first = rows[0].key.season.clone();
    let (train, test): (Vec<_>, Vec<_>) = rows.into_iter().partition(|r| r.key.season == first);
    println!("train {} rows ({first}), test {} rows", train.len(), test.len());

    for alg in Algorithm::ALL {
        let mut spec = ClassifierSpec::new(alg, 42);
        // Smaller ensembles keep the demo quick.
        spec = match alg {
            Algorithm::RandomForest | Algorithm::GradientBoosting => spec.with("n_estimators", 50i64),
            Algorithm::BoostedDeep => spec.with("iterations", 50i64),
            _ => spec,
        };
        let started = Instant::now();
        let model = fit(&spec, &train)?;
        let acc = model.accuracy(&test)?;
        println!("{:<20} accuracy {:.3}  ({:.2?})", alg.label(), acc, started.elapsed());
    }
    Ok(())
}
