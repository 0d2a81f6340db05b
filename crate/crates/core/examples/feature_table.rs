//! Builds the 52-column pre-match feature table for a synthetic league and
//! writes it as CSV.
//!
//!     cargo run --example feature_table -- [out.csv]

use std::fs::File;
use std::io::BufWriter;

use kelly_strata::features::{build_features, catalogue, write_features_csv, FeatureConfig};
use kelly_strata::ingest::synthesize_league;
use kelly_strata::ratings::RatingsConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let matches = synthesize_league(20, 2, 7)?;
    let build = build_features(&matches, &RatingsConfig::default(), &FeatureConfig::default())?;
    println!(
        "{} matches -> {} feature rows, {} skipped",
        matches.len(),
        build.rows.len(),
        build.skipped.len()
    );
    let mut reasons = std::collections::BTreeMap::new();
    for s in &build.skipped {
        *reasons.entry(s.reason.as_str()).or_insert(0) += 1;
    }
    for (reason, n) in reasons {
        println!("  skipped {n:3}: {reason}");
    }

    let row = &build.rows[build.rows.len() / 2];
    println!("{}, label {}", row.key, row.label);
    for feature in catalogue().iter().take(12) {
        println!("  {:<16} {:>9.4}", feature, row.get(feature).unwrap_or(f64::NAN));
    }
    println!("  ... {} features in total", catalogue().len());

    if let Some(path) = std::env::args().nth(1) {
        let file = File::create(&path)?;
        write_features_csv(&build.rows, BufWriter::new(file))?;
        println!("wrote {path}");
    }
    Ok(())
}
