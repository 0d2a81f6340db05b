//! Drives every pipeline stage from a configuration document, the same way
//! the `kelly-strata` binary does, and lists what each stage wrote.
//!
//!     cargo run --release --example pipeline_run -- [out-dir]

use kelly_strata::ingest::SynthConfig;
use kelly_strata::models::Algorithm;
use kelly_strata::pipeline::Manifest;
use kelly_strata::{Pipeline, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "kelly-strata-demo".into());
    let mut config = PipelineConfig::default();
    config.data.synthetic = Some(SynthConfig { team_count: 20, seasons: 3, ..SynthConfig::default() });
    config.protocol.n_draws = 2;
    config.protocol.eliminate = false;
    config.protocol.algorithms = vec![
        Algorithm::LogisticRegression,
        Algorithm::Knn,
        Algorithm::BaselineUniform,
        Algorithm::BaselineStratified,
    ];
    println!("configuration:\n{}", config.to_toml()?);

    let pipeline = Pipeline::new(config, &out)?;
    pipeline.run_all()?;

    let manifest = Manifest::load(&pipeline.output_dir().join("manifest.json"))?;
    println!("config hash {}", manifest.config_hash);
    for (stage, entry) in &manifest.stages {
        println!("{stage:<10} {} files", entry.outputs.len());
    }
    let report = std::fs::read_to_string(pipeline.output_dir().join("report/report.md"))?;
    println!("\n{report}");
    Ok(())
}
