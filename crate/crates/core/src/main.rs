use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kelly_strata::ingest::SynthConfig;
use kelly_strata::{Error, Pipeline, PipelineConfig, Stage};

const DEFAULT_CONFIG: &str = "kelly-strata.toml";

/// Kelly-stratified football outcome prediction and betting backtests.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    /// Pipeline configuration; defaults to ./kelly-strata.toml when present.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, overriding the configuration file.
    #[arg(long, global = true, env = "KELLY_STRATA_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,

    /// Maximum number of worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse season CSVs (or generate a league) into normalized matches.
    Ingest {
        /// Season files or directories; replaces `data.paths`.
        files: Vec<PathBuf>,
        /// Generate a synthetic league, e.g. `--synthetic teams=20 seasons=3 seed=7`.
        #[arg(long, num_args = 0.., value_name = "KEY=VALUE")]
        synthetic: Option<Vec<String>>,
    },
    /// Build the feature table.
    Featurize,
    /// Kelly indices and match types.
    Kelly,
    /// Expanding-window training and prediction.
    Train,
    /// Metrics, ranks and confidence histograms.
    Evaluate,
    /// Betting backtests with each stratum's best model.
    Bet,
    /// Markdown summary of all outputs.
    Report,
    /// All stages in order, or a single one.
    Run {
        #[arg(long)]
        stage: Option<Stage>,
    },
}

fn synthetic_config(pairs: &[String]) -> Result<SynthConfig, Error> {
    let mut cfg = SynthConfig::default();
    for pair in pairs {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| Error::Argument(format!("expected KEY=VALUE, got `{pair}`")))?;
        let bad = || Error::Argument(format!("invalid value in `{pair}`"));
        match key.trim() {
            "teams" | "team_count" => cfg.team_count = value.parse().map_err(|_| bad())?,
            "seasons" => cfg.seasons = value.parse().map_err(|_| bad())?,
            "seed" => cfg.seed = value.parse().map_err(|_| bad())?,
            "margin" => cfg.margin = value.parse().map_err(|_| bad())?,
            other => return Err(Error::Argument(format!("unknown synthetic key `{other}`"))),
        }
    }
    Ok(cfg)
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, Error> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None if Path::new(DEFAULT_CONFIG).exists() => PipelineConfig::load(Path::new(DEFAULT_CONFIG)),
        None => Ok(PipelineConfig::default()),
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::Argument("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Argument(format!("thread pool: {e}")))?;
    }
    let mut config = load_config(cli.config.as_deref())?;
    if let Command::Ingest { files, synthetic } = &cli.command {
        if let Some(pairs) = synthetic {
            config.data.synthetic = Some(synthetic_config(pairs)?);
            config.data.paths.clear();
        } else if !files.is_empty() {
            config.data.paths = files.clone();
            config.data.synthetic = None;
        }
    }
    let out = cli.output_dir.clone().unwrap_or_else(|| config.output_dir.clone());
    let pipeline = Pipeline::new(config, out)?;
    let stage = match cli.command {
        Command::Ingest { .. } => Some(Stage::Ingest),
        Command::Featurize => Some(Stage::Featurize),
        Command::Kelly => Some(Stage::Kelly),
        Command::Train => Some(Stage::Train),
        Command::Evaluate => Some(Stage::Evaluate),
        Command::Bet => Some(Stage::Bet),
        Command::Report => Some(Stage::Report),
        Command::Run { stage } => stage,
    };
    match stage {
        Some(s) => pipeline.run_stage(s)?,
        None => pipeline.run_all()?,
    }
    println!("{}", pipeline.output_dir().display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
