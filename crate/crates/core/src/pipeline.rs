//! Stage orchestration over one output directory.
//!
//! Each stage owns a subdirectory, reads what earlier stages left behind
//! and rewrites its own outputs from scratch, so reruns are idempotent:
//!
//! ```text
//! <out>/manifest.json
//! <out>/ingest/      matches.jsonl, files.csv, rejected.csv
//! <out>/features/    features.csv, skipped.csv
//! <out>/kelly/       kelly_report.csv, type_counts.csv
//! <out>/training/    results.json, models/ (when kept)
//! <out>/evaluation/  metrics.csv, ranks.csv, confidence_histogram.csv,
//!                    failures.csv, predictions/
//! <out>/betting/     blanket_roi.csv, threshold_summary.csv,
//!                    trajectories.csv, ledgers/, upsets.csv, agreement.csv
//! <out>/report/      report.md
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::betting::{
    agreement_rate, blanket_roi, detect_upsets, threshold_sweep, write_ledger_csv, write_rates_csv,
    write_trajectories_csv, Market, RoiTable,
};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::evaluation::{run_protocol, write_models, write_protocol_outputs, ProtocolResults, Stratum};
use crate::features::{build_features, read_features_csv, write_features_csv};
use crate::ingest::{
    parse_season_csv, read_jsonl, sort_chronologically, synthesize_league_with, write_jsonl, MatchKey,
    MatchRecord, ParseReport,
};
use crate::kelly::{profile_matches, write_kelly_report, KellyProfile, MatchType};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Ingest,
    Featurize,
    Kelly,
    Train,
    Evaluate,
    Bet,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Ingest,
        Stage::Featurize,
        Stage::Kelly,
        Stage::Train,
        Stage::Evaluate,
        Stage::Bet,
        Stage::Report,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Featurize => "featurize",
            Stage::Kelly => "kelly",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Bet => "bet",
            Stage::Report => "report",
        }
    }

    /// Subdirectory of the output directory owned by the stage.
    pub fn dir(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Featurize => "features",
            Stage::Kelly => "kelly",
            Stage::Train => "training",
            Stage::Evaluate => "evaluation",
            Stage::Bet => "betting",
            Stage::Report => "report",
        }
    }

    /// Bumped whenever a stage's output format changes.
    pub fn version(self) -> u32 {
        1
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.label() == s.trim())
            .ok_or_else(|| Error::Argument(format!("unknown stage `{s}`")))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageEntry {
    pub version: u32,
    pub config_hash: String,
    /// Files written by the stage, relative to the output directory.
    pub outputs: Vec<String>,
}

/// Reproducibility record; deliberately free of timestamps so reruns
/// produce identical manifests.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub stages: BTreeMap<Stage, StageEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_reader(BufReader::new(file))?)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub matches: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub files: Vec<(String, usize, usize)>,
}

pub struct Pipeline {
    config: PipelineConfig,
    out: PathBuf,
    hash: String,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn list_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<_>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            list_files(root, &p, out)?;
        } else {
            let rel = p.strip_prefix(root).unwrap_or(&p);
            out.push(rel.to_string_lossy().replace('\\', "/"));
        }
    }
    Ok(())
}

/// Expands directories into their `*.csv` files, sorted by name.
pub fn expand_paths(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| Error::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

impl Pipeline {
    pub fn new(config: PipelineConfig, out: impl Into<PathBuf>) -> Result<Self> {
        config.validate()?;
        let hash = config.hash();
        Ok(Self {
            config,
            out: out.into(),
            hash,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn output_dir(&self) -> &Path {
        &self.out
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.out.join(stage.dir())
    }

    /// Every stage in order. Ingest is skipped when the configuration names
    /// no data source, so a run can start from previously ingested matches.
    pub fn run_all(&self) -> Result<()> {
        let data = &self.config.data;
        let has_source = data.synthetic.is_some() || !data.paths.is_empty();
        Stage::ALL
            .into_iter()
            .filter(|s| has_source || *s != Stage::Ingest)
            .try_for_each(|s| self.run_stage(s))
    }

    /// Runs one stage from a clean stage directory and records it in the
    /// manifest. Failures name the stage.
    pub fn run_stage(&self, stage: Stage) -> Result<()> {
        let started = std::time::Instant::now();
        log::info!("stage {stage}: start");
        let dir = self.stage_dir(stage);
        let result = (|| {
            if dir.exists() {
                fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            }
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            match stage {
                Stage::Ingest => self.ingest().map(drop),
                Stage::Featurize => self.featurize().map(drop),
                Stage::Kelly => self.kelly().map(drop),
                Stage::Train => self.train().map(drop),
                Stage::Evaluate => self.evaluate(),
                Stage::Bet => self.bet().map(drop),
                Stage::Report => self.report().map(drop),
            }?;
            self.record(stage)
        })();
        log::info!("stage {stage}: done in {:.1?}", started.elapsed());
        result.map_err(|e| e.in_stage(stage.label()))
    }

    fn record(&self, stage: Stage) -> Result<()> {
        let mut outputs = Vec::new();
        let dir = self.stage_dir(stage);
        list_files(&self.out, &dir, &mut outputs)?;
        let entry = StageEntry {
            version: stage.version(),
            config_hash: self.hash.clone(),
            outputs,
        };
        let path = self.out.join("manifest.json");
        let mut manifest = if path.exists() { Manifest::load(&path)? } else { Manifest::default() };
        manifest.tool_version = env!("CARGO_PKG_VERSION").to_string();
        manifest.config_hash = self.hash.clone();
        manifest.seed = self.config.seed;
        manifest.stages.insert(stage, entry.clone());
        self.write_json(&path, &manifest)?;
        let local = Manifest {
            tool_version: manifest.tool_version.clone(),
            config_hash: self.hash.clone(),
            seed: self.config.seed,
            stages: BTreeMap::from([(stage, entry)]),
        };
        self.write_json(&dir.join("manifest.json"), &local)
    }

    fn write_json<T: Serialize>(&self, path: &Path, value: &T) -> Result<()> {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        finish(w, path)
    }

    fn read_json<T: serde::de::DeserializeOwned>(&self, path: &Path) -> Result<T> {
        let file = File::open(path).map_err(|e| self.missing(path, e))?;
        Ok(serde_json::from_reader(BufReader::new(file))?)
    }

    fn missing(&self, path: &Path, e: std::io::Error) -> Error {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::Dataset(format!("{} not found; run the earlier stages first", path.display()))
        } else {
            Error::io(path, e)
        }
    }

    /// Normalized matches written by the ingest stage.
    pub fn matches(&self) -> Result<Vec<MatchRecord>> {
        let path = self.stage_dir(Stage::Ingest).join("matches.jsonl");
        if !path.exists() {
            return Err(self.missing(&path, std::io::ErrorKind::NotFound.into()));
        }
        read_jsonl(&path)
    }

    fn profiles(&self, matches: &[MatchRecord]) -> Result<Vec<KellyProfile>> {
        profile_matches(matches, self.config.kelly.rule)
    }

    /// Protocol results written by the train stage.
    pub fn results(&self) -> Result<ProtocolResults> {
        self.read_json(&self.stage_dir(Stage::Train).join("results.json"))
    }

    pub fn ingest(&self) -> Result<IngestSummary> {
        let data = &self.config.data;
        let mut summary = IngestSummary::default();
        let mut report = ParseReport::default();
        let dir = self.stage_dir(Stage::Ingest);
        let mut rejected = csv::Writer::from_writer(create(&dir.join("rejected.csv"))?);
        rejected.write_record(["file", "row", "message"])?;
        if let Some(synth) = &data.synthetic {
            let league = synthesize_league_with(synth)?;
            let n = league.matches.len();
            summary.files.push(("<synthetic>".into(), n, 0));
            report.merge(ParseReport {
                accepted: n,
                records: league.matches,
                ..Default::default()
            });
        } else {
            let files = expand_paths(&data.paths)?;
            if files.is_empty() {
                return Err(Error::Config("no input: set data.paths or data.synthetic".into()));
            }
            for f in files {
                let r = parse_season_csv(&f, &self.config.schema)?;
                let name = f.display().to_string();
                log::info!("{name}: {} accepted, {} rejected", r.accepted, r.rejected);
                for d in &r.diagnostics {
                    rejected.write_record([name.clone(), d.row.to_string(), d.message.clone()])?;
                }
                summary.files.push((name, r.accepted, r.rejected));
                report.merge(r);
            }
        }
        rejected.flush().map_err(|e| Error::io(&dir, e))?;
        if report.records.is_empty() {
            return Err(Error::Dataset("no match was accepted".into()));
        }
        sort_chronologically(&mut report.records);
        let mut files = csv::Writer::from_writer(create(&dir.join("files.csv"))?);
        files.write_record(["file", "accepted", "rejected"])?;
        for (name, a, r) in &summary.files {
            files.write_record([name.clone(), a.to_string(), r.to_string()])?;
        }
        files.flush().map_err(|e| Error::io(&dir, e))?;
        write_jsonl(&dir.join("matches.jsonl"), &report.records)?;
        summary.matches = report.records.len();
        summary.accepted = report.accepted;
        summary.rejected = report.rejected;
        Ok(summary)
    }

    /// Returns the number of feature rows.
    pub fn featurize(&self) -> Result<usize> {
        let matches = self.matches()?;
        let build = build_features(&matches, &self.config.ratings, &self.config.features)?;
        let dir = self.stage_dir(Stage::Featurize);
        let path = dir.join("features.csv");
        write_features_csv(&build.rows, create(&path)?)?;
        let mut w = csv::Writer::from_writer(create(&dir.join("skipped.csv"))?);
        w.write_record(["season", "date", "home", "away", "reason"])?;
        for s in &build.skipped {
            w.write_record([
                s.key.season.clone(),
                s.key.date.to_string(),
                s.key.home.clone(),
                s.key.away.clone(),
                s.reason.clone(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(&dir, e))?;
        log::info!("{} feature rows, {} matches skipped", build.rows.len(), build.skipped.len());
        Ok(build.rows.len())
    }

    /// Returns per-season type counts.
    pub fn kelly(&self) -> Result<BTreeMap<String, [usize; 3]>> {
        let matches = self.matches()?;
        let profiles = self.profiles(&matches)?;
        let dir = self.stage_dir(Stage::Kelly);
        write_kelly_report(&matches, &profiles, create(&dir.join("kelly_report.csv"))?)?;
        let counts = type_counts(&matches, &profiles);
        let mut w = csv::Writer::from_writer(create(&dir.join("type_counts.csv"))?);
        w.write_record(["season", "Type1", "Type2", "Type3", "total"])?;
        for (season, c) in &counts {
            w.write_record([
                season.clone(),
                c[0].to_string(),
                c[1].to_string(),
                c[2].to_string(),
                c.iter().sum::<usize>().to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(&dir, e))?;
        Ok(counts)
    }

    pub fn train(&self) -> Result<ProtocolResults> {
        let matches = self.matches()?;
        let profiles = self.profiles(&matches)?;
        let type_of: BTreeMap<MatchKey, MatchType> =
            matches.iter().zip(&profiles).map(|(m, p)| (m.key(), p.match_type)).collect();
        let path = self.stage_dir(Stage::Featurize).join("features.csv");
        let file = File::open(&path).map_err(|e| self.missing(&path, e))?;
        let rows = read_features_csv(BufReader::new(file))?;
        let types = rows
            .iter()
            .map(|r| {
                type_of
                    .get(&r.key)
                    .copied()
                    .ok_or_else(|| Error::Dataset(format!("feature row {} has no ingested match", r.key)))
            })
            .collect::<Result<Vec<_>>>()?;
        let results = run_protocol(&rows, &types, &self.config.protocol)?;
        let dir = self.stage_dir(Stage::Train);
        write_models(&dir, &results)?;
        self.write_json(&dir.join("results.json"), &results)?;
        Ok(results)
    }

    pub fn evaluate(&self) -> Result<()> {
        let results = self.results()?;
        write_protocol_outputs(&self.stage_dir(Stage::Evaluate), &results)
    }

    /// Blanket and threshold betting with each stratum's best model.
    pub fn bet(&self) -> Result<RoiTable> {
        let matches = self.matches()?;
        let profiles = self.profiles(&matches)?;
        let market = Market::new(&matches, &profiles)?;
        let results = self.results()?;
        let dir = self.stage_dir(Stage::Bet);

        let best: Vec<(Stratum, Vec<crate::models::PredictionOutcome>)> = results
            .strata
            .iter()
            .filter_map(|s| Some((s.stratum, s.outcomes(s.best?))))
            .collect();
        let columns: Vec<(String, Vec<_>)> = best
            .iter()
            .map(|(s, o)| {
                let label = match s {
                    Stratum::Type(t) => t.label().to_string(),
                    Stratum::All => "Baseline".to_string(),
                };
                (label, o.clone())
            })
            .collect();
        let table = blanket_roi(&columns, &market)?;
        table.write_csv(create(&dir.join("blanket_roi.csv"))?)?;
        self.write_json(&dir.join("blanket_roi.json"), &table)?;

        let sweep = threshold_sweep(&best, &market, &self.config.betting.thresholds, self.config.betting.book)?;
        write_trajectories_csv(&sweep, create(&dir.join("trajectories.csv"))?)?;
        let mut summary = csv::Writer::from_writer(create(&dir.join("threshold_summary.csv"))?);
        summary.write_record(["stratum", "threshold", "book", "bets", "staked", "returned", "roi"])?;
        for t in &sweep {
            summary.write_record([
                t.stratum.label().to_string(),
                t.threshold.to_string(),
                t.book.label().to_string(),
                t.ledger.entries.len().to_string(),
                format!("{:.6}", t.ledger.staked()),
                format!("{:.6}", t.ledger.returned()),
                t.ledger.roi().map(|r| format!("{r:.6}")).unwrap_or_else(|| "undefined".into()),
            ])?;
            let name = format!("{}_tau{:.2}.csv", t.stratum.label(), t.threshold);
            write_ledger_csv(&t.ledger, create(&dir.join("ledgers").join(name))?)?;
        }
        summary.flush().map_err(|e| Error::io(&dir, e))?;

        let mut upsets = Vec::new();
        let mut agreement = Vec::new();
        for (s, o) in &best {
            upsets.extend(detect_upsets(o, &market, &[*s]));
            agreement.extend(agreement_rate(o, &market, &[*s]));
        }
        write_rates_csv(&upsets, create(&dir.join("upsets.csv"))?)?;
        write_rates_csv(&agreement, create(&dir.join("agreement.csv"))?)?;
        Ok(table)
    }

    /// Markdown digest of the other stages' outputs.
    pub fn report(&self) -> Result<PathBuf> {
        let matches = self.matches()?;
        let profiles = self.profiles(&matches)?;
        let results = self.results()?;
        let roi: Option<RoiTable> = {
            let p = self.stage_dir(Stage::Bet).join("blanket_roi.json");
            if p.exists() { Some(self.read_json(&p)?) } else { None }
        };
        let text = render_report(&self.hash, &matches, &profiles, &results, roi.as_ref());
        let path = self.stage_dir(Stage::Report).join("report.md");
        let mut w = create(&path)?;
        w.write_all(text.as_bytes()).map_err(|e| Error::io(&path, e))?;
        finish(w, &path)?;
        Ok(path)
    }
}

/// Kelly type counts per season, in order of first appearance.
pub fn type_counts(matches: &[MatchRecord], profiles: &[KellyProfile]) -> BTreeMap<String, [usize; 3]> {
    let mut counts: BTreeMap<String, [usize; 3]> = BTreeMap::new();
    for (m, p) in matches.iter().zip(profiles) {
        let i = MatchType::ALL.iter().position(|t| *t == p.match_type).unwrap_or(2);
        counts.entry(m.season_id.clone()).or_default()[i] += 1;
    }
    counts
}

fn pct(v: Option<f64>) -> String {
    v.map(|x| format!("{:.1}%", 100.0 * x)).unwrap_or_else(|| "undefined".into())
}

fn render_report(
    hash: &str,
    matches: &[MatchRecord],
    profiles: &[KellyProfile],
    results: &ProtocolResults,
    roi: Option<&RoiTable>,
) -> String {
    let mut s = String::new();
    let mut line = |t: String| {
        s.push_str(&t);
        s.push('\n');
    };
    line("# Kelly-stratified prediction report".into());
    line(String::new());
    line(format!("Config hash: `{hash}`"));
    line(String::new());
    line("## Matches by Kelly type".into());
    line(String::new());
    line("| Season | Type1 | Type2 | Type3 | Total |".into());
    line("|---|---|---|---|---|".into());
    for (season, c) in type_counts(matches, profiles) {
        line(format!("| {season} | {} | {} | {} | {} |", c[0], c[1], c[2], c.iter().sum::<usize>()));
    }
    line(String::new());
    line("## Pooled test accuracy".into());
    line(String::new());
    let failures: Vec<&String> = results.strata.iter().flat_map(|r| &r.failures).collect();
    if results.strata.iter().all(|r| r.summaries.is_empty()) {
        line("No stratum produced test predictions.".into());
        for f in failures {
            line(format!("- {f}"));
        }
        return s;
    }
    let labels: Vec<&str> = results.strata.iter().map(|r| r.stratum.label()).collect();
    line(format!("| Algorithm | {} |", labels.join(" | ")));
    line(format!("|---|{}", "---|".repeat(labels.len())));
    let mut algs: Vec<_> = results.strata.iter().flat_map(|r| r.summaries.iter().map(|x| x.algorithm)).collect();
    algs.sort();
    algs.dedup();
    for a in algs {
        let cells: Vec<String> = results
            .strata
            .iter()
            .map(|r| {
                let acc = r.summary(a).map(|x| x.metrics.accuracy);
                let mark = if r.best == Some(a) { " **best**" } else { "" };
                format!("{}{mark}", pct(acc))
            })
            .collect();
        line(format!("| {} | {} |", a.label(), cells.join(" | ")));
    }
    if let Some(t) = roi.filter(|t| !t.columns.is_empty()) {
        line(String::new());
        line("## Blanket-bet ROI of the best model".into());
        line(String::new());
        line(format!("| | {} |", t.columns.join(" | ")));
        line(format!("|---|{}", "---|".repeat(t.columns.len())));
        line(format!(
            "| Match number | {} |",
            t.matches.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(" | ")
        ));
        for (book, vals) in &t.rows {
            let cells: Vec<String> = vals.iter().map(|v| pct(*v)).collect();
            line(format!("| {book} | {} |", cells.join(" | ")));
        }
    }
    s
}
