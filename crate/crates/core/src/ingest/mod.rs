//! Match records and their sources.
//!
//! Season files follow the football-data column convention (`FTHG`, `B365H`,
//! ...). [`parse_season_csv`] validates rows into [`MatchRecord`]s and
//! [`synthesize_league`] produces leagues with known latent strengths for
//! tests and examples.

mod csv_io;
mod synth;

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{
    parse_season_csv, parse_season_reader, write_season_csv, ColumnSchema, DateFormat,
    ParseReport, RowDiagnostic, TripleColumns,
};
pub use synth::{synthesize_league, synthesize_league_with, SynthConfig, SyntheticLeague};

/// Full-time or half-time result of a match.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MatchResult {
    HomeWin,
    Draw,
    AwayWin,
}

impl MatchResult {
    /// Label order used for every confidence triple: home, draw, away.
    pub const ALL: [MatchResult; 3] = [MatchResult::HomeWin, MatchResult::Draw, MatchResult::AwayWin];

    pub fn from_goals(home: u32, away: u32) -> Self {
        match home.cmp(&away) {
            std::cmp::Ordering::Greater => MatchResult::HomeWin,
            std::cmp::Ordering::Equal => MatchResult::Draw,
            std::cmp::Ordering::Less => MatchResult::AwayWin,
        }
    }

    pub fn index(self) -> usize {
        match self {
            MatchResult::HomeWin => 0,
            MatchResult::Draw => 1,
            MatchResult::AwayWin => 2,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    /// Single-letter code used in source files (`H`, `D`, `A`).
    pub fn code(self) -> &'static str {
        match self {
            MatchResult::HomeWin => "H",
            MatchResult::Draw => "D",
            MatchResult::AwayWin => "A",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code.trim() {
            "H" | "h" => Some(MatchResult::HomeWin),
            "D" | "d" => Some(MatchResult::Draw),
            "A" | "a" => Some(MatchResult::AwayWin),
            _ => None,
        }
    }

    /// Elo score of the home side: 1 for a win, 0.5 for a draw, 0 for a loss.
    pub fn home_score(self) -> f64 {
        match self {
            MatchResult::HomeWin => 1.0,
            MatchResult::Draw => 0.5,
            MatchResult::AwayWin => 0.0,
        }
    }
}

impl fmt::Display for MatchResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// A `(home, away)` pair of per-side values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pair<T> {
    pub home: T,
    pub away: T,
}

impl<T> Pair<T> {
    pub fn new(home: T, away: T) -> Self {
        Self { home, away }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchStats {
    pub shots: Pair<u32>,
    pub shots_on_target: Pair<u32>,
    pub corners: Pair<u32>,
    pub fouls: Pair<u32>,
    pub yellow_cards: Pair<u32>,
    pub red_cards: Pair<u32>,
}

/// The six bookmakers whose prices feed the Kelly indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bookmaker {
    Bet365,
    Interwetten,
    #[serde(rename = "Bet&Win")]
    BetAndWin,
    Pinnacle,
    #[serde(rename = "VCBet")]
    VcBet,
    WilliamHill,
}

impl Bookmaker {
    pub const ALL: [Bookmaker; 6] = [
        Bookmaker::Bet365,
        Bookmaker::Interwetten,
        Bookmaker::BetAndWin,
        Bookmaker::Pinnacle,
        Bookmaker::VcBet,
        Bookmaker::WilliamHill,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Bookmaker::Bet365 => "Bet365",
            Bookmaker::Interwetten => "Interwetten",
            Bookmaker::BetAndWin => "Bet&Win",
            Bookmaker::Pinnacle => "Pinnacle",
            Bookmaker::VcBet => "VCBet",
            Bookmaker::WilliamHill => "WilliamHill",
        }
    }

    /// Column prefix in football-data files, e.g. `B365` for `B365H`.
    pub fn column_prefix(self) -> &'static str {
        match self {
            Bookmaker::Bet365 => "B365",
            Bookmaker::Interwetten => "IW",
            Bookmaker::BetAndWin => "BW",
            Bookmaker::Pinnacle => "PS",
            Bookmaker::VcBet => "VC",
            Bookmaker::WilliamHill => "WH",
        }
    }
}

impl fmt::Display for Bookmaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Bookmaker {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let folded = s.trim().to_ascii_lowercase();
        Bookmaker::ALL
            .into_iter()
            .find(|b| {
                b.label().to_ascii_lowercase() == folded
                    || b.column_prefix().to_ascii_lowercase() == folded
            })
            .ok_or_else(|| Error::Argument(format!("unknown bookmaker `{s}`")))
    }
}

/// Decimal odds for the three outcomes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OddsTriple {
    pub home: f64,
    pub draw: f64,
    pub away: f64,
}

impl OddsTriple {
    pub fn new(home: f64, draw: f64, away: f64) -> Self {
        Self { home, draw, away }
    }

    pub fn get(&self, outcome: MatchResult) -> f64 {
        match outcome {
            MatchResult::HomeWin => self.home,
            MatchResult::Draw => self.draw,
            MatchResult::AwayWin => self.away,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.home, self.draw, self.away]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.home * factor, self.draw * factor, self.away * factor)
    }

    pub fn is_valid(&self) -> bool {
        self.as_array().iter().all(|o| o.is_finite() && *o > 1.0)
    }

    /// Outcomes carrying the lowest price (the book's favourite), in label order.
    pub fn favourites(&self) -> Vec<MatchResult> {
        let lo = self.as_array().into_iter().fold(f64::INFINITY, f64::min);
        MatchResult::ALL.into_iter().filter(|r| self.get(*r) == lo).collect()
    }

    /// The outcome with strictly the highest price, if unique.
    pub fn strict_outsider(&self) -> Option<MatchResult> {
        let arr = self.as_array();
        let hi = arr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut top = MatchResult::ALL.into_iter().filter(|r| self.get(*r) == hi);
        match (top.next(), top.next()) {
            (Some(r), None) => Some(r),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OddsBoard {
    pub per_bookmaker: BTreeMap<Bookmaker, OddsTriple>,
    pub average: OddsTriple,
}

impl OddsBoard {
    /// Board whose average is the arithmetic mean of the bookmaker triples.
    pub fn from_books(per_bookmaker: BTreeMap<Bookmaker, OddsTriple>) -> Option<Self> {
        if per_bookmaker.is_empty() {
            return None;
        }
        let n = per_bookmaker.len() as f64;
        let sum = per_bookmaker.values().fold([0.0; 3], |acc, t| {
            [acc[0] + t.home, acc[1] + t.draw, acc[2] + t.away]
        });
        Some(Self {
            average: OddsTriple::new(sum[0] / n, sum[1] / n, sum[2] / n),
            per_bookmaker,
        })
    }

    pub fn book(&self, bookmaker: Bookmaker) -> Option<&OddsTriple> {
        self.per_bookmaker.get(&bookmaker)
    }
}

/// Identity of a match across every pipeline stage.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MatchKey {
    pub season: String,
    pub date: NaiveDate,
    pub home: String,
    pub away: String,
}

impl MatchKey {
    /// Stable 64-bit FNV-1a digest; seeds per-row randomness.
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let date = self.date.format("%Y-%m-%d").to_string();
        for part in [self.season.as_str(), date.as_str(), self.home.as_str(), self.away.as_str()] {
            for b in part.bytes().chain(std::iter::once(0x1f)) {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

impl fmt::Display for MatchKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} v {}", self.season, self.date, self.home, self.away)
    }
}

/// One played match.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub season_id: String,
    pub round_date: NaiveDate,
    pub home_team: String,
    pub away_team: String,
    pub ft_home_goals: u32,
    pub ft_away_goals: u32,
    pub ft_result: MatchResult,
    pub ht_home_goals: u32,
    pub ht_away_goals: u32,
    pub ht_result: MatchResult,
    pub stats: MatchStats,
    pub odds: OddsBoard,
}

impl MatchRecord {
    pub fn key(&self) -> MatchKey {
        MatchKey {
            season: self.season_id.clone(),
            date: self.round_date,
            home: self.home_team.clone(),
            away: self.away_team.clone(),
        }
    }

    pub fn goal_diff_abs(&self) -> u32 {
        self.ft_home_goals.abs_diff(self.ft_away_goals)
    }

    /// Checks every record-level invariant, returning the first violation.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.home_team.is_empty() || self.away_team.is_empty() {
            return Err("empty team label".into());
        }
        if self.home_team == self.away_team {
            return Err(format!("team `{}` plays itself", self.home_team));
        }
        if MatchResult::from_goals(self.ft_home_goals, self.ft_away_goals) != self.ft_result {
            return Err(format!(
                "full-time result {} inconsistent with score {}-{}",
                self.ft_result, self.ft_home_goals, self.ft_away_goals
            ));
        }
        if MatchResult::from_goals(self.ht_home_goals, self.ht_away_goals) != self.ht_result {
            return Err(format!(
                "half-time result {} inconsistent with score {}-{}",
                self.ht_result, self.ht_home_goals, self.ht_away_goals
            ));
        }
        if self.ht_home_goals > self.ft_home_goals || self.ht_away_goals > self.ft_away_goals {
            return Err("half-time goals exceed full-time goals".into());
        }
        let s = &self.stats;
        if s.shots_on_target.home > s.shots.home || s.shots_on_target.away > s.shots.away {
            return Err("shots on target exceed shots".into());
        }
        if !self.odds.average.is_valid() {
            return Err("average odds must all exceed 1.0".into());
        }
        if let Some((b, _)) = self.odds.per_bookmaker.iter().find(|(_, t)| !t.is_valid()) {
            return Err(format!("{b} odds must all exceed 1.0"));
        }
        Ok(())
    }
}

/// Trims and case-folds a team label.
pub fn normalize_team(label: &str) -> String {
    label.trim().to_lowercase()
}

/// Writes one JSON document per line.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

/// Orders matches by date, keeping source order within a day.
pub fn sort_chronologically(matches: &mut [MatchRecord]) {
    matches.sort_by_key(|m| m.round_date);
}
