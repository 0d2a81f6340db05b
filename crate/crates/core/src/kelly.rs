//! Kelly indices and match predictability classes.
//!
//! A bookmaker's Kelly index for an outcome is its price relative to the
//! market average, scaled by the average book's return rate. Matches are
//! classed by how many bookmakers have an index above 1.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Bookmaker, MatchRecord, MatchResult, OddsBoard, OddsTriple};

/// Return rate of an odds triple: the reciprocal of its implied-probability sum.
pub fn f99(avg: &OddsTriple) -> f64 {
    // Product form avoids rounding the three reciprocals separately, so
    // fair triples such as (2, 3, 6) give exactly 1.
    let (h, d, a) = (avg.home, avg.draw, avg.away);
    h * d * a / (d * a + h * a + h * d)
}

/// Per-outcome Kelly indices of one bookmaker against the average book.
pub fn kelly_indices(book: &OddsTriple, avg: &OddsTriple) -> KellyTriple {
    let r = f99(avg);
    KellyTriple {
        home: book.home / avg.home * r,
        draw: book.draw / avg.draw * r,
        away: book.away / avg.away * r,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KellyTriple {
    pub home: f64,
    pub draw: f64,
    pub away: f64,
}

impl KellyTriple {
    pub fn get(&self, outcome: MatchResult) -> f64 {
        match outcome {
            MatchResult::HomeWin => self.home,
            MatchResult::Draw => self.draw,
            MatchResult::AwayWin => self.away,
        }
    }

    pub fn max(&self) -> f64 {
        self.home.max(self.draw).max(self.away)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MatchType {
    Type1,
    Type2,
    Type3,
}

impl MatchType {
    pub const ALL: [MatchType; 3] = [MatchType::Type1, MatchType::Type2, MatchType::Type3];

    pub fn label(self) -> &'static str {
        match self {
            MatchType::Type1 => "Type1",
            MatchType::Type2 => "Type2",
            MatchType::Type3 => "Type3",
        }
    }
}

impl fmt::Display for MatchType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MatchType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(' ', "").as_str() {
            "type1" | "1" => Ok(MatchType::Type1),
            "type2" | "2" => Ok(MatchType::Type2),
            "type3" | "3" => Ok(MatchType::Type3),
            other => Err(Error::Argument(format!("unknown match type `{other}`"))),
        }
    }
}

/// Which of a bookmaker's three indices decides "above one".
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KellyRule {
    /// Any outcome.
    #[default]
    Max,
    HomeOnly,
    /// The market favourite (lowest average odds; ties resolve home, draw, away).
    FavoriteOutcome,
}

impl KellyRule {
    fn over_one(self, k: &KellyTriple, avg: &OddsTriple) -> bool {
        match self {
            KellyRule::Max => k.max() > 1.0,
            KellyRule::HomeOnly => k.home > 1.0,
            KellyRule::FavoriteOutcome => {
                let fav = avg.favourites()[0];
                k.get(fav) > 1.0
            }
        }
    }
}

/// Count of bookmakers "over one" to match type: 2+ / 1 / 0.
pub fn type_for_count(books_over_one: usize) -> MatchType {
    match books_over_one {
        0 => MatchType::Type3,
        1 => MatchType::Type2,
        _ => MatchType::Type1,
    }
}

/// Classifies from per-bookmaker indices using [`KellyRule::Max`].
pub fn classify_match(profiles: &BTreeMap<Bookmaker, KellyTriple>) -> Result<MatchType> {
    classify_with(profiles, KellyRule::Max, None).map(|(t, _)| t)
}

fn classify_with(
    profiles: &BTreeMap<Bookmaker, KellyTriple>,
    rule: KellyRule,
    avg: Option<&OddsTriple>,
) -> Result<(MatchType, usize)> {
    if profiles.is_empty() {
        return Err(Error::Classification("no bookmaker profiles".into()));
    }
    let fallback = OddsTriple::new(2.0, 3.0, 4.0);
    let avg = avg.unwrap_or(&fallback);
    let count = profiles.values().filter(|k| rule.over_one(k, avg)).count();
    Ok((type_for_count(count), count))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KellyProfile {
    pub f99: f64,
    pub per_bookmaker: BTreeMap<Bookmaker, KellyTriple>,
    pub match_type: MatchType,
    pub books_over_one: usize,
}

impl KellyProfile {
    pub fn from_board(board: &OddsBoard, rule: KellyRule) -> Result<Self> {
        let per_bookmaker: BTreeMap<Bookmaker, KellyTriple> = board
            .per_bookmaker
            .iter()
            .map(|(b, t)| (*b, kelly_indices(t, &board.average)))
            .collect();
        let (match_type, books_over_one) = classify_with(&per_bookmaker, rule, Some(&board.average))?;
        Ok(Self {
            f99: f99(&board.average),
            per_bookmaker,
            match_type,
            books_over_one,
        })
    }
}

/// Profiles for every match, in input order.
pub fn profile_matches(matches: &[MatchRecord], rule: KellyRule) -> Result<Vec<KellyProfile>> {
    matches
        .iter()
        .map(|m| {
            KellyProfile::from_board(&m.odds, rule)
                .map_err(|e| Error::Classification(format!("{}: {e}", m.key())))
        })
        .collect()
}

/// Writes the per-match Kelly report.
pub fn write_kelly_report<W: std::io::Write>(
    matches: &[MatchRecord],
    profiles: &[KellyProfile],
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![
        "season".to_string(),
        "date".into(),
        "home".into(),
        "away".into(),
        "f99".into(),
    ];
    for b in Bookmaker::ALL {
        for o in ["H", "D", "A"] {
            header.push(format!("{}_K{o}", b.column_prefix()));
        }
    }
    header.extend(["books_over_one".into(), "type".into()]);
    w.write_record(&header)?;
    for (m, p) in matches.iter().zip(profiles) {
        let mut row = vec![
            m.season_id.clone(),
            m.round_date.to_string(),
            m.home_team.clone(),
            m.away_team.clone(),
            format!("{:.6}", p.f99),
        ];
        for b in Bookmaker::ALL {
            match p.per_bookmaker.get(&b) {
                Some(k) => row.extend([k.home, k.draw, k.away].map(|v| format!("{v:.6}"))),
                None => row.extend(std::iter::repeat_n(String::new(), 3)),
            }
        }
        row.push(p.books_over_one.to_string());
        row.push(p.match_type.label().into());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<kelly report>", e))
}
