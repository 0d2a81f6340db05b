//! Flat-stake betting simulation on model predictions: blanket and
//! confidence-threshold ROI, upset rates and bookmaker agreement.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::Stratum;
use crate::ingest::{Bookmaker, MatchKey, MatchRecord, MatchResult, OddsBoard};
use crate::kelly::{KellyProfile, MatchType};
use crate::models::PredictionOutcome;

/// Default confidence thresholds of the threshold sweep.
pub const DEFAULT_THRESHOLDS: [f64; 4] = [0.4, 0.5, 0.6, 0.7];

/// Odds and Kelly type of every match, keyed by match.
#[derive(Clone, Debug, Default)]
pub struct Market {
    boards: BTreeMap<MatchKey, OddsBoard>,
    types: BTreeMap<MatchKey, MatchType>,
}

impl Market {
    /// `profiles[i]` must describe `matches[i]`.
    pub fn new(matches: &[MatchRecord], profiles: &[KellyProfile]) -> Result<Self> {
        if matches.len() != profiles.len() {
            return Err(Error::Argument(format!(
                "{} matches but {} Kelly profiles",
                matches.len(),
                profiles.len()
            )));
        }
        let mut market = Market::default();
        for (m, p) in matches.iter().zip(profiles) {
            market.boards.insert(m.key(), m.odds.clone());
            market.types.insert(m.key(), p.match_type);
        }
        Ok(market)
    }

    pub fn board(&self, key: &MatchKey) -> Option<&OddsBoard> {
        self.boards.get(key)
    }

    pub fn match_type(&self, key: &MatchKey) -> Option<MatchType> {
        self.types.get(key).copied()
    }
}

/// Which price a bet is struck at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BookSelection {
    Book(Bookmaker),
    /// The best price on the backed outcome across all books.
    BestOdds,
}

impl Default for BookSelection {
    fn default() -> Self {
        BookSelection::Book(Bookmaker::Pinnacle)
    }
}

impl BookSelection {
    pub fn label(&self) -> &'static str {
        match self {
            BookSelection::Book(b) => b.label(),
            BookSelection::BestOdds => "best-odds",
        }
    }

    fn price(&self, board: &OddsBoard, outcome: MatchResult) -> Option<(f64, &'static str)> {
        match self {
            BookSelection::Book(b) => board.book(*b).map(|o| (o.get(outcome), b.label())),
            BookSelection::BestOdds => board
                .per_bookmaker
                .iter()
                .map(|(b, o)| (o.get(outcome), b.label()))
                .fold(None, |best: Option<(f64, &str)>, c| match best {
                    Some(b) if b.0 >= c.0 => Some(b),
                    _ => Some(c),
                }),
        }
    }
}

impl fmt::Display for BookSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for BookSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("best-odds") {
            return Ok(BookSelection::BestOdds);
        }
        s.parse().map(BookSelection::Book)
    }
}

impl Serialize for BookSelection {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for BookSelection {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    /// Types to bet on; empty means every match.
    pub types: Vec<MatchType>,
    /// Minimum confidence of the predicted outcome.
    pub threshold: f64,
    pub book: BookSelection,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self {
            types: Vec::new(),
            threshold: 1.0 / 3.0,
            book: BookSelection::default(),
        }
    }
}

impl StrategyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold >= 1.0 / 3.0 - 1e-12 && self.threshold <= 1.0) {
            return Err(Error::Argument(format!(
                "confidence threshold {} outside [1/3, 1]",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// Money is kept in integer millionths of a stake so ledger sums are exact.
pub const MONEY_SCALE: i64 = 1_000_000;

fn to_units(amount: f64) -> i64 {
    (amount * MONEY_SCALE as f64).round() as i64
}

fn from_units(units: i64) -> f64 {
    units as f64 / MONEY_SCALE as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bet {
    pub key: MatchKey,
    pub bookmaker: String,
    pub outcome: MatchResult,
    pub odds: f64,
    /// Net result in millionths of the unit stake.
    pub profit_units: i64,
}

impl Bet {
    pub fn stake(&self) -> f64 {
        1.0
    }

    pub fn won(&self) -> bool {
        self.profit_units >= 0
    }

    pub fn profit(&self) -> f64 {
        from_units(self.profit_units)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedBet {
    pub key: MatchKey,
    pub reason: String,
}

/// Unit-stake bets in match order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BetLedger {
    pub entries: Vec<Bet>,
    pub skipped: Vec<SkippedBet>,
    pub staked_units: i64,
    pub returned_units: i64,
}

impl BetLedger {
    pub fn place(&mut self, key: MatchKey, bookmaker: &str, outcome: MatchResult, odds: f64, won: bool) {
        let stake = MONEY_SCALE;
        let payout = if won { to_units(odds) } else { 0 };
        self.staked_units += stake;
        self.returned_units += payout;
        self.entries.push(Bet {
            key,
            bookmaker: bookmaker.to_string(),
            outcome,
            odds,
            profit_units: payout - stake,
        });
    }

    pub fn staked(&self) -> f64 {
        from_units(self.staked_units)
    }

    pub fn returned(&self) -> f64 {
        from_units(self.returned_units)
    }

    pub fn profit(&self) -> f64 {
        from_units(self.returned_units - self.staked_units)
    }

    /// Profit over stake; `None` when nothing was staked.
    pub fn roi(&self) -> Option<f64> {
        (self.staked_units > 0).then(|| (self.returned_units - self.staked_units) as f64 / self.staked_units as f64)
    }

    /// Cumulative ROI after each bet.
    pub fn trajectory(&self) -> Vec<f64> {
        let mut profit = 0i64;
        self.entries
            .iter()
            .enumerate()
            .map(|(i, b)| {
                profit += b.profit_units;
                profit as f64 / (MONEY_SCALE as f64 * (i + 1) as f64)
            })
            .collect()
    }
}

/// Backs the predicted outcome of every match that passes the type filter
/// and whose predicted-class confidence is at least the threshold.
pub fn simulate(outcomes: &[PredictionOutcome], market: &Market, strategy: &StrategyConfig) -> Result<BetLedger> {
    strategy.validate()?;
    let mut ordered: Vec<&PredictionOutcome> = outcomes.iter().collect();
    ordered.sort_by_key(|o| o.key.date);
    let mut ledger = BetLedger::default();
    for o in ordered {
        let skip = |ledger: &mut BetLedger, reason: String| {
            ledger.skipped.push(SkippedBet { key: o.key.clone(), reason });
        };
        let Some(board) = market.board(&o.key) else {
            skip(&mut ledger, "no odds for match".into());
            continue;
        };
        if !strategy.types.is_empty() {
            match market.match_type(&o.key) {
                Some(t) if strategy.types.contains(&t) => {}
                Some(t) => {
                    skip(&mut ledger, format!("{t} filtered out"));
                    continue;
                }
                None => {
                    skip(&mut ledger, "unknown match type".into());
                    continue;
                }
            }
        }
        let conf = o.max_confidence();
        if conf < strategy.threshold {
            skip(&mut ledger, format!("confidence {conf:.3} below threshold"));
            continue;
        }
        let Some((odds, book)) = strategy.book.price(board, o.predicted) else {
            skip(&mut ledger, format!("no {} odds", strategy.book));
            continue;
        };
        ledger.place(o.key.clone(), book, o.predicted, odds, o.predicted == o.actual);
    }
    Ok(ledger)
}

/// Blanket-bet ROI table: one column per stratum (each with its own
/// predictions), one row per bookmaker.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RoiTable {
    pub columns: Vec<String>,
    pub matches: Vec<usize>,
    /// `rows[b][c]`: ROI of bookmaker `b` on column `c`.
    pub rows: Vec<(String, Vec<Option<f64>>)>,
}

impl RoiTable {
    pub fn get(&self, book: &str, column: &str) -> Option<f64> {
        let c = self.columns.iter().position(|x| x == column)?;
        self.rows.iter().find(|(b, _)| b == book)?.1[c]
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![String::new()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        let mut counts = vec!["Match number".to_string()];
        counts.extend(self.matches.iter().map(|m| m.to_string()));
        w.write_record(&counts)?;
        for (book, vals) in &self.rows {
            let mut rec = vec![book.clone()];
            rec.extend(vals.iter().map(|v| match v {
                Some(r) => format!("{:.4}", r),
                None => "undefined".to_string(),
            }));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<roi csv>", e))
    }
}

/// Bets every prediction of each column at every bookmaker. Columns are
/// given as (label, predictions), e.g. the best model per Kelly type plus
/// the best model on all matches as the baseline.
pub fn blanket_roi(columns: &[(String, Vec<PredictionOutcome>)], market: &Market) -> Result<RoiTable> {
    let mut table = RoiTable {
        columns: columns.iter().map(|(l, _)| l.clone()).collect(),
        matches: columns.iter().map(|(_, o)| o.len()).collect(),
        rows: Vec::new(),
    };
    for book in Bookmaker::ALL {
        let strategy = StrategyConfig {
            book: BookSelection::Book(book),
            ..Default::default()
        };
        let vals = columns
            .iter()
            .map(|(_, o)| simulate(o, market, &strategy).map(|l| l.roi()))
            .collect::<Result<Vec<_>>>()?;
        table.rows.push((book.label().to_string(), vals));
    }
    Ok(table)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub stratum: Stratum,
    /// Bookmaker label, or `Average` for the market average odds.
    pub book: String,
    pub matches: usize,
    pub hits: usize,
}

impl RateRow {
    pub fn rate(&self) -> Option<f64> {
        (self.matches > 0).then(|| self.hits as f64 / self.matches as f64)
    }
}

/// True when the model was right and the actual result carried the book's
/// strictly highest odds.
pub fn is_upset(outcome: &PredictionOutcome, odds: &crate::ingest::OddsTriple) -> bool {
    outcome.correct() && odds.strict_outsider() == Some(outcome.actual)
}

/// True when the model's pick is among the book's lowest-odds outcomes.
pub fn agrees(outcome: &PredictionOutcome, odds: &crate::ingest::OddsTriple) -> bool {
    odds.favourites().contains(&outcome.predicted)
}

fn rate_table(
    outcomes: &[PredictionOutcome],
    market: &Market,
    strata: &[Stratum],
    hit: fn(&PredictionOutcome, &crate::ingest::OddsTriple) -> bool,
) -> Vec<RateRow> {
    let mut rows = Vec::new();
    for &s in strata {
        let picked: Vec<(&PredictionOutcome, &OddsBoard)> = outcomes
            .iter()
            .filter(|o| market.match_type(&o.key).is_some_and(|t| s.contains(t)))
            .filter_map(|o| Some((o, market.board(&o.key)?)))
            .collect();
        let mut books: Vec<(String, Option<Bookmaker>)> =
            Bookmaker::ALL.iter().map(|b| (b.label().to_string(), Some(*b))).collect();
        books.push(("Average".to_string(), None));
        for (label, book) in books {
            let mut row = RateRow { stratum: s, book: label, matches: 0, hits: 0 };
            for (o, board) in &picked {
                let odds = match book {
                    Some(b) => match board.book(b) {
                        Some(odds) => odds,
                        None => continue,
                    },
                    None => &board.average,
                };
                row.matches += 1;
                row.hits += usize::from(hit(o, odds));
            }
            rows.push(row);
        }
    }
    rows
}

/// Upset rate per stratum and book.
pub fn detect_upsets(outcomes: &[PredictionOutcome], market: &Market, strata: &[Stratum]) -> Vec<RateRow> {
    rate_table(outcomes, market, strata, is_upset)
}

/// Share of matches where the model's pick is the book's favourite.
pub fn agreement_rate(outcomes: &[PredictionOutcome], market: &Market, strata: &[Stratum]) -> Vec<RateRow> {
    rate_table(outcomes, market, strata, agrees)
}

pub fn write_rates_csv<W: Write>(rows: &[RateRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["stratum", "book", "matches", "hits", "rate"])?;
    for r in rows {
        w.write_record([
            r.stratum.label().to_string(),
            r.book.clone(),
            r.matches.to_string(),
            r.hits.to_string(),
            r.rate().map(|v| format!("{v:.6}")).unwrap_or_else(|| "undefined".into()),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<rates csv>", e))
}

/// One threshold strategy's ledger.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub stratum: Stratum,
    pub threshold: f64,
    pub book: BookSelection,
    pub ledger: BetLedger,
}

/// Threshold sweep: for each (stratum, predictions) pair and each
/// threshold, the ledger of the strategy.
pub fn threshold_sweep(
    columns: &[(Stratum, Vec<PredictionOutcome>)],
    market: &Market,
    thresholds: &[f64],
    book: BookSelection,
) -> Result<Vec<Trajectory>> {
    let mut out = Vec::new();
    for (stratum, outcomes) in columns {
        for &threshold in thresholds {
            let types = match stratum {
                Stratum::Type(t) => vec![*t],
                Stratum::All => Vec::new(),
            };
            let strategy = StrategyConfig { types, threshold, book };
            out.push(Trajectory {
                stratum: *stratum,
                threshold,
                book,
                ledger: simulate(outcomes, market, &strategy)?,
            });
        }
    }
    Ok(out)
}

/// Cumulative ROI per bet for every strategy.
pub fn write_trajectories_csv<W: Write>(trajectories: &[Trajectory], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["stratum", "threshold", "book", "bet", "date", "profit", "cumulative_roi"])?;
    for t in trajectories {
        for (i, (bet, roi)) in t.ledger.entries.iter().zip(t.ledger.trajectory()).enumerate() {
            w.write_record([
                t.stratum.label().to_string(),
                t.threshold.to_string(),
                t.book.label().to_string(),
                (i + 1).to_string(),
                bet.key.date.to_string(),
                format!("{:.6}", bet.profit()),
                format!("{roi:.6}"),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<trajectory csv>", e))
}

/// One row per bet.
pub fn write_ledger_csv<W: Write>(ledger: &BetLedger, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["season", "date", "home", "away", "bookmaker", "outcome", "odds", "stake", "profit"])?;
    for b in &ledger.entries {
        w.write_record([
            b.key.season.clone(),
            b.key.date.to_string(),
            b.key.home.clone(),
            b.key.away.clone(),
            b.bookmaker.clone(),
            b.outcome.code().to_string(),
            b.odds.to_string(),
            format!("{:.6}", b.stake()),
            format!("{:.6}", b.profit()),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<ledger csv>", e))
}
