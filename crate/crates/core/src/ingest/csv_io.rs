use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{
    normalize_team, Bookmaker, MatchRecord, MatchResult, MatchStats, OddsBoard, OddsTriple, Pair,
};
use crate::error::{Error, Result};

/// Day-first date layouts found in season files.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DateFormat {
    /// `DD/MM/YY`, two-digit years below 70 map to 20YY.
    #[default]
    #[serde(rename = "dd/mm/yy")]
    DayMonthShortYear,
    #[serde(rename = "dd/mm/yyyy")]
    DayMonthLongYear,
}

impl DateFormat {
    /// Parses `raw`, trying the preferred layout first and the other one
    /// second. The year's digit count decides when both could apply.
    pub fn parse(self, raw: &str) -> Option<NaiveDate> {
        let parts: Vec<&str> = raw.trim().split('/').collect();
        if parts.len() != 3 {
            return None;
        }
        let day: u32 = parts[0].trim().parse().ok()?;
        let month: u32 = parts[1].trim().parse().ok()?;
        let year_raw = parts[2].trim();
        let year_num: i32 = year_raw.parse().ok()?;
        let short = |y: i32| if y < 70 { 2000 + y } else { 1900 + y };
        let year = match (self, year_raw.len()) {
            (_, 4) => year_num,
            (_, 1 | 2) => short(year_num),
            (DateFormat::DayMonthLongYear, _) => year_num,
            (DateFormat::DayMonthShortYear, _) => return None,
        };
        NaiveDate::from_ymd_opt(year, month, day)
    }
}

/// Column names for a home/draw/away odds triple.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleColumns {
    pub home: String,
    pub draw: String,
    pub away: String,
}

impl TripleColumns {
    pub fn with_prefix(prefix: &str) -> Self {
        Self {
            home: format!("{prefix}H"),
            draw: format!("{prefix}D"),
            away: format!("{prefix}A"),
        }
    }

    fn names(&self) -> [&str; 3] {
        [&self.home, &self.draw, &self.away]
    }
}

/// Maps logical record fields onto source column names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnSchema {
    /// Optional season column; absent files take the season from the file stem.
    pub season: String,
    pub date: String,
    pub date_format: DateFormat,
    pub home_team: String,
    pub away_team: String,
    pub ft_home_goals: String,
    pub ft_away_goals: String,
    pub ft_result: String,
    pub ht_home_goals: String,
    pub ht_away_goals: String,
    pub ht_result: String,
    pub home_shots: String,
    pub away_shots: String,
    pub home_shots_on_target: String,
    pub away_shots_on_target: String,
    pub home_corners: String,
    pub away_corners: String,
    pub home_fouls: String,
    pub away_fouls: String,
    pub home_yellow: String,
    pub away_yellow: String,
    pub home_red: String,
    pub away_red: String,
    pub bookmakers: BTreeMap<Bookmaker, TripleColumns>,
    /// Average-odds column sets in priority order (synonyms).
    pub average: Vec<TripleColumns>,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        let s = |v: &str| v.to_string();
        Self {
            season: s("Season"),
            date: s("Date"),
            date_format: DateFormat::default(),
            home_team: s("HomeTeam"),
            away_team: s("AwayTeam"),
            ft_home_goals: s("FTHG"),
            ft_away_goals: s("FTAG"),
            ft_result: s("FTR"),
            ht_home_goals: s("HTHG"),
            ht_away_goals: s("HTAG"),
            ht_result: s("HTR"),
            home_shots: s("HS"),
            away_shots: s("AS"),
            home_shots_on_target: s("HST"),
            away_shots_on_target: s("AST"),
            home_corners: s("HC"),
            away_corners: s("AC"),
            home_fouls: s("HF"),
            away_fouls: s("AF"),
            home_yellow: s("HY"),
            away_yellow: s("AY"),
            home_red: s("HR"),
            away_red: s("AR"),
            bookmakers: Bookmaker::ALL
                .into_iter()
                .map(|b| (b, TripleColumns::with_prefix(b.column_prefix())))
                .collect(),
            average: vec![
                TripleColumns::with_prefix("Avg"),
                TripleColumns::with_prefix("BbAv"),
            ],
        }
    }
}

impl ColumnSchema {
    fn mandatory(&self) -> [&str; 21] {
        [
            &self.date,
            &self.home_team,
            &self.away_team,
            &self.ft_home_goals,
            &self.ft_away_goals,
            &self.ft_result,
            &self.ht_home_goals,
            &self.ht_away_goals,
            &self.ht_result,
            &self.home_shots,
            &self.away_shots,
            &self.home_shots_on_target,
            &self.away_shots_on_target,
            &self.home_corners,
            &self.away_corners,
            &self.home_fouls,
            &self.away_fouls,
            &self.home_yellow,
            &self.away_yellow,
            &self.home_red,
            &self.away_red,
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowDiagnostic {
    /// 1-based data row index (the header is row 0).
    pub row: usize,
    pub message: String,
}

/// Accepted records plus per-row rejection diagnostics.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ParseReport {
    pub records: Vec<MatchRecord>,
    pub accepted: usize,
    pub rejected: usize,
    pub diagnostics: Vec<RowDiagnostic>,
}

impl ParseReport {
    pub fn merge(&mut self, other: ParseReport) {
        self.records.extend(other.records);
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.diagnostics.extend(other.diagnostics);
        super::sort_chronologically(&mut self.records);
    }
}

/// Parses one season file. The season label comes from the schema's season
/// column when present, otherwise from the file stem.
pub fn parse_season_csv(path: &Path, schema: &ColumnSchema) -> Result<ParseReport> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let season = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "season".into());
    parse_season_reader(file, &season, schema)
}

struct Layout {
    index: HashMap<String, usize>,
    books: Vec<(Bookmaker, [usize; 3])>,
    average: Option<[usize; 3]>,
    season: Option<usize>,
}

impl Layout {
    fn col(&self, name: &str) -> usize {
        self.index[name]
    }

    fn triple(&self, cols: &TripleColumns) -> Option<[usize; 3]> {
        let [h, d, a] = cols.names();
        Some([*self.index.get(h)?, *self.index.get(d)?, *self.index.get(a)?])
    }
}

pub fn parse_season_reader<R: Read>(
    reader: R,
    default_season: &str,
    schema: &ColumnSchema,
) -> Result<ParseReport> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(Error::Dataset("empty file: no header row".into()));
    }
    let index: HashMap<String, usize> = headers
        .iter()
        .enumerate()
        .map(|(i, h)| (h.trim_start_matches('\u{feff}').to_string(), i))
        .collect();
    for column in schema.mandatory() {
        if !index.contains_key(column) {
            return Err(Error::Schema {
                column: column.to_string(),
            });
        }
    }
    let mut layout = Layout {
        season: index.get(&schema.season).copied(),
        index,
        books: Vec::new(),
        average: None,
    };
    layout.books = schema
        .bookmakers
        .iter()
        .filter_map(|(b, cols)| layout.triple(cols).map(|idx| (*b, idx)))
        .collect();
    layout.average = schema.average.iter().find_map(|cols| layout.triple(cols));
    if layout.books.is_empty() && layout.average.is_none() {
        let column = schema
            .average
            .first()
            .map(|c| c.home.clone())
            .unwrap_or_else(|| "AvgH".into());
        return Err(Error::Schema { column });
    }

    let mut report = ParseReport::default();
    let mut saw_row = false;
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                report.rejected += 1;
                report.diagnostics.push(RowDiagnostic {
                    row: row_no,
                    message: e.to_string(),
                });
                continue;
            }
        };
        if row.iter().all(str::is_empty) {
            continue;
        }
        saw_row = true;
        match parse_row(&row, &layout, schema, default_season) {
            Ok(record) => match record.validate() {
                Ok(()) => {
                    report.accepted += 1;
                    report.records.push(record);
                }
                Err(message) => {
                    report.rejected += 1;
                    report.diagnostics.push(RowDiagnostic { row: row_no, message });
                }
            },
            Err(message) => {
                report.rejected += 1;
                report.diagnostics.push(RowDiagnostic { row: row_no, message });
            }
        }
    }
    if !saw_row {
        return Err(Error::Dataset("empty file: no data rows".into()));
    }
    for d in &report.diagnostics {
        log::warn!("rejected row {}: {}", d.row, d.message);
    }
    super::sort_chronologically(&mut report.records);
    Ok(report)
}

fn cell<'a>(row: &'a csv::StringRecord, idx: usize) -> &'a str {
    row.get(idx).unwrap_or("")
}

fn parse_count(row: &csv::StringRecord, layout: &Layout, name: &str) -> Result<u32, String> {
    let raw = cell(row, layout.col(name));
    raw.parse::<u32>()
        .or_else(|_| {
            // Some files store integers as `2.0`.
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.fract() == 0.0 && *v >= 0.0 && *v <= f64::from(u32::MAX))
                .map(|v| v as u32)
                .ok_or(())
        })
        .map_err(|_| format!("column {name}: unparseable count `{raw}`"))
}

fn parse_pair(
    row: &csv::StringRecord,
    layout: &Layout,
    home: &str,
    away: &str,
) -> Result<Pair<u32>, String> {
    Ok(Pair::new(
        parse_count(row, layout, home)?,
        parse_count(row, layout, away)?,
    ))
}

/// `Ok(None)` when every cell is empty or the triple is partially missing.
fn parse_triple(row: &csv::StringRecord, idx: [usize; 3], what: &str) -> Result<Option<OddsTriple>, String> {
    let raw = idx.map(|i| cell(row, i));
    if raw.iter().any(|r| r.is_empty()) {
        return Ok(None);
    }
    let mut vals = [0.0; 3];
    for (v, r) in vals.iter_mut().zip(raw) {
        *v = r
            .parse::<f64>()
            .map_err(|_| format!("{what} odds: unparseable value `{r}`"))?;
    }
    let t = OddsTriple::new(vals[0], vals[1], vals[2]);
    if !t.is_valid() {
        return Err(format!("{what} odds must all exceed 1.0, got {raw:?}"));
    }
    Ok(Some(t))
}

fn parse_row(
    row: &csv::StringRecord,
    layout: &Layout,
    schema: &ColumnSchema,
    default_season: &str,
) -> Result<MatchRecord, String> {
    let season_id = layout
        .season
        .map(|i| cell(row, i))
        .filter(|s| !s.is_empty())
        .unwrap_or(default_season)
        .to_string();
    let raw_date = cell(row, layout.col(&schema.date));
    let round_date = schema
        .date_format
        .parse(raw_date)
        .ok_or_else(|| format!("unparseable date `{raw_date}`"))?;
    let home_team = normalize_team(cell(row, layout.col(&schema.home_team)));
    let away_team = normalize_team(cell(row, layout.col(&schema.away_team)));

    let ft = parse_pair(row, layout, &schema.ft_home_goals, &schema.ft_away_goals)?;
    let ht = parse_pair(row, layout, &schema.ht_home_goals, &schema.ht_away_goals)?;
    let result = |name: &str| {
        let raw = cell(row, layout.col(name));
        MatchResult::from_code(raw).ok_or_else(|| format!("column {name}: unknown result `{raw}`"))
    };
    let ft_result = result(&schema.ft_result)?;
    let ht_result = result(&schema.ht_result)?;

    let stats = MatchStats {
        shots: parse_pair(row, layout, &schema.home_shots, &schema.away_shots)?,
        shots_on_target: parse_pair(
            row,
            layout,
            &schema.home_shots_on_target,
            &schema.away_shots_on_target,
        )?,
        corners: parse_pair(row, layout, &schema.home_corners, &schema.away_corners)?,
        fouls: parse_pair(row, layout, &schema.home_fouls, &schema.away_fouls)?,
        yellow_cards: parse_pair(row, layout, &schema.home_yellow, &schema.away_yellow)?,
        red_cards: parse_pair(row, layout, &schema.home_red, &schema.away_red)?,
    };

    let mut books = BTreeMap::new();
    for (b, idx) in &layout.books {
        if let Some(t) = parse_triple(row, *idx, b.label())? {
            books.insert(*b, t);
        }
    }
    let average = match layout.average {
        Some(idx) => parse_triple(row, idx, "average")?,
        None => None,
    };
    let odds = match average {
        Some(average) => OddsBoard {
            per_bookmaker: books,
            average,
        },
        None => OddsBoard::from_books(books).ok_or("no odds for any bookmaker")?,
    };

    Ok(MatchRecord {
        season_id,
        round_date,
        home_team,
        away_team,
        ft_home_goals: ft.home,
        ft_away_goals: ft.away,
        ft_result,
        ht_home_goals: ht.home,
        ht_away_goals: ht.away,
        ht_result,
        stats,
        odds,
    })
}

/// Writes records in the default column convention, including a `Season`
/// column and every bookmaker block (empty cells for absent books).
pub fn write_season_csv<W: Write>(records: &[MatchRecord], writer: W) -> Result<()> {
    let schema = ColumnSchema::default();
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = vec![schema.season.clone(), schema.date.clone()];
    header.extend(schema.mandatory()[1..].iter().map(|s| s.to_string()));
    for b in Bookmaker::ALL {
        let c = &schema.bookmakers[&b];
        header.extend([c.home.clone(), c.draw.clone(), c.away.clone()]);
    }
    let avg = &schema.average[0];
    header.extend([avg.home.clone(), avg.draw.clone(), avg.away.clone()]);
    w.write_record(&header)?;

    for r in records {
        let s = &r.stats;
        let mut row: Vec<String> = vec![
            r.season_id.clone(),
            r.round_date.format("%d/%m/%Y").to_string(),
            r.home_team.clone(),
            r.away_team.clone(),
            r.ft_home_goals.to_string(),
            r.ft_away_goals.to_string(),
            r.ft_result.code().into(),
            r.ht_home_goals.to_string(),
            r.ht_away_goals.to_string(),
            r.ht_result.code().into(),
        ];
        for p in [s.shots, s.shots_on_target, s.corners, s.fouls, s.yellow_cards, s.red_cards] {
            row.push(p.home.to_string());
            row.push(p.away.to_string());
        }
        for b in Bookmaker::ALL {
            match r.odds.book(b) {
                Some(t) => row.extend(t.as_array().map(|v| v.to_string())),
                None => row.extend(std::iter::repeat_n(String::new(), 3)),
            }
        }
        row.extend(r.odds.average.as_array().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "Div,Date,HomeTeam,AwayTeam,FTHG,FTAG,FTR,HTHG,HTAG,HTR,HS,AS,HST,AST,HF,AF,HC,AC,HY,AY,HR,AR,B365H,B365D,B365A,PSH,PSD,PSA,AvgH,AvgD,AvgA";

    fn parse(body: &str) -> Result<ParseReport> {
        let text = format!("{HEADER}\n{body}");
        parse_season_reader(text.as_bytes(), "2019-20", &ColumnSchema::default())
    }

    #[test]
    fn maps_fields_directly() {
        let rep = parse("E0,09/08/19,Liverpool,Norwich,2,1,H,1,0,H,15,12,7,5,9,9,11,2,0,2,0,0,1.14,9.5,21,1.15,9.8,22,1.14,9.0,19.5").unwrap();
        assert_eq!(rep.accepted, 1);
        let m = &rep.records[0];
        assert_eq!(m.ft_result, MatchResult::HomeWin);
        assert_eq!(m.home_team, "liverpool");
        assert_eq!(m.round_date, NaiveDate::from_ymd_opt(2019, 8, 9).unwrap());
        assert_eq!(m.stats.shots, Pair::new(15, 12));
        assert_eq!(m.stats.fouls, Pair::new(9, 9));
        assert_eq!(m.stats.corners, Pair::new(11, 2));
        assert_eq!(m.odds.per_bookmaker.len(), 2);
        assert_eq!(m.odds.average, OddsTriple::new(1.14, 9.0, 19.5));
    }

    #[test]
    fn inconsistent_result_is_rejected_with_row_index() {
        let rep = parse(
            "E0,09/08/19,A,B,1,1,D,0,0,D,5,5,2,2,9,9,3,3,1,1,0,0,2.5,3.2,2.9,2.5,3.2,2.9,2.5,3.2,2.9\n\
             E0,10/08/19,C,D,1,2,H,0,0,D,5,5,2,2,9,9,3,3,1,1,0,0,2.5,3.2,2.9,2.5,3.2,2.9,2.5,3.2,2.9",
        )
        .unwrap();
        assert_eq!((rep.accepted, rep.rejected), (1, 1));
        assert_eq!(rep.diagnostics[0].row, 2);
        assert!(rep.diagnostics[0].message.contains("inconsistent"));
    }

    #[test]
    fn missing_column_names_it() {
        let text = "Date,HomeTeam,AwayTeam,FTHG,FTAG\n01/01/20,a,b,1,0\n";
        let err = parse_season_reader(text.as_bytes(), "s", &ColumnSchema::default()).unwrap_err();
        match err {
            Error::Schema { column } => assert_eq!(column, "FTR"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_a_dataset_error() {
        let err = parse_season_reader("".as_bytes(), "s", &ColumnSchema::default()).unwrap_err();
        assert!(matches!(err, Error::Dataset(_)));
        let err = parse(" ").unwrap_err();
        assert!(matches!(err, Error::Dataset(_)));
    }

    #[test]
    fn unparseable_goals_and_odds_are_row_errors() {
        let rep = parse(
            "E0,09/08/19,A,B,x,1,H,0,0,D,5,5,2,2,9,9,3,3,1,1,0,0,2.5,3.2,2.9,2.5,3.2,2.9,2.5,3.2,2.9\n\
             E0,09/08/19,A,B,1,1,D,0,0,D,5,5,2,2,9,9,3,3,1,1,0,0,abc,3.2,2.9,2.5,3.2,2.9,2.5,3.2,2.9\n\
             E0,09/08/19,A,B,1,1,D,0,0,D,5,5,2,2,9,9,3,3,1,1,0,0,0.9,3.2,2.9,2.5,3.2,2.9,2.5,3.2,2.9",
        )
        .unwrap();
        assert_eq!((rep.accepted, rep.rejected), (0, 3));
    }

    #[test]
    fn gaps_in_books_are_kept_and_average_backfilled() {
        let text = "Date,HomeTeam,AwayTeam,FTHG,FTAG,FTR,HTHG,HTAG,HTR,HS,AS,HST,AST,HF,AF,HC,AC,HY,AY,HR,AR,B365H,B365D,B365A,PSH,PSD,PSA\n\
                    01/02/2020,a,b,0,0,D,0,0,D,5,5,2,2,9,9,3,3,1,1,0,0,2.0,3.0,4.0,2.2,3.4,3.6\n\
                    02/02/2020,c,d,0,0,D,0,0,D,5,5,2,2,9,9,3,3,1,1,0,0,,,,2.2,3.4,3.6\n";
        let rep = parse_season_reader(text.as_bytes(), "s", &ColumnSchema::default()).unwrap();
        assert_eq!(rep.accepted, 2);
        let avg = rep.records[0].odds.average;
        assert!((avg.home - 2.1).abs() < 1e-12 && (avg.away - 3.8).abs() < 1e-12);
        assert_eq!(rep.records[1].odds.per_bookmaker.len(), 1);
        assert_eq!(rep.records[1].odds.average, OddsTriple::new(2.2, 3.4, 3.6));
    }

    #[test]
    fn bb_average_synonym_accepted() {
        let text = "Date,HomeTeam,AwayTeam,FTHG,FTAG,FTR,HTHG,HTAG,HTR,HS,AS,HST,AST,HF,AF,HC,AC,HY,AY,HR,AR,BbAvH,BbAvD,BbAvA\n\
                    01/02/2020,a,b,0,0,D,0,0,D,5,5,2,2,9,9,3,3,1,1,0,0,2.0,3.0,4.0\n";
        let rep = parse_season_reader(text.as_bytes(), "s", &ColumnSchema::default()).unwrap();
        assert_eq!(rep.records[0].odds.average, OddsTriple::new(2.0, 3.0, 4.0));
        assert!(rep.records[0].odds.per_bookmaker.is_empty());
    }

    #[test]
    fn rows_sorted_by_date() {
        let rep = parse(
            "E0,10/08/19,C,D,1,0,H,0,0,D,5,5,2,2,9,9,3,3,1,1,0,0,2.5,3.2,2.9,2.5,3.2,2.9,2.5,3.2,2.9\n\
             E0,09/08/19,A,B,1,0,H,0,0,D,5,5,2,2,9,9,3,3,1,1,0,0,2.5,3.2,2.9,2.5,3.2,2.9,2.5,3.2,2.9",
        )
        .unwrap();
        assert_eq!(rep.records[0].home_team, "a");
        assert_eq!(rep.records[1].home_team, "c");
    }

    #[test]
    fn date_layouts() {
        let d = NaiveDate::from_ymd_opt(2019, 8, 9).unwrap();
        assert_eq!(DateFormat::DayMonthShortYear.parse("09/08/19"), Some(d));
        assert_eq!(DateFormat::DayMonthShortYear.parse("09/08/2019"), Some(d));
        assert_eq!(DateFormat::DayMonthLongYear.parse("9/8/2019"), Some(d));
        assert_eq!(DateFormat::DayMonthLongYear.parse("09/08/19"), Some(d));
        assert_eq!(
            DateFormat::DayMonthShortYear.parse("01/01/99"),
            NaiveDate::from_ymd_opt(1999, 1, 1)
        );
        assert_eq!(DateFormat::DayMonthShortYear.parse("2019-08-09"), None);
        assert_eq!(DateFormat::DayMonthShortYear.parse("31/02/19"), None);
    }
}
