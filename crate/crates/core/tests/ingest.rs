use std::path::PathBuf;

use kelly_strata::ingest::{
    parse_season_csv, parse_season_reader, read_jsonl, synthesize_league, write_jsonl, write_season_csv,
    ColumnSchema, DateFormat, MatchRecord, MatchResult,
};
use kelly_strata::Error;
use proptest::prelude::*;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn to_csv(records: &[MatchRecord]) -> String {
    let mut buf = Vec::new();
    write_season_csv(records, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn sample_file_parses_in_date_order() {
    let report = parse_season_csv(&fixture("sample_season.csv"), &ColumnSchema::default()).unwrap();
    assert_eq!(report.accepted, 10);
    assert_eq!(report.rejected, 0);
    assert_eq!(report.records.len(), 10);
    assert!(report.records.windows(2).all(|w| w[0].round_date <= w[1].round_date));
    // The file is stored newest first; the opening-day 1-4 lands among the first two.
    let opener = report.records[..2].iter().find(|m| m.home_team == "team 01").unwrap();
    assert_eq!((opener.ft_home_goals, opener.ft_away_goals), (1, 4));
    assert_eq!(opener.ft_result, MatchResult::AwayWin);
    assert_eq!(opener.away_team, "team 04");
}

#[test]
fn missing_column_is_a_schema_error_naming_it() {
    let err = parse_season_csv(&fixture("missing_column.csv"), &ColumnSchema::default()).unwrap_err();
    assert!(matches!(&err, Error::Schema { column } if column == "FTHG"), "{err}");
    assert!(err.is_usage());
    assert!(err.to_string().contains("FTHG"));
}

#[test]
fn inconsistent_result_rejects_only_that_row() {
    let report = parse_season_csv(&fixture("inconsistent_row.csv"), &ColumnSchema::default()).unwrap();
    assert_eq!(report.accepted, 2);
    assert_eq!(report.rejected, 1);
    assert_eq!(report.diagnostics[0].row, 2);
}

#[test]
fn empty_input_is_a_dataset_error() {
    let err = parse_season_reader("".as_bytes(), "s", &ColumnSchema::default()).unwrap_err();
    assert!(matches!(err, Error::Dataset(_)), "{err}");
}

#[test]
fn long_and_short_years_both_parse() {
    let short = DateFormat::DayMonthShortYear.parse("05/01/19").unwrap();
    let long = DateFormat::DayMonthShortYear.parse("05/01/2019").unwrap();
    assert_eq!(short, long);
    assert_eq!(short.to_string(), "2019-01-05");
    assert_eq!(DateFormat::DayMonthLongYear.parse("05/01/2019"), Some(long));
    assert!(DateFormat::default().parse("2019-01-05").is_none());
}

#[test]
fn missing_average_columns_fall_back_to_book_mean() {
    let records = synthesize_league(4, 1, 2).unwrap();
    let text = to_csv(&records);
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let keep: Vec<usize> = (0..header.len()).filter(|&i| !header[i].starts_with("Avg")).collect();
    let stripped: String = text
        .lines()
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            keep.iter().map(|&i| cells[i]).collect::<Vec<_>>().join(",") + "\n"
        })
        .collect();
    let parsed = parse_season_reader(stripped.as_bytes(), "s", &ColumnSchema::default()).unwrap();
    for m in &parsed.records {
        let n = m.odds.per_bookmaker.len() as f64;
        let mean: f64 = m.odds.per_bookmaker.values().map(|o| o.home).sum::<f64>() / n;
        assert!((m.odds.average.home - mean).abs() < 1e-9);
    }
}

#[test]
fn jsonl_round_trip() {
    let records = synthesize_league(6, 1, 4).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.jsonl");
    write_jsonl(&path, &records).unwrap();
    let back: Vec<MatchRecord> = read_jsonl(&path).unwrap();
    assert_eq!(back, records);
}

#[test]
fn generator_counts_and_determinism() {
    assert_eq!(synthesize_league(20, 1, 7).unwrap().len(), 380);
    let four = synthesize_league(4, 1, 9).unwrap();
    assert_eq!(four.len(), 12);
    for team in ["team 01", "team 02", "team 03", "team 04"] {
        assert_eq!(four.iter().filter(|m| m.home_team == team).count(), 3);
        assert_eq!(four.iter().filter(|m| m.away_team == team).count(), 3);
    }
    assert_eq!(to_csv(&synthesize_league(6, 2, 3).unwrap()), to_csv(&synthesize_league(6, 2, 3).unwrap()));
    assert!(matches!(synthesize_league(5, 1, 1), Err(Error::Argument(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn csv_round_trip_is_structural(teams in prop::sample::select(vec![4usize, 6, 8]), seasons in 1usize..3, seed in any::<u64>()) {
        let records = synthesize_league(teams, seasons, seed).unwrap();
        for m in &records {
            prop_assert!(m.validate().is_ok());
        }
        let first = to_csv(&records);
        let parsed = parse_season_reader(first.as_bytes(), "x", &ColumnSchema::default()).unwrap();
        prop_assert_eq!(parsed.rejected, 0);
        prop_assert_eq!(&parsed.records, &records);
        prop_assert_eq!(to_csv(&parsed.records), first);
    }
}
