//! Generates a synthetic league, writes it as a football-data style CSV,
//! parses it back and prints the round trip. A trailing non-numeric
//! argument names a file to keep the CSV in.
//!
//!     cargo run --example synthetic_league -- [teams] [seasons] [seed] [out.csv]

use kelly_strata::ingest::{
    parse_season_reader, synthesize_league_with, write_season_csv, ColumnSchema, SynthConfig,
};

fn main() -> kelly_strata::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let cfg = SynthConfig {
        team_count: args.first().copied().unwrap_or(20) as usize,
        seasons: args.get(1).copied().unwrap_or(2) as usize,
        seed: args.get(2).copied().unwrap_or(7),
        ..SynthConfig::default()
    };
    let league = synthesize_league_with(&cfg)?;
    println!(
        "{} teams x {} seasons -> {} matches",
        cfg.team_count,
        cfg.seasons,
        league.matches.len()
    );

    let mut buf = Vec::new();
    write_season_csv(&league.matches, &mut buf)?;
    let text = String::from_utf8(buf).expect("utf-8");
    for line in text.lines().take(3) {
        println!("  {}", &line[..line.len().min(110)]);
    }

    let parsed = parse_season_reader(text.as_bytes(), "synthetic", &ColumnSchema::default())?;
    println!("re-parsed: {} accepted, {} rejected", parsed.accepted, parsed.rejected);
    assert_eq!(parsed.records, league.matches);
    if let Some(path) = std::env::args().skip(1).find(|a| a.parse::<u64>().is_err()) {
        std::fs::write(&path, &text).expect("write CSV");
        println!("wrote {path}");
    }

    let home_wins = league.matches.iter().filter(|m| m.ft_home_goals > m.ft_away_goals).count();
    let mean_truth: f64 =
        league.true_probabilities.iter().map(|p| p[0]).sum::<f64>() / league.matches.len() as f64;
    println!(
        "home win share {:.3} (generator mean {:.3})",
        home_wins as f64 / league.matches.len() as f64,
        mean_truth
    );
    Ok(())
}
