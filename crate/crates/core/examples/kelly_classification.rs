//! Kelly indices of a single odds board, then the Type 1/2/3 mix of a
//! synthetic league per season.
//!
//!     cargo run --example kelly_classification

use std::collections::BTreeMap;

use kelly_strata::ingest::{synthesize_league, Bookmaker, OddsBoard, OddsTriple};
use kelly_strata::kelly::{f99, kelly_indices, profile_matches, KellyProfile, KellyRule, MatchType};

fn main() -> kelly_strata::Result<()> {
    let books: BTreeMap<Bookmaker, OddsTriple> = [
        (Bookmaker::Bet365, OddsTriple::new(1.80, 3.60, 4.50)),
        (Bookmaker::Interwetten, OddsTriple::new(1.75, 3.50, 4.60)),
        (Bookmaker::BetAndWin, OddsTriple::new(1.85, 3.40, 4.40)),
        (Bookmaker::Pinnacle, OddsTriple::new(1.90, 3.70, 4.80)),
        (Bookmaker::VcBet, OddsTriple::new(1.80, 3.60, 4.75)),
        (Bookmaker::WilliamHill, OddsTriple::new(1.78, 3.50, 4.50)),
    ]
    .into_iter()
    .collect();
    let board = OddsBoard::from_books(books).expect("valid odds");
    let avg = board.average;
    println!(
        "average odds {:.3}/{:.3}/{:.3}, return rate F99 = {:.4}",
        avg.home,
        avg.draw,
        avg.away,
        f99(&avg)
    );
    for (book, odds) in &board.per_bookmaker {
        let k = kelly_indices(odds, &avg);
        println!("  {:<12} K = {:.4} {:.4} {:.4}", book.label(), k.home, k.draw, k.away);
    }
    let profile = KellyProfile::from_board(&board, KellyRule::Max)?;
    println!(
        "{} book(s) above one -> {}",
        profile.books_over_one,
        profile.match_type.label()
    );

    let matches = synthesize_league(20, 3, 7)?;
    let profiles = profile_matches(&matches, KellyRule::Max)?;
    let mut counts: BTreeMap<&str, [usize; 3]> = BTreeMap::new();
    for (m, p) in matches.iter().zip(&profiles) {
        let slot = MatchType::ALL.iter().position(|t| *t == p.match_type).unwrap();
        counts.entry(&m.season_id).or_default()[slot] += 1;
    }
    println!("season    Type1 Type2 Type3");
    for (season, c) in counts {
        println!("{season}  {:5} {:5} {:5}", c[0], c[1], c[2]);
    }
    Ok(())
}
