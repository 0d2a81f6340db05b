//! Elo, offense-defense and streak ratings, first by hand and then over a
//! whole synthetic season.
//!
//!     cargo run --example ratings_walkthrough

use kelly_strata::ingest::{synthesize_league, MatchResult};
use kelly_strata::ratings::{
    elo_expectation, elo_probabilities, elo_update, odm_fit, ratings_history, streak, weighted_streak,
    EloConfig, GoalMatrix, OdmConfig, RatingsConfig,
};

fn main() -> kelly_strata::Result<()> {
    let elo = EloConfig::default();
    let (e_home, e_away) = elo_expectation(1050.0, 1000.0, &elo);
    println!("expectation 1050 vs 1000: {e_home:.4} / {e_away:.4}");
    for gd in [1, 2, 4] {
        let (h, a) = elo_update(1050.0, 1000.0, MatchResult::AwayWin, gd, &elo)?;
        println!("  away win by {gd}: {h:.2} / {a:.2} (k = {:.1})", elo.k_factor(gd));
    }
    let p = elo_probabilities(1100.0, 1000.0, &elo);
    println!("outcome probabilities at +100: H {:.3} D {:.3} A {:.3}", p.p_home, p.p_draw, p.p_away);

    let teams: Vec<String> = ["north", "south", "east"].iter().map(|s| s.to_string()).collect();
    // goals[i][j]: goals team j scored against team i.
    let goals = vec![vec![0.0, 3.0, 1.0], vec![1.0, 0.0, 1.0], vec![2.0, 4.0, 0.0]];
    let matrix = GoalMatrix::new(teams, goals)?;
    let odm = odm_fit(&matrix, &OdmConfig::default())?;
    for (i, t) in odm.teams.iter().enumerate() {
        println!("ODM {t:>5}: offense {:.3} defense {:.3}", odm.offense[i], odm.defense[i]);
    }
    println!("  {} iterations, residual {:.2e}", odm.iterations, odm.residual(&matrix));

    // Results coded 0 = loss, 1 = draw, 3 = win, oldest first.
    let form = [3, 3, 1, 0, 3, 3];
    println!("streak {:.3}, weighted {:.3}", streak(&form, 6), weighted_streak(&form, 6));

    let matches = synthesize_league(8, 1, 3)?;
    let history = ratings_history(&matches, &RatingsConfig::default())?;
    let last = history.last().map(|r| r.date).expect("non-empty");
    let mut table: Vec<_> = history.iter().filter(|r| r.date == last).collect();
    table.sort_by(|a, b| b.elo.total_cmp(&a.elo));
    println!("final table after {} matches:", matches.len());
    for r in table {
        println!("  {:>4} elo {:7.1} points {:2}", r.team, r.elo, r.points);
    }
    Ok(())
}
