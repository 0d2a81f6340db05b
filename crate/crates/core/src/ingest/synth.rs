use std::collections::BTreeMap;

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::{Bookmaker, MatchRecord, MatchResult, MatchStats, OddsBoard, OddsTriple, Pair};
use crate::error::{Error, Result};

/// Generator knobs. Defaults give a league with a realistic home edge,
/// a ~5% bookmaker margin and a Kelly-type mix dominated by Type 3.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub team_count: usize,
    pub seasons: usize,
    pub seed: u64,
    pub first_year: i32,
    /// Spread of latent attack/defence strengths (log-goal scale).
    pub strength_spread: f64,
    /// Season-to-season random walk of the strengths.
    pub strength_drift: f64,
    pub home_advantage: f64,
    /// Bookmaker margin: implied probabilities sum to `1 + margin`.
    pub margin: f64,
    /// Noise on the market's view of the true probabilities.
    pub market_noise: f64,
    /// Per-book price noise at clarity 0 and clarity 1.
    pub book_noise_low: f64,
    pub book_noise_high: f64,
    /// How strongly match clarity sharpens the true outcome distribution.
    pub clarity_sharpening: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            team_count: 20,
            seasons: 4,
            seed: 7,
            first_year: 2001,
            strength_spread: 0.3,
            strength_drift: 0.05,
            home_advantage: 0.25,
            margin: 0.05,
            market_noise: 0.04,
            book_noise_low: 0.005,
            book_noise_high: 0.05,
            clarity_sharpening: 1.5,
        }
    }
}

/// Generated matches plus the generator's ground truth, index-aligned.
#[derive(Clone, Debug)]
pub struct SyntheticLeague {
    pub matches: Vec<MatchRecord>,
    /// True (home, draw, away) probabilities each result was drawn from.
    pub true_probabilities: Vec<[f64; 3]>,
    /// Per-match clarity in [0, 1]; high clarity sharpens outcomes and widens
    /// bookmaker disagreement.
    pub clarity: Vec<f64>,
}

/// Double round-robin league with default generator settings.
pub fn synthesize_league(team_count: usize, seasons: usize, seed: u64) -> Result<Vec<MatchRecord>> {
    let cfg = SynthConfig {
        team_count,
        seasons,
        seed,
        ..SynthConfig::default()
    };
    Ok(synthesize_league_with(&cfg)?.matches)
}

pub fn synthesize_league_with(cfg: &SynthConfig) -> Result<SyntheticLeague> {
    if cfg.team_count < 4 || cfg.team_count % 2 != 0 {
        return Err(Error::Argument(format!(
            "team_count must be even and at least 4, got {}",
            cfg.team_count
        )));
    }
    if cfg.seasons == 0 {
        return Err(Error::Argument("seasons must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.team_count;
    let names: Vec<String> = (1..=n).map(|i| format!("team {i:02}")).collect();
    let spread = Normal::new(0.0, cfg.strength_spread.max(1e-9)).expect("finite spread");
    let drift = Normal::new(0.0, cfg.strength_drift.max(1e-9)).expect("finite drift");
    let mut attack: Vec<f64> = (0..n).map(|_| spread.sample(&mut rng)).collect();
    let mut defence: Vec<f64> = (0..n).map(|_| spread.sample(&mut rng)).collect();

    let mut league = SyntheticLeague {
        matches: Vec::new(),
        true_probabilities: Vec::new(),
        clarity: Vec::new(),
    };
    for s in 0..cfg.seasons {
        if s > 0 {
            for v in attack.iter_mut().chain(defence.iter_mut()) {
                *v += drift.sample(&mut rng);
            }
        }
        let year = cfg.first_year + s as i32;
        let season_id = format!("{}-{:02}", year, (year + 1).rem_euclid(100));
        let start = NaiveDate::from_ymd_opt(year, 8, 10).expect("valid season start");
        for (round, fixtures) in double_round_robin(n).into_iter().enumerate() {
            let date = start
                .checked_add_days(Days::new(7 * round as u64))
                .expect("date in range");
            for (h, a) in fixtures {
                let (record, truth, clarity) = play(
                    cfg,
                    &mut rng,
                    &season_id,
                    date,
                    (&names[h], &names[a]),
                    (attack[h] - defence[a], attack[a] - defence[h]),
                );
                league.matches.push(record);
                league.true_probabilities.push(truth);
                league.clarity.push(clarity);
            }
        }
    }
    Ok(league)
}

/// Circle-method schedule: `2(n-1)` rounds of `n/2` fixtures, the second
/// half mirroring the first with venues swapped.
fn double_round_robin(n: usize) -> Vec<Vec<(usize, usize)>> {
    let mut ring: Vec<usize> = (0..n).collect();
    let mut first_half = Vec::with_capacity(n - 1);
    for round in 0..n - 1 {
        let fixtures: Vec<(usize, usize)> = (0..n / 2)
            .map(|i| {
                let (a, b) = (ring[i], ring[n - 1 - i]);
                if (round + i) % 2 == 0 {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect();
        first_half.push(fixtures);
        ring[1..].rotate_right(1);
    }
    let second_half: Vec<Vec<(usize, usize)>> = first_half
        .iter()
        .map(|r| r.iter().map(|&(h, a)| (a, h)).collect())
        .collect();
    first_half.into_iter().chain(second_half).collect()
}

fn poisson_pmf(lambda: f64, max: usize) -> Vec<f64> {
    let mut p = vec![(-lambda).exp()];
    for k in 1..=max {
        let prev = p[k - 1];
        p.push(prev * lambda / k as f64);
    }
    p
}

fn outcome_probabilities(lambda_home: f64, lambda_away: f64) -> [f64; 3] {
    let ph = poisson_pmf(lambda_home, 15);
    let pa = poisson_pmf(lambda_away, 15);
    let mut out = [0.0; 3];
    for (i, x) in ph.iter().enumerate() {
        for (j, y) in pa.iter().enumerate() {
            let r = MatchResult::from_goals(i as u32, j as u32);
            out[r.index()] += x * y;
        }
    }
    let total: f64 = out.iter().sum();
    out.map(|v| v / total)
}

fn normalize(p: [f64; 3]) -> [f64; 3] {
    let s: f64 = p.iter().sum();
    p.map(|v| v / s)
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn play(
    cfg: &SynthConfig,
    rng: &mut ChaCha8Rng,
    season_id: &str,
    date: NaiveDate,
    teams: (&str, &str),
    edges: (f64, f64),
) -> (MatchRecord, [f64; 3], f64) {
    let base = 1.35_f64.ln();
    let lambda_home = (base + cfg.home_advantage + edges.0).exp();
    let lambda_away = (base + edges.1).exp();
    let model = outcome_probabilities(lambda_home, lambda_away);

    let clarity: f64 = rng.random();
    let exponent = 1.0 + cfg.clarity_sharpening * clarity;
    let truth = normalize(model.map(|p| p.powf(exponent)));
    let u: f64 = rng.random();
    let result = if u < truth[0] {
        MatchResult::HomeWin
    } else if u < truth[0] + truth[1] {
        MatchResult::Draw
    } else {
        MatchResult::AwayWin
    };

    let home_goals_dist = Poisson::new(lambda_home).expect("positive rate");
    let away_goals_dist = Poisson::new(lambda_away).expect("positive rate");
    let mut goals = None;
    for _ in 0..500 {
        let h = home_goals_dist.sample(rng) as u32;
        let a = away_goals_dist.sample(rng) as u32;
        if MatchResult::from_goals(h, a) == result {
            goals = Some((h, a));
            break;
        }
    }
    let (fh, fa) = goals.unwrap_or(match result {
        MatchResult::HomeWin => (1, 0),
        MatchResult::Draw => (0, 0),
        MatchResult::AwayWin => (0, 1),
    });
    let half = |g: u32, rng: &mut ChaCha8Rng| -> u32 {
        if g == 0 {
            0
        } else {
            Binomial::new(u64::from(g), 0.45).expect("valid").sample(rng) as u32
        }
    };
    let (hh, ha) = (half(fh, rng), half(fa, rng));

    let count = |mean: f64, rng: &mut ChaCha8Rng| -> u32 {
        Poisson::new(mean.max(1e-6)).expect("positive rate").sample(rng) as u32
    };
    let shots_h = fh + count(7.0 + 3.0 * lambda_home, rng);
    let shots_a = fa + count(7.0 + 3.0 * lambda_away, rng);
    let on_target = |shots: u32, goals: u32, rng: &mut ChaCha8Rng| -> u32 {
        let extra = shots - goals;
        goals + Binomial::new(u64::from(extra), 0.28).expect("valid").sample(rng) as u32
    };
    let stats = MatchStats {
        shots: Pair::new(shots_h, shots_a),
        shots_on_target: Pair::new(on_target(shots_h, fh, rng), on_target(shots_a, fa, rng)),
        corners: Pair::new(
            count(4.0 + 1.2 * lambda_home, rng),
            count(4.0 + 1.2 * lambda_away, rng),
        ),
        fouls: Pair::new(count(10.5, rng), count(11.0, rng)),
        yellow_cards: Pair::new(count(1.5, rng), count(1.7, rng)),
        red_cards: Pair::new(count(0.05, rng), count(0.06, rng)),
    };

    let market_noise = Normal::new(0.0, cfg.market_noise.max(1e-9)).expect("finite");
    let market = normalize(truth.map(|p| p * market_noise.sample(rng).exp()));
    let sigma = cfg.book_noise_low + (cfg.book_noise_high - cfg.book_noise_low) * clarity;
    let book_noise = Normal::new(0.0, sigma.max(1e-9)).expect("finite");
    let mut books = BTreeMap::new();
    for b in Bookmaker::ALL {
        let price = market.map(|p| {
            let fair = 1.0 / (p * (1.0 + cfg.margin));
            round2((fair * book_noise.sample(rng).exp()).max(1.01))
        });
        books.insert(b, OddsTriple::new(price[0], price[1], price[2]));
    }
    let mut odds = OddsBoard::from_books(books).expect("six books");
    odds.average = OddsTriple::new(
        round2(odds.average.home).max(1.01),
        round2(odds.average.draw).max(1.01),
        round2(odds.average.away).max(1.01),
    );

    let record = MatchRecord {
        season_id: season_id.to_string(),
        round_date: date,
        home_team: teams.0.to_string(),
        away_team: teams.1.to_string(),
        ft_home_goals: fh,
        ft_away_goals: fa,
        ft_result: result,
        ht_home_goals: hh,
        ht_away_goals: ha,
        ht_result: MatchResult::from_goals(hh, ha),
        stats,
        odds,
    };
    (record, truth, clarity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn twenty_teams_one_season() {
        let m = synthesize_league(20, 1, 7).unwrap();
        assert_eq!(m.len(), 380);
    }

    #[test]
    fn four_teams_each_three_home_three_away() {
        let m = synthesize_league(4, 1, 99).unwrap();
        assert_eq!(m.len(), 12);
        let mut home: HashMap<&str, usize> = HashMap::new();
        let mut away: HashMap<&str, usize> = HashMap::new();
        for r in &m {
            *home.entry(&r.home_team).or_default() += 1;
            *away.entry(&r.away_team).or_default() += 1;
        }
        assert!(home.values().all(|&c| c == 3));
        assert!(away.values().all(|&c| c == 3));
    }

    #[test]
    fn every_pair_meets_home_and_away() {
        let m = synthesize_league(6, 1, 3).unwrap();
        let mut seen = std::collections::HashSet::new();
        for r in &m {
            assert!(seen.insert((r.home_team.clone(), r.away_team.clone())));
        }
        assert_eq!(seen.len(), 30);
    }

    #[test]
    fn deterministic_for_seed() {
        let a = serde_json::to_string(&synthesize_league(6, 2, 11).unwrap()).unwrap();
        let b = serde_json::to_string(&synthesize_league(6, 2, 11).unwrap()).unwrap();
        assert_eq!(a, b);
        let c = serde_json::to_string(&synthesize_league(6, 2, 12).unwrap()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn odd_team_count_rejected() {
        assert!(matches!(synthesize_league(5, 1, 1), Err(Error::Argument(_))));
        assert!(matches!(synthesize_league(2, 1, 1), Err(Error::Argument(_))));
        assert!(matches!(synthesize_league(4, 0, 1), Err(Error::Argument(_))));
    }

    #[test]
    fn output_validates_and_is_chronological() {
        let m = synthesize_league(8, 3, 5).unwrap();
        assert!(m.iter().all(|r| r.validate().is_ok()));
        assert!(m.windows(2).all(|w| w[0].round_date <= w[1].round_date));
    }

    #[test]
    fn schedule_has_no_double_booking() {
        for n in [4, 6, 10, 20] {
            for round in double_round_robin(n) {
                let mut teams: Vec<usize> = round.iter().flat_map(|&(h, a)| [h, a]).collect();
                teams.sort_unstable();
                teams.dedup();
                assert_eq!(teams.len(), n);
            }
        }
    }
}
