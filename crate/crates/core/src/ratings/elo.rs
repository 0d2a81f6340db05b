use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::MatchResult;

/// Elo constants. Defaults: base 10, scale 400, `k0 = 10`, `gamma = 1`,
/// every team starting at 1000.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EloConfig {
    pub c: f64,
    pub d: f64,
    pub k0: f64,
    pub gamma: f64,
    pub initial_rating: f64,
    /// Rating points per unit of the outcome-probability regression input.
    /// The regression coefficients apply per ten rating points by default.
    pub probability_scale: f64,
}

impl Default for EloConfig {
    fn default() -> Self {
        Self {
            c: 10.0,
            d: 400.0,
            k0: 10.0,
            gamma: 1.0,
            initial_rating: 1000.0,
            probability_scale: 10.0,
        }
    }
}

impl EloConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("c", self.c),
            ("d", self.d),
            ("k0", self.k0),
            ("gamma", self.gamma),
            ("probability_scale", self.probability_scale),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("elo.{name} must be positive, got {v}")));
            }
        }
        if !self.initial_rating.is_finite() {
            return Err(Error::Config("elo.initial_rating must be finite".into()));
        }
        Ok(())
    }

    /// Correction magnitude for an absolute goal difference.
    pub fn k_factor(&self, goal_diff_abs: u32) -> f64 {
        self.k0 * (1.0 + f64::from(goal_diff_abs)).powf(self.gamma)
    }
}

/// Expected scores `(home, away)`, logistic in the rating gap.
pub fn elo_expectation(r_home: f64, r_away: f64, cfg: &EloConfig) -> (f64, f64) {
    let e_home = 1.0 / (1.0 + cfg.c.powf((r_away - r_home) / cfg.d));
    (e_home, 1.0 - e_home)
}

/// Post-match ratings. The update is zero-sum.
pub fn elo_update(
    r_home: f64,
    r_away: f64,
    ft_result: MatchResult,
    goal_diff_abs: u32,
    cfg: &EloConfig,
) -> Result<(f64, f64)> {
    let consistent = match ft_result {
        MatchResult::Draw => goal_diff_abs == 0,
        _ => goal_diff_abs > 0,
    };
    if !consistent {
        return Err(Error::Argument(format!(
            "result {ft_result} with goal difference {goal_diff_abs}"
        )));
    }
    let (e_home, _) = elo_expectation(r_home, r_away, cfg);
    let delta = cfg.k_factor(goal_diff_abs) * (ft_result.home_score() - e_home);
    Ok((r_home + delta, r_away - delta))
}

/// Home/draw/away probabilities from a pair of ratings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeProbabilities {
    pub p_home: f64,
    pub p_draw: f64,
    pub p_away: f64,
}

impl OutcomeProbabilities {
    pub fn as_array(&self) -> [f64; 3] {
        [self.p_home, self.p_draw, self.p_away]
    }
}

const P_MIN: f64 = 0.01;
const P_MAX: f64 = 0.98;

/// Unclamped regression values for a scaled rating difference `delta`.
pub fn raw_elo_probabilities(delta: f64) -> OutcomeProbabilities {
    let p_home = 0.448 + 0.0053 * delta;
    let p_away = 0.245 + 0.0039 * -delta;
    OutcomeProbabilities {
        p_home,
        p_draw: 1.0 - (p_home + p_away),
        p_away,
    }
}

/// Outcome probabilities with `delta = (r_home - r_away) / probability_scale`.
///
/// Home and away values are clamped to `[0.01, 0.98]` first, the draw is the
/// remainder (itself clamped), and the triple is renormalised to sum to 1.
pub fn elo_probabilities(r_home: f64, r_away: f64, cfg: &EloConfig) -> OutcomeProbabilities {
    let raw = raw_elo_probabilities((r_home - r_away) / cfg.probability_scale);
    let p_home = raw.p_home.clamp(P_MIN, P_MAX);
    let p_away = raw.p_away.clamp(P_MIN, P_MAX);
    let p_draw = (1.0 - p_home - p_away).clamp(P_MIN, P_MAX);
    let total = p_home + p_draw + p_away;
    OutcomeProbabilities {
        p_home: p_home / total,
        p_draw: p_draw / total,
        p_away: p_away / total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const CFG: EloConfig = EloConfig {
        c: 10.0,
        d: 400.0,
        k0: 10.0,
        gamma: 1.0,
        initial_rating: 1000.0,
        probability_scale: 10.0,
    };

    #[test]
    fn equal_ratings_split_evenly() {
        assert_eq!(elo_expectation(1234.0, 1234.0, &CFG), (0.5, 0.5));
    }

    #[test]
    fn hundred_point_edge() {
        // 1 / (1 + 10^(-0.25)), evaluated independently.
        let (e, _) = elo_expectation(1500.0, 1400.0, &CFG);
        assert!((e - 0.640_065).abs() < 1e-6);
    }

    #[test]
    fn draw_between_equals_is_a_no_op() {
        let (h, a) = elo_update(1000.0, 1000.0, MatchResult::Draw, 0, &CFG).unwrap();
        assert_eq!((h, a), (1000.0, 1000.0));
    }

    #[test]
    fn two_goal_home_win_between_equals() {
        let (h, a) = elo_update(1000.0, 1000.0, MatchResult::HomeWin, 2, &CFG).unwrap();
        assert_eq!(h, 1015.0);
        assert_eq!(a, 985.0);
    }

    #[test]
    fn inconsistent_margin_rejected() {
        assert!(elo_update(1000.0, 1000.0, MatchResult::Draw, 1, &CFG).is_err());
        assert!(elo_update(1000.0, 1000.0, MatchResult::HomeWin, 0, &CFG).is_err());
    }

    #[test]
    fn zero_difference_regression_values() {
        let p = raw_elo_probabilities(0.0);
        assert_eq!((p.p_home, p.p_away), (0.448, 0.245));
        assert!((p.p_draw - 0.307).abs() < 1e-15);
        assert!((p.p_home + p.p_draw + p.p_away - 1.0).abs() < 1e-15);
        let q = elo_probabilities(1000.0, 1000.0, &CFG);
        assert!((q.p_home - 0.448).abs() < 1e-12 && (q.p_away - 0.245).abs() < 1e-12);
    }

    #[test]
    fn fifty_unit_difference() {
        let p = raw_elo_probabilities(50.0);
        assert!((p.p_home - 0.713).abs() < 1e-12);
        assert!((p.p_away - 0.05).abs() < 1e-12);
        assert!((p.p_draw - 0.237).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn expectation_is_antisymmetric(a in 0.0..3000.0f64, b in 0.0..3000.0f64) {
            let (e1, x1) = elo_expectation(a, b, &CFG);
            let (e2, _) = elo_expectation(b, a, &CFG);
            prop_assert!((e1 + x1 - 1.0).abs() < 1e-15);
            prop_assert!((e1 - (1.0 - e2)).abs() < 1e-12);
        }

        #[test]
        fn expectation_monotone_in_home_rating(a in 500.0..1500.0f64, gap in 0.01..400.0f64, b in 500.0..1500.0f64) {
            prop_assert!(elo_expectation(a + gap, b, &CFG).0 > elo_expectation(a, b, &CFG).0);
        }

        #[test]
        fn larger_margin_moves_further(a in 800.0..1200.0f64, b in 800.0..1200.0f64, g in 1u32..6) {
            let (h1, _) = elo_update(a, b, MatchResult::HomeWin, g, &CFG).unwrap();
            let (h2, _) = elo_update(a, b, MatchResult::HomeWin, g + 1, &CFG).unwrap();
            prop_assert!(h2 > h1 && h1 > a);
            let (l1, _) = elo_update(a, b, MatchResult::AwayWin, g, &CFG).unwrap();
            let (l2, _) = elo_update(a, b, MatchResult::AwayWin, g + 1, &CFG).unwrap();
            prop_assert!(l2 < l1 && l1 < a);
        }

        #[test]
        fn probabilities_are_valid(diff in -5000.0..5000.0f64) {
            let p = elo_probabilities(1000.0 + diff, 1000.0, &CFG);
            let s = p.p_home + p.p_draw + p.p_away;
            prop_assert!((s - 1.0).abs() < 1e-9);
            for v in p.as_array() {
                prop_assert!((P_MIN - 1e-12..=P_MAX + 1e-12).contains(&v));
            }
        }
    }
}
