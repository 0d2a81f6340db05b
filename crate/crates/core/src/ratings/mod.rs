//! Team-strength ratings maintained in match order: Elo (full and half
//! time), offense–defense ratings, points and form streaks.

mod elo;
mod engine;
mod odm;
mod streak;

pub use elo::{
    elo_expectation, elo_probabilities, elo_update, raw_elo_probabilities, EloConfig,
    OutcomeProbabilities,
};
pub use engine::{
    ratings_history, RatingRow, RatingsConfig, RatingsEngine, Tally, TeamLine, TeamRatings,
    TeamSnapshot, VenueTally,
};
pub use odm::{odm_fit, odm_new_team, GoalMatrix, OdmConfig, OdmRatings};
pub use streak::{streak, weighted_streak, window as streak_window, STREAK_WINDOW};
