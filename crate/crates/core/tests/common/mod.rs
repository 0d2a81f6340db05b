#![allow(dead_code)]

use std::collections::HashMap;

use kelly_strata::features::{build_features, FeatureConfig, FeatureVector};
use kelly_strata::ingest::{synthesize_league, MatchRecord};
use kelly_strata::kelly::{profile_matches, KellyProfile, KellyRule, MatchType};
use kelly_strata::ratings::RatingsConfig;

pub struct League {
    pub matches: Vec<MatchRecord>,
    pub profiles: Vec<KellyProfile>,
    pub rows: Vec<FeatureVector>,
    pub types: Vec<MatchType>,
}

pub fn league(teams: usize, seasons: usize, seed: u64) -> League {
    league_from(synthesize_league(teams, seasons, seed).unwrap())
}

pub fn league_from(matches: Vec<MatchRecord>) -> League {
    let profiles = profile_matches(&matches, KellyRule::Max).unwrap();
    let rows = build_features(&matches, &RatingsConfig::default(), &FeatureConfig::default())
        .unwrap()
        .rows;
    let type_of: HashMap<_, _> = matches.iter().zip(&profiles).map(|(m, p)| (m.key(), p.match_type)).collect();
    let types = rows.iter().map(|r| type_of[&r.key]).collect();
    League { matches, profiles, rows, types }
}

/// First feature season for training, the rest for testing.
pub fn split_first_season(rows: &[FeatureVector]) -> (Vec<FeatureVector>, Vec<FeatureVector>) {
    let first = rows[0].key.season.clone();
    rows.iter().cloned().partition(|r| r.key.season == first)
}
