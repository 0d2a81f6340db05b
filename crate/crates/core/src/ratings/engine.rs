use std::collections::{BTreeMap, BTreeSet, VecDeque};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::elo::{elo_update, EloConfig};
use super::odm::{odm_fit, odm_new_team, GoalMatrix, OdmConfig, OdmRatings};
use super::streak::{streak, weighted_streak, STREAK_WINDOW};
use crate::error::{Error, Result};
use crate::ingest::{MatchRecord, MatchResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RatingsConfig {
    pub elo: EloConfig,
    pub odm: OdmConfig,
    pub streak_window: usize,
    /// Matches kept per team for rolling statistics.
    pub rolling_window: usize,
}

impl Default for RatingsConfig {
    fn default() -> Self {
        Self {
            elo: EloConfig::default(),
            odm: OdmConfig::default(),
            streak_window: STREAK_WINDOW,
            rolling_window: 6,
        }
    }
}

impl RatingsConfig {
    pub fn validate(&self) -> Result<()> {
        self.elo.validate()?;
        if !(self.odm.tol > 0.0) || self.odm.max_iter == 0 {
            return Err(Error::Config("odm.tol and odm.max_iter must be positive".into()));
        }
        if self.streak_window == 0 || self.rolling_window == 0 {
            return Err(Error::Config("streak and rolling windows must be positive".into()));
        }
        Ok(())
    }
}

/// Wins, draws and games played.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub wins: u32,
    pub draws: u32,
    pub played: u32,
}

impl Tally {
    fn record(&mut self, points: u8) {
        self.played += 1;
        match points {
            3 => self.wins += 1,
            1 => self.draws += 1,
            _ => {}
        }
    }

    pub fn win_rate(&self) -> Option<f64> {
        (self.played > 0).then(|| f64::from(self.wins) / f64::from(self.played))
    }

    pub fn draw_rate(&self) -> Option<f64> {
        (self.played > 0).then(|| f64::from(self.draws) / f64::from(self.played))
    }
}

/// Home, away and overall tallies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VenueTally {
    pub home: Tally,
    pub away: Tally,
    pub overall: Tally,
}

impl VenueTally {
    fn record(&mut self, at_home: bool, points: u8) {
        if at_home {
            self.home.record(points);
        } else {
            self.away.record(points);
        }
        self.overall.record(points);
    }
}

/// One match seen from a single team's side.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TeamLine {
    pub goals_for: u32,
    pub goals_against: u32,
    pub shots: u32,
    pub shots_on_target: u32,
    pub corners: u32,
    pub fouls: u32,
    pub yellow_cards: u32,
    pub red_cards: u32,
}

impl TeamLine {
    fn from_match(m: &MatchRecord, home: bool) -> Self {
        let s = &m.stats;
        let pick = |p: crate::ingest::Pair<u32>| if home { p.home } else { p.away };
        let (gf, ga) = if home {
            (m.ft_home_goals, m.ft_away_goals)
        } else {
            (m.ft_away_goals, m.ft_home_goals)
        };
        Self {
            goals_for: gf,
            goals_against: ga,
            shots: pick(s.shots),
            shots_on_target: pick(s.shots_on_target),
            corners: pick(s.corners),
            fouls: pick(s.fouls),
            yellow_cards: pick(s.yellow_cards),
            red_cards: pick(s.red_cards),
        }
    }
}

/// Evolving per-team state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeamRatings {
    pub elo: f64,
    pub half_time_elo: f64,
    pub season_points: u32,
    /// Points per match (0, 1 or 3), oldest first, across seasons.
    pub result_history: Vec<u8>,
    pub all_time: VenueTally,
    pub current_season: VenueTally,
    pub previous_season: Option<VenueTally>,
    pub season_goals_for: u32,
    pub season_goals_against: u32,
    pub recent: VecDeque<TeamLine>,
}

impl TeamRatings {
    fn new(elo: f64, half_time_elo: f64) -> Self {
        Self {
            elo,
            half_time_elo,
            season_points: 0,
            result_history: Vec::new(),
            all_time: VenueTally::default(),
            current_season: VenueTally::default(),
            previous_season: None,
            season_goals_for: 0,
            season_goals_against: 0,
            recent: VecDeque::new(),
        }
    }

    pub fn matches_played(&self) -> usize {
        self.result_history.len()
    }
}

/// Read-only pre-match view of one team.
#[derive(Clone, Debug, PartialEq)]
pub struct TeamSnapshot {
    pub elo: f64,
    pub half_time_elo: f64,
    pub odm_offense: f64,
    pub odm_defense: f64,
    pub season_points: u32,
    pub streak: f64,
    pub weighted_streak: f64,
    pub matches_played: usize,
    pub all_time: VenueTally,
    /// The team's record in the previous season, or the fallback described on
    /// [`RatingsEngine::snapshot`].
    pub last_season: Option<Tally>,
    pub recent: Vec<TeamLine>,
}

/// Row of the per-round ratings export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatingRow {
    pub season: String,
    pub date: NaiveDate,
    pub team: String,
    pub elo: f64,
    pub half_time_elo: f64,
    pub odm_offense: Option<f64>,
    pub odm_defense: Option<f64>,
    pub points: u32,
}

/// Single-writer rating state machine. Feed matches in date order through
/// [`RatingsEngine::apply`]; read pre-match state with
/// [`RatingsEngine::snapshot`].
#[derive(Clone, Debug)]
pub struct RatingsEngine {
    cfg: RatingsConfig,
    teams: BTreeMap<String, TeamRatings>,
    current_season: Option<String>,
    completed_seasons: usize,
    season_teams: BTreeSet<String>,
    previous_teams: BTreeSet<String>,
    /// Overall tally of the previous season's lowest-points team.
    weakest_last_season: Option<Tally>,
    goals: BTreeMap<(String, String), f64>,
    odm: Option<OdmRatings>,
}

impl RatingsEngine {
    pub fn new(cfg: RatingsConfig) -> Self {
        Self {
            cfg,
            teams: BTreeMap::new(),
            current_season: None,
            completed_seasons: 0,
            season_teams: BTreeSet::new(),
            previous_teams: BTreeSet::new(),
            weakest_last_season: None,
            goals: BTreeMap::new(),
            odm: None,
        }
    }

    pub fn config(&self) -> &RatingsConfig {
        &self.cfg
    }

    pub fn team(&self, name: &str) -> Option<&TeamRatings> {
        self.teams.get(name)
    }

    pub fn teams(&self) -> impl Iterator<Item = (&String, &TeamRatings)> {
        self.teams.iter()
    }

    pub fn current_season(&self) -> Option<&str> {
        self.current_season.as_deref()
    }

    /// Seasons fully consumed before the current one.
    pub fn completed_seasons(&self) -> usize {
        self.completed_seasons
    }

    /// Offense–defense ratings fitted on the previous season.
    pub fn odm(&self) -> Option<&OdmRatings> {
        self.odm.as_ref()
    }

    /// Registers the match's season and teams before any snapshot is taken.
    ///
    /// A season label change closes the running season. A team first seen
    /// after the first season starts at the lowest rating among last
    /// season's teams not yet seen this season.
    pub fn prepare(&mut self, m: &MatchRecord) -> Result<()> {
        if self.current_season.as_deref() != Some(m.season_id.as_str()) {
            if self.current_season.is_some() {
                self.close_season()?;
            }
            self.current_season = Some(m.season_id.clone());
        }
        for team in [&m.home_team, &m.away_team] {
            if !self.teams.contains_key(team) {
                let (elo, ht) = self.entry_ratings();
                self.teams.insert(team.clone(), TeamRatings::new(elo, ht));
            }
            self.season_teams.insert(team.clone());
        }
        Ok(())
    }

    fn entry_ratings(&self) -> (f64, f64) {
        let init = self.cfg.elo.initial_rating;
        if self.completed_seasons == 0 || self.previous_teams.is_empty() {
            return (init, init);
        }
        let unseen: Vec<&TeamRatings> = self
            .previous_teams
            .iter()
            .filter(|t| !self.season_teams.contains(*t))
            .filter_map(|t| self.teams.get(t))
            .collect();
        let pool: Vec<&TeamRatings> = if unseen.is_empty() {
            self.previous_teams.iter().filter_map(|t| self.teams.get(t)).collect()
        } else {
            unseen
        };
        let min_elo = pool.iter().map(|t| t.elo).fold(f64::INFINITY, f64::min);
        let min_ht = pool.iter().map(|t| t.half_time_elo).fold(f64::INFINITY, f64::min);
        (min_elo, min_ht)
    }

    fn close_season(&mut self) -> Result<()> {
        let names: Vec<String> = self.season_teams.iter().cloned().collect();
        let mut matrix = GoalMatrix::zeros(names.clone());
        let idx: BTreeMap<&str, usize> =
            names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        for ((scorer, victim), g) in &self.goals {
            if let (Some(&j), Some(&i)) = (idx.get(scorer.as_str()), idx.get(victim.as_str())) {
                matrix.goals[i][j] += g;
            }
        }
        if let Some((j, reason)) = matrix.degenerate_team() {
            log::info!("smoothing goal matrix: {} {reason}", names[j]);
            matrix.smooth_degenerate();
        }
        self.odm = if names.len() >= 2 {
            Some(odm_fit(&matrix, &self.cfg.odm)?)
        } else {
            None
        };

        self.weakest_last_season = names
            .iter()
            .filter_map(|n| self.teams.get(n).map(|t| (n, t)))
            .min_by(|a, b| {
                a.1.season_points
                    .cmp(&b.1.season_points)
                    .then_with(|| a.0.cmp(b.0))
            })
            .map(|(_, t)| t.current_season.overall);
        for team in self.teams.values_mut() {
            team.previous_season = None;
        }
        for n in &names {
            if let Some(t) = self.teams.get_mut(n) {
                t.previous_season = Some(t.current_season);
            }
        }
        for t in self.teams.values_mut() {
            t.current_season = VenueTally::default();
            t.season_points = 0;
            t.season_goals_for = 0;
            t.season_goals_against = 0;
        }
        self.previous_teams = self.season_teams.clone();
        self.season_teams.clear();
        self.goals.clear();
        self.completed_seasons += 1;
        Ok(())
    }

    fn odm_for(&self, team: &str) -> (f64, f64) {
        let Some(odm) = &self.odm else {
            return (1.0, 1.0);
        };
        if let Some(r) = odm.get(team) {
            return r;
        }
        // Reference teams: rated last season and seen this season.
        let refs: Vec<(&str, &TeamRatings, (f64, f64))> = self
            .season_teams
            .iter()
            .filter(|t| t.as_str() != team)
            .filter_map(|t| Some((t.as_str(), self.teams.get(t)?, odm.get(t)?)))
            .collect();
        let state = &self.teams[team];
        if refs.len() < 2 {
            let n = odm.offense.len() as f64;
            return (
                odm.offense.iter().sum::<f64>() / n,
                odm.defense.iter().sum::<f64>() / n,
            );
        }
        let interpolate = |goals: f64, key: &dyn Fn(&TeamRatings) -> f64, pick: &dyn Fn((f64, f64)) -> f64| {
            let mut pts: Vec<(f64, f64, &str)> =
                refs.iter().map(|(n, t, r)| (key(t), pick(*r), *n)).collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.2.cmp(b.2)));
            let pos = pts.iter().position(|p| p.0 > goals).unwrap_or(pts.len());
            let (lo, hi) = match pos {
                0 => (pts[0], pts[1]),
                p if p == pts.len() => (pts[p - 2], pts[p - 1]),
                p => (pts[p - 1], pts[p]),
            };
            let value = odm_new_team(goals, (lo.0, lo.1), (hi.0, hi.1))
                .unwrap_or((lo.1 + hi.1) / 2.0);
            value.max(1e-3)
        };
        let offense = interpolate(
            f64::from(state.season_goals_for),
            &|t| f64::from(t.season_goals_for),
            &|r| r.0,
        );
        let defense = interpolate(
            f64::from(state.season_goals_against),
            &|t| f64::from(t.season_goals_against),
            &|r| r.1,
        );
        (offense, defense)
    }

    /// Pre-match state of `team`. Call [`RatingsEngine::prepare`] first.
    ///
    /// Teams absent from the previous season report the previous season's
    /// lowest-points team record as their last-season tally.
    pub fn snapshot(&self, team: &str) -> Option<TeamSnapshot> {
        let t = self.teams.get(team)?;
        let (odm_offense, odm_defense) = self.odm_for(team);
        let last_season = if self.previous_teams.contains(team) {
            t.previous_season.map(|v| v.overall)
        } else {
            self.weakest_last_season
        };
        Some(TeamSnapshot {
            elo: t.elo,
            half_time_elo: t.half_time_elo,
            odm_offense,
            odm_defense,
            season_points: t.season_points,
            streak: streak(&t.result_history, self.cfg.streak_window),
            weighted_streak: weighted_streak(&t.result_history, self.cfg.streak_window),
            matches_played: t.matches_played(),
            all_time: t.all_time,
            last_season,
            recent: t.recent.iter().copied().collect(),
        })
    }

    /// Consumes a played match.
    pub fn apply(&mut self, m: &MatchRecord) -> Result<()> {
        self.prepare(m)?;
        let elo = &self.cfg.elo;
        let (h, a) = (&self.teams[&m.home_team], &self.teams[&m.away_team]);
        let (eh, ea) = elo_update(h.elo, a.elo, m.ft_result, m.goal_diff_abs(), elo)?;
        let (hh, ha) = elo_update(
            h.half_time_elo,
            a.half_time_elo,
            m.ht_result,
            m.ht_home_goals.abs_diff(m.ht_away_goals),
            elo,
        )?;
        let (home_pts, away_pts) = match m.ft_result {
            MatchResult::HomeWin => (3u8, 0u8),
            MatchResult::Draw => (1, 1),
            MatchResult::AwayWin => (0, 3),
        };
        let keep = self.cfg.rolling_window;
        for (team, at_home, pts, new_elo, new_ht) in [
            (&m.home_team, true, home_pts, eh, hh),
            (&m.away_team, false, away_pts, ea, ha),
        ] {
            let t = self.teams.get_mut(team).expect("prepared team");
            t.elo = new_elo;
            t.half_time_elo = new_ht;
            t.season_points += u32::from(pts);
            t.result_history.push(pts);
            t.all_time.record(at_home, pts);
            t.current_season.record(at_home, pts);
            let line = TeamLine::from_match(m, at_home);
            t.season_goals_for += line.goals_for;
            t.season_goals_against += line.goals_against;
            t.recent.push_back(line);
            while t.recent.len() > keep {
                t.recent.pop_front();
            }
        }
        *self
            .goals
            .entry((m.home_team.clone(), m.away_team.clone()))
            .or_default() += f64::from(m.ft_home_goals);
        *self
            .goals
            .entry((m.away_team.clone(), m.home_team.clone()))
            .or_default() += f64::from(m.ft_away_goals);
        Ok(())
    }

    /// Ratings table for the teams of the running season.
    pub fn table(&self, date: NaiveDate) -> Vec<RatingRow> {
        let season = self.current_season.clone().unwrap_or_default();
        self.season_teams
            .iter()
            .filter_map(|name| {
                let t = self.teams.get(name)?;
                let odm = self.odm.as_ref().map(|_| self.odm_for(name));
                Some(RatingRow {
                    season: season.clone(),
                    date,
                    team: name.clone(),
                    elo: t.elo,
                    half_time_elo: t.half_time_elo,
                    odm_offense: odm.map(|o| o.0),
                    odm_defense: odm.map(|o| o.1),
                    points: t.season_points,
                })
            })
            .collect()
    }

    /// Total Elo across all rated teams.
    pub fn total_elo(&self) -> f64 {
        self.teams.values().map(|t| t.elo).sum()
    }
}

/// Replays `matches` and returns the ratings table after each match day.
pub fn ratings_history(matches: &[MatchRecord], cfg: &RatingsConfig) -> Result<Vec<RatingRow>> {
    let mut engine = RatingsEngine::new(*cfg);
    let mut rows = Vec::new();
    let mut i = 0;
    while i < matches.len() {
        let date = matches[i].round_date;
        let mut j = i;
        while j < matches.len() && matches[j].round_date == date {
            engine.apply(&matches[j])?;
            j += 1;
        }
        rows.extend(engine.table(date));
        i = j;
    }
    Ok(rows)
}
