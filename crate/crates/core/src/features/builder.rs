use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::pca::{pca_fit, pca_project, PcaModel};
use super::{FeatureVector, PCA_FEATURES};
use crate::error::Result;
use crate::ingest::{MatchKey, MatchRecord};
use crate::kelly::f99;
use crate::ratings::{elo_probabilities, RatingsConfig, RatingsEngine, TeamLine, TeamSnapshot};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    /// Matches a team must have played before its rows are emitted.
    pub min_prior_matches: usize,
    /// Completed seasons required before any row is emitted.
    pub min_completed_seasons: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            min_prior_matches: 6,
            min_completed_seasons: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedMatch {
    pub key: MatchKey,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct FeatureBuild {
    pub rows: Vec<FeatureVector>,
    pub skipped: Vec<SkippedMatch>,
}

/// Builds one feature row per match with enough history, in input order.
///
/// Matches sharing a date are snapshotted together before any of them is
/// applied, so a row never sees a result from its own match day. The
/// compressed `one_*` features use a PCA fitted on all matches of the
/// seasons completed before the row's season; training code may refit them
/// per window with [`super::refit_pca`].
pub fn build_features(
    matches: &[MatchRecord],
    ratings: &RatingsConfig,
    cfg: &FeatureConfig,
) -> Result<FeatureBuild> {
    ratings.validate()?;
    let mut engine = RatingsEngine::new(*ratings);
    let mut pending: Vec<(usize, FeatureVector)> = Vec::new();
    let mut skipped = Vec::new();
    // Probability triples per season ordinal, for the PCA fits.
    let mut triples: Vec<[Vec<[f64; 3]>; 3]> = Vec::new();
    let mut season_ordinal = Vec::with_capacity(matches.len());

    let mut start = 0;
    while start < matches.len() {
        let head = &matches[start];
        let end = start
            + matches[start..]
                .iter()
                .take_while(|m| m.round_date == head.round_date && m.season_id == head.season_id)
                .count();
        let batch = &matches[start..end];
        for m in batch {
            engine.prepare(m)?;
        }
        let ordinal = engine.completed_seasons();
        if triples.len() <= ordinal {
            triples.resize_with(ordinal + 1, Default::default);
        }
        for m in batch {
            let home = engine.snapshot(&m.home_team).expect("prepared team");
            let away = engine.snapshot(&m.away_team).expect("prepared team");
            let values = assemble(m, &home, &away, ratings);
            for (slot, (_, inputs)) in PCA_FEATURES.iter().enumerate() {
                triples[ordinal][slot].push(inputs.map(|n| values[n]));
            }
            season_ordinal.push(ordinal);
            match warm_up_gap(&home, &away, ordinal, cfg) {
                Some(reason) => {
                    log::debug!("skipping {} v {} on {}: {reason}", m.home_team, m.away_team, m.round_date);
                    skipped.push(SkippedMatch { key: m.key(), reason });
                }
                None => pending.push((ordinal, FeatureVector::from_static(m.key(), values, m.ft_result))),
            }
        }
        for m in batch {
            engine.apply(m)?;
        }
        start = end;
    }

    let mut models: BTreeMap<usize, Vec<Option<PcaModel>>> = BTreeMap::new();
    let mut rows = Vec::with_capacity(pending.len());
    for (ordinal, mut row) in pending {
        let fitted = models.entry(ordinal).or_insert_with(|| {
            (0..PCA_FEATURES.len())
                .map(|slot| {
                    let pool: Vec<[f64; 3]> =
                        triples[..ordinal].iter().flat_map(|s| s[slot].iter().copied()).collect();
                    pca_fit(&pool).ok()
                })
                .collect()
        });
        for (slot, (target, inputs)) in PCA_FEATURES.iter().enumerate() {
            let t = inputs.map(|n| row.values[n]);
            // Without a completed season to fit on, the axis is undefined;
            // the warm-up rules normally prevent reaching here.
            let v = fitted[slot].as_ref().map_or(0.0, |m| pca_project(m, &t));
            row.values.insert(target.to_string(), v);
        }
        rows.push(row);
    }
    log::info!("built {} feature rows, skipped {}", rows.len(), skipped.len());
    Ok(FeatureBuild { rows, skipped })
}

fn warm_up_gap(home: &TeamSnapshot, away: &TeamSnapshot, completed: usize, cfg: &FeatureConfig) -> Option<String> {
    if completed < cfg.min_completed_seasons {
        return Some(format!("only {completed} completed season(s)"));
    }
    for (side, s) in [("home", home), ("away", away)] {
        if s.matches_played < cfg.min_prior_matches {
            return Some(format!("{side} team has {} prior match(es)", s.matches_played));
        }
        if s.last_season.is_none() {
            return Some(format!("{side} team has no last-season record"));
        }
    }
    if home.all_time.home.played == 0 {
        return Some("home team has no prior home match".into());
    }
    if away.all_time.away.played == 0 {
        return Some("away team has no prior away match".into());
    }
    None
}

fn mean_of(lines: &[TeamLine], f: impl Fn(&TeamLine) -> u32) -> f64 {
    if lines.is_empty() {
        return 0.0;
    }
    lines.iter().map(|l| f64::from(f(l))).sum::<f64>() / lines.len() as f64
}

fn sum_of(lines: &[TeamLine], f: impl Fn(&TeamLine) -> u32) -> f64 {
    lines.iter().map(|l| f64::from(f(l))).sum()
}

/// Population standard deviation of two values.
fn spread(a: f64, b: f64) -> f64 {
    (a - b).abs() / 2.0
}

fn rate(x: Option<f64>) -> f64 {
    x.unwrap_or(0.0)
}

/// Every feature except the PCA projections, from pre-match snapshots.
fn assemble(m: &MatchRecord, h: &TeamSnapshot, a: &TeamSnapshot, cfg: &RatingsConfig) -> BTreeMap<&'static str, f64> {
    let mut v = BTreeMap::new();
    let (hr, ar) = (&h.recent, &a.recent);

    let gd = |l: &[TeamLine]| sum_of(l, |x| x.goals_for) - sum_of(l, |x| x.goals_against);
    let gd_mean = |l: &[TeamLine]| if l.is_empty() { 0.0 } else { gd(l) / l.len() as f64 };
    v.insert("AvgGoalDiff", gd_mean(hr) - gd_mean(ar));
    v.insert("TotalGoalDiff", gd(hr) - gd(ar));

    let elo = elo_probabilities(h.elo, a.elo, &cfg.elo);
    v.insert("HomeELO", h.elo);
    v.insert("AwayELO", a.elo);
    v.insert("ELOsta", spread(h.elo, a.elo));
    v.insert("ELOHomeW", elo.p_home);
    v.insert("ELOAwayW", elo.p_away);
    v.insert("ELODraw", elo.p_draw);

    let ht = elo_probabilities(h.half_time_elo, a.half_time_elo, &cfg.elo);
    v.insert("HomeHELO", h.half_time_elo);
    v.insert("AwayHELO", a.half_time_elo);
    v.insert("HELOSta", spread(h.half_time_elo, a.half_time_elo));
    v.insert("ELOHHomeW", ht.p_home);
    v.insert("ELOHAwayW", ht.p_away);
    v.insert("ELOHDrawW", ht.p_draw);

    let (hp, ap) = (f64::from(h.season_points), f64::from(a.season_points));
    v.insert("HomeTeamPoint", hp);
    v.insert("AwayTeamPoint", ap);
    v.insert("PointDiff", hp - ap);

    let avg = &m.odds.average;
    let r = f99(avg);
    v.insert("AvgHOddPro", r / avg.home);
    v.insert("AvgDOddPro", r / avg.draw);
    v.insert("AvgAOddPro", r / avg.away);

    v.insert("HomeOff", h.odm_offense);
    v.insert("HomeDef", h.odm_defense);
    v.insert("AwayOff", a.odm_offense);
    v.insert("AwayDef", a.odm_defense);
    v.insert("Offsta", h.odm_offense - a.odm_offense);
    v.insert("Defsta", h.odm_defense - a.odm_defense);

    let stat_spread = |f: fn(&TeamLine) -> u32| spread(mean_of(hr, f), mean_of(ar, f));
    v.insert("AvgShotSta", stat_spread(|l| l.shots));
    v.insert("AvgTargetSta", stat_spread(|l| l.shots_on_target));
    v.insert("AvgCornerSta", stat_spread(|l| l.corners));
    v.insert("AvgFoulSta", stat_spread(|l| l.fouls));
    let accuracy = |l: &[TeamLine]| {
        let shots = sum_of(l, |x| x.shots);
        if shots > 0.0 {
            sum_of(l, |x| x.shots_on_target).min(shots) / shots
        } else {
            0.0
        }
    };
    v.insert("ShotAccSta", spread(accuracy(hr), accuracy(ar)));

    v.insert("HomeHWin", rate(h.all_time.home.win_rate()));
    v.insert("HomeHDraw", rate(h.all_time.home.draw_rate()));
    v.insert("AwayAWin", rate(a.all_time.away.win_rate()));
    v.insert("AwayADraw", rate(a.all_time.away.draw_rate()));
    v.insert("HomeWin", rate(h.all_time.overall.win_rate()));
    v.insert("HomeDraw", rate(h.all_time.overall.draw_rate()));
    v.insert("AwayWin", rate(a.all_time.overall.win_rate()));
    v.insert("AwayDraw", rate(a.all_time.overall.draw_rate()));
    let (hl, al) = (h.last_season.unwrap_or_default(), a.last_season.unwrap_or_default());
    v.insert("LSHW", rate(hl.win_rate()));
    v.insert("LSHD", rate(hl.draw_rate()));
    v.insert("LSAW", rate(al.win_rate()));
    v.insert("LSAD", rate(al.draw_rate()));

    v.insert("Ysta", mean_of(hr, |l| l.yellow_cards) - mean_of(ar, |l| l.yellow_cards));
    v.insert("Rsta", mean_of(hr, |l| l.red_cards) - mean_of(ar, |l| l.red_cards));

    v.insert("StreakH", h.streak);
    v.insert("StreakA", a.streak);
    v.insert("WStreakH", h.weighted_streak);
    v.insert("WStreakA", a.weighted_streak);

    // Placeholders, overwritten by the PCA projection.
    for (target, _) in PCA_FEATURES {
        v.insert(target, 0.0);
    }
    v
}

impl FeatureVector {
    pub(crate) fn from_static(key: MatchKey, values: BTreeMap<&'static str, f64>, label: crate::ingest::MatchResult) -> Self {
        Self {
            key,
            values: values.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            label,
        }
    }
}
