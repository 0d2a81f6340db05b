//! The 52-column feature catalogue assembled per upcoming match.

mod builder;
mod pca;

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{MatchKey, MatchResult};

pub use builder::{build_features, FeatureBuild, FeatureConfig, SkippedMatch};
pub use pca::{covariance, pca_fit, pca_project, PcaModel};

/// Feature names in export order.
pub const FEATURE_NAMES: [&str; 52] = [
    "AvgGoalDiff",
    "TotalGoalDiff",
    "HomeELO",
    "AwayELO",
    "ELOsta",
    "ELOHomeW",
    "ELOAwayW",
    "ELODraw",
    "one_ELO",
    "HomeHELO",
    "AwayHELO",
    "HELOSta",
    "ELOHHomeW",
    "ELOHAwayW",
    "ELOHDrawW",
    "one_HELO",
    "HomeTeamPoint",
    "AwayTeamPoint",
    "PointDiff",
    "AvgHOddPro",
    "AvgAOddPro",
    "AvgDOddPro",
    "one_Odd_Pro",
    "HomeOff",
    "HomeDef",
    "AwayOff",
    "AwayDef",
    "Offsta",
    "Defsta",
    "AvgShotSta",
    "AvgTargetSta",
    "ShotAccSta",
    "AvgCornerSta",
    "AvgFoulSta",
    "HomeHWin",
    "HomeHDraw",
    "AwayAWin",
    "AwayADraw",
    "HomeWin",
    "HomeDraw",
    "AwayWin",
    "AwayDraw",
    "LSHW",
    "LSHD",
    "LSAW",
    "LSAD",
    "Ysta",
    "Rsta",
    "StreakH",
    "StreakA",
    "WStreakH",
    "WStreakA",
];

/// Features bounded to `[0, 1]`.
pub const UNIT_INTERVAL_FEATURES: [&str; 24] = [
    "ELOHomeW", "ELOAwayW", "ELODraw", "ELOHHomeW", "ELOHAwayW", "ELOHDrawW", "AvgHOddPro",
    "AvgAOddPro", "AvgDOddPro", "ShotAccSta", "HomeHWin", "HomeHDraw", "AwayAWin", "AwayADraw",
    "HomeWin", "HomeDraw", "AwayWin", "AwayDraw", "LSHW", "LSHD", "LSAW", "LSAD", "StreakH",
    "StreakA",
];

/// The PCA-compressed features and the probability triples they compress.
pub const PCA_FEATURES: [(&str, [&str; 3]); 3] = [
    ("one_ELO", ["ELOHomeW", "ELODraw", "ELOAwayW"]),
    ("one_HELO", ["ELOHHomeW", "ELOHDrawW", "ELOHAwayW"]),
    ("one_Odd_Pro", ["AvgHOddPro", "AvgDOddPro", "AvgAOddPro"]),
];

pub fn catalogue() -> Vec<String> {
    FEATURE_NAMES.iter().map(|s| s.to_string()).collect()
}

/// Engineered features for one match plus its full-time result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub key: MatchKey,
    pub values: BTreeMap<String, f64>,
    pub label: MatchResult,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    fn triple(&self, names: &[&str; 3]) -> Option<[f64; 3]> {
        Some([self.get(names[0])?, self.get(names[1])?, self.get(names[2])?])
    }
}

/// Refits the three PCA features on `train` and rewrites them in `train`
/// and every slice of `others`.
pub fn refit_pca(train: &mut [FeatureVector], others: &mut [&mut [FeatureVector]]) -> Result<()> {
    for (target, inputs) in PCA_FEATURES {
        let rows: Vec<[f64; 3]> = train.iter().filter_map(|r| r.triple(&inputs)).collect();
        if rows.len() < 2 {
            continue;
        }
        let model = pca_fit(&rows)?;
        let rewrite = |r: &mut FeatureVector| {
            if let Some(t) = r.triple(&inputs) {
                r.values.insert(target.to_string(), pca_project(&model, &t));
            }
        };
        train.iter_mut().for_each(rewrite);
        for slice in others.iter_mut() {
            slice.iter_mut().for_each(rewrite);
        }
    }
    Ok(())
}

/// Writes the feature table: key columns, the catalogue, then `label`.
pub fn write_features_csv<W: Write>(rows: &[FeatureVector], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["season", "date", "home", "away"];
    header.extend(FEATURE_NAMES);
    header.push("label");
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.key.season.clone(),
            r.key.date.to_string(),
            r.key.home.clone(),
            r.key.away.clone(),
        ];
        for name in FEATURE_NAMES {
            rec.push(r.get(name).map(|v| v.to_string()).unwrap_or_default());
        }
        rec.push(r.label.code().into());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<features csv>", e))
}

/// Reads a feature table written by [`write_features_csv`]. Extra columns
/// become features; empty cells are treated as absent.
pub fn read_features_csv<R: Read>(reader: R) -> Result<Vec<FeatureVector>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let pos = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema { column: name.into() })
    };
    let (season, date, home, away, label) =
        (pos("season")?, pos("date")?, pos("home")?, pos("away")?, pos("label")?);
    let fixed = [season, date, home, away, label];
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row_err = |message: String| Error::Row { row: i + 1, message };
        let date = NaiveDate::parse_from_str(&rec[date], "%Y-%m-%d")
            .map_err(|e| row_err(format!("bad date: {e}")))?;
        let label = MatchResult::from_code(&rec[label])
            .ok_or_else(|| row_err(format!("bad label `{}`", &rec[label])))?;
        let mut values = BTreeMap::new();
        for (j, h) in headers.iter().enumerate() {
            if fixed.contains(&j) || rec[j].is_empty() {
                continue;
            }
            let v: f64 = rec[j]
                .parse()
                .map_err(|_| row_err(format!("column {h}: bad number `{}`", &rec[j])))?;
            values.insert(h.to_string(), v);
        }
        out.push(FeatureVector {
            key: MatchKey {
                season: rec[season].to_string(),
                date,
                home: rec[home].to_string(),
                away: rec[away].to_string(),
            },
            values,
            label,
        });
    }
    Ok(out)
}
