//! Offense–defense ratings over a season's goal matrix.
//!
//! `goals[i][j]` holds the goals team `j` scored against team `i`. The
//! ratings are the fixed point of
//! `o_j = Σ_i goals[i][j] / d_i` and `d_j = Σ_i goals[j][i] / o_i`,
//! reported with `Σ o_j = team_count`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OdmConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for OdmConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalMatrix {
    pub teams: Vec<String>,
    pub goals: Vec<Vec<f64>>,
}

impl GoalMatrix {
    pub fn new(teams: Vec<String>, goals: Vec<Vec<f64>>) -> Result<Self> {
        let n = teams.len();
        if goals.len() != n || goals.iter().any(|row| row.len() != n) {
            return Err(Error::Argument(format!(
                "goal matrix must be {n}x{n} to match the team list"
            )));
        }
        if goals.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Argument("goal matrix entries must be non-negative".into()));
        }
        Ok(Self { teams, goals })
    }

    pub fn zeros(teams: Vec<String>) -> Self {
        let n = teams.len();
        Self {
            teams,
            goals: vec![vec![0.0; n]; n],
        }
    }

    pub fn len(&self) -> usize {
        self.teams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.teams.is_empty()
    }

    pub fn scored(&self, j: usize) -> f64 {
        self.goals.iter().map(|row| row[j]).sum()
    }

    pub fn conceded(&self, j: usize) -> f64 {
        self.goals[j].iter().sum()
    }

    /// First team that never scored or never conceded, with the reason.
    pub fn degenerate_team(&self) -> Option<(usize, &'static str)> {
        (0..self.len()).find_map(|j| {
            if self.scored(j) <= 0.0 {
                Some((j, "scored no goals"))
            } else if self.conceded(j) <= 0.0 {
                Some((j, "conceded no goals"))
            } else {
                None
            }
        })
    }

    /// Add-one smoothing on every degenerate team's off-diagonal row/column.
    pub fn smooth_degenerate(&mut self) {
        let n = self.len();
        for j in 0..n {
            if self.scored(j) <= 0.0 {
                for i in (0..n).filter(|&i| i != j) {
                    self.goals[i][j] += 1.0;
                }
            }
            if self.conceded(j) <= 0.0 {
                for i in (0..n).filter(|&i| i != j) {
                    self.goals[j][i] += 1.0;
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdmRatings {
    pub teams: Vec<String>,
    pub offense: Vec<f64>,
    pub defense: Vec<f64>,
    pub iterations: usize,
}

impl OdmRatings {
    pub fn get(&self, team: &str) -> Option<(f64, f64)> {
        let i = self.teams.iter().position(|t| t == team)?;
        Some((self.offense[i], self.defense[i]))
    }

    /// Largest violation of the offense fixed-point equation.
    pub fn residual(&self, matrix: &GoalMatrix) -> f64 {
        let n = matrix.len();
        (0..n)
            .map(|j| {
                let o: f64 = (0..n).map(|i| matrix.goals[i][j] / self.defense[i]).sum();
                (o - self.offense[j]).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Alternating fixed-point iteration from all-ones.
pub fn odm_fit(matrix: &GoalMatrix, cfg: &OdmConfig) -> Result<OdmRatings> {
    let n = matrix.len();
    if n == 0 {
        return Err(Error::Argument("empty goal matrix".into()));
    }
    if matrix.goals.len() != n || matrix.goals.iter().any(|r| r.len() != n) {
        return Err(Error::Argument("goal matrix is not square".into()));
    }
    if let Some((j, reason)) = matrix.degenerate_team() {
        return Err(Error::DegenerateTeam {
            team: matrix.teams[j].clone(),
            reason: reason.into(),
        });
    }
    let a = &matrix.goals;
    let mut offense = vec![1.0; n];
    let mut defense = vec![1.0; n];
    let mut iterations = 0;
    for _ in 0..cfg.max_iter {
        iterations += 1;
        let mut next_o: Vec<f64> = (0..n)
            .map(|j| (0..n).map(|i| a[i][j] / defense[i]).sum())
            .collect();
        // Fix the scale before deriving defence so both vectors stay paired.
        let scale = n as f64 / next_o.iter().sum::<f64>();
        next_o.iter_mut().for_each(|o| *o *= scale);
        let next_d: Vec<f64> = (0..n)
            .map(|j| (0..n).map(|i| a[j][i] / next_o[i]).sum())
            .collect();
        let change = offense
            .iter()
            .zip(&next_o)
            .chain(defense.iter().zip(&next_d))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        offense = next_o;
        defense = next_d;
        if change < cfg.tol {
            break;
        }
    }
    Ok(OdmRatings {
        teams: matrix.teams.clone(),
        offense,
        defense,
        iterations,
    })
}

/// Rating for a team without history, interpolated linearly against goals
/// between two reference teams `(goals, rating)`.
pub fn odm_new_team(goals_new: f64, below: (f64, f64), above: (f64, f64)) -> Result<f64> {
    let (g1, r1) = below;
    let (g2, r2) = above;
    if g1 == g2 {
        return Err(Error::DegenerateNeighbor { goals: g1 });
    }
    Ok(r1 + (goals_new - g1) * (r2 - r1) / (g2 - g1))
}
