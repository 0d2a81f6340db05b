use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::ingest::MatchKey;

/// Row-major feature matrix with labels and keys.
pub(crate) struct Design {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
    pub keys: Vec<MatchKey>,
}

impl Design {
    pub fn new(rows: &[FeatureVector], features: &[String]) -> Result<Self> {
        let mut x = Vec::with_capacity(rows.len());
        for r in rows {
            let mut line = Vec::with_capacity(features.len());
            for f in features {
                let v = r.get(f).ok_or_else(|| Error::MissingFeature(f.clone()))?;
                line.push(v);
            }
            x.push(line);
        }
        Ok(Self {
            x,
            y: rows.iter().map(|r| r.label.index()).collect(),
            keys: rows.iter().map(|r| r.key.clone()).collect(),
        })
    }
}

/// Per-column centring and scaling fitted on training rows. Constant
/// columns keep unit scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let f = x.first().map_or(0, Vec::len);
        let n = x.len().max(1) as f64;
        let mut mean = vec![0.0; f];
        for row in x {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; f];
        for row in x {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub fn apply_all(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|r| self.apply(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardized_columns_have_zero_mean_unit_variance() {
        let x = vec![vec![1.0, 5.0], vec![3.0, 5.0], vec![5.0, 5.0]];
        let s = Standardizer::fit(&x);
        let z = s.apply_all(&x);
        let col: Vec<f64> = z.iter().map(|r| r[0]).collect();
        assert!(col.iter().sum::<f64>().abs() < 1e-12);
        assert!((col.iter().map(|v| v * v).sum::<f64>() / 3.0 - 1.0).abs() < 1e-12);
        assert!(z.iter().all(|r| r[1] == 0.0));
    }
}
