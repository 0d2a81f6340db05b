//! First principal component of 3-dimensional rows by power iteration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: [f64; 3],
    /// Unit-norm leading axis; its first non-zero component is positive.
    pub axis: [f64; 3],
    pub explained_variance_ratio: f64,
    /// Sample variance along the axis (largest covariance eigenvalue).
    pub variance: f64,
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn mat_vec(m: &[[f64; 3]; 3], v: &[f64; 3]) -> [f64; 3] {
    [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
}

fn normalized(v: [f64; 3]) -> Option<[f64; 3]> {
    let n = dot(&v, &v).sqrt();
    (n > 0.0 && n.is_finite()).then(|| v.map(|x| x / n))
}

fn orient(v: [f64; 3]) -> [f64; 3] {
    match v.iter().find(|x| x.abs() > 1e-12) {
        Some(x) if *x < 0.0 => v.map(|c| -c),
        _ => v,
    }
}

/// Sample covariance (n - 1 denominator) of the rows.
pub fn covariance(rows: &[[f64; 3]]) -> ([f64; 3], [[f64; 3]; 3]) {
    let n = rows.len() as f64;
    let mut mean = [0.0; 3];
    for r in rows {
        for k in 0..3 {
            mean[k] += r[k] / n;
        }
    }
    let mut cov = [[0.0; 3]; 3];
    for r in rows {
        let c = [r[0] - mean[0], r[1] - mean[1], r[2] - mean[2]];
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += c[i] * c[j];
            }
        }
    }
    let denom = (n - 1.0).max(1.0);
    for row in cov.iter_mut() {
        for v in row.iter_mut() {
            *v /= denom;
        }
    }
    (mean, cov)
}

fn power_iteration(cov: &[[f64; 3]; 3], start: [f64; 3]) -> Option<([f64; 3], f64)> {
    let mut v = normalized(start)?;
    for _ in 0..10_000 {
        let next = normalized(mat_vec(cov, &v))?;
        let diff = (0..3).map(|k| (next[k] - v[k]).abs()).fold(0.0, f64::max);
        v = next;
        if diff < 1e-15 {
            break;
        }
    }
    Some((v, dot(&v, &mat_vec(cov, &v))))
}

/// Fits the leading principal axis.
pub fn pca_fit(rows: &[[f64; 3]]) -> Result<PcaModel> {
    if rows.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "PCA needs at least 2 rows, got {}",
            rows.len()
        )));
    }
    let (mean, cov) = covariance(rows);
    let trace = cov[0][0] + cov[1][1] + cov[2][2];
    if !(trace > 1e-300) {
        return Ok(PcaModel {
            mean,
            axis: [1.0, 0.0, 0.0],
            explained_variance_ratio: 0.0,
            variance: 0.0,
        });
    }
    // Several starts guard against one orthogonal to the leading axis.
    let starts = [
        [1.0, 0.5, 0.25],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 1.0, 1.0],
    ];
    let (axis, lambda) = starts
        .iter()
        .filter_map(|s| power_iteration(&cov, *s))
        .fold(None::<([f64; 3], f64)>, |best, cand| match best {
            Some(b) if b.1 >= cand.1 => Some(b),
            _ => Some(cand),
        })
        .unwrap_or(([1.0, 0.0, 0.0], 0.0));
    Ok(PcaModel {
        mean,
        axis: orient(axis),
        explained_variance_ratio: (lambda / trace).clamp(0.0, 1.0),
        variance: lambda,
    })
}

/// Scalar coordinate of `triple` along the model's axis.
pub fn pca_project(model: &PcaModel, triple: &[f64; 3]) -> f64 {
    let c = [
        triple[0] - model.mean[0],
        triple[1] - model.mean[1],
        triple[2] - model.mean[2],
    ];
    dot(&c, &model.axis)
}
