//! Multinomial logistic regression fitted by accelerated proximal gradient.

use serde::{Deserialize, Serialize};

use super::matrix::Standardizer;
use super::ClassifierSpec;
use crate::error::{Error, Result};

/// Convergence threshold on the proximal gradient mapping.
const GRADIENT_TOL: f64 = 1e-5;
/// Stop when the objective improves by less than this over a stall window.
const STALL_TOL: f64 = 1e-7;
const STALL_WINDOW: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Penalty {
    L1,
    L2,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct LogisticParams {
    pub penalty: Penalty,
    /// Per-class sample weights (home, draw, away), mean one.
    pub class_weight: [f64; 3],
    /// Inverse regularization strength.
    pub c: f64,
    pub max_iter: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            penalty: Penalty::L2,
            class_weight: [1.0; 3],
            c: 1.0,
            max_iter: 1000,
        }
    }
}

impl LogisticParams {
    pub fn from_spec(spec: &ClassifierSpec) -> Result<Self> {
        let penalty = match spec.text("penalty", "l2")?.as_str() {
            "l1" => Penalty::L1,
            "l2" => Penalty::L2,
            other => return Err(Error::Spec(format!("penalty `{other}` is not l1 or l2"))),
        };
        let c = spec.float("C", 1.0)?;
        if c <= 0.0 {
            return Err(Error::Spec("C must be positive".into()));
        }
        Ok(Self {
            penalty,
            class_weight: parse_class_weight(&spec.text("class_weight", "1:1:1")?)?,
            c,
            max_iter: spec.positive("max_iter", 1000)?,
        })
    }
}

/// Parses `"h:d:a"` into weights normalized to mean one.
pub(crate) fn parse_class_weight(s: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Spec(format!("class_weight `{s}` is not h:d:a")))?;
    let [h, d, a] = parts[..] else {
        return Err(Error::Spec(format!("class_weight `{s}` needs three parts")));
    };
    if [h, d, a].iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
        return Err(Error::Spec(format!("class_weight `{s}` must be positive")));
    }
    let mean = (h + d + a) / 3.0;
    Ok([h / mean, d / mean, a / mean])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    scaler: Standardizer,
    /// Class-major coefficients; the last entry of each class block is the intercept.
    weights: Vec<f64>,
    n_features: usize,
}

fn softmax(z: [f64; 3]) -> [f64; 3] {
    let m = z[0].max(z[1]).max(z[2]);
    let e = z.map(|v| (v - m).exp());
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}

fn scores(w: &[f64], row: &[f64]) -> [f64; 3] {
    let f = row.len();
    let mut z = [0.0; 3];
    for (c, zc) in z.iter_mut().enumerate() {
        let block = &w[c * (f + 1)..(c + 1) * (f + 1)];
        *zc = block[f] + block[..f].iter().zip(row).map(|(a, b)| a * b).sum::<f64>();
    }
    z
}

/// Smooth part of the training objective and its gradient: weighted mean
/// cross-entropy plus `l2 / 2` times the squared non-intercept weights.
pub fn logistic_objective(
    w: &[f64],
    x: &[Vec<f64>],
    y: &[usize],
    sample_weight: &[f64],
    l2: f64,
) -> (f64, Vec<f64>) {
    let f = x.first().map_or(0, Vec::len);
    let n = x.len().max(1) as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; w.len()];
    for ((row, &label), &sw) in x.iter().zip(y).zip(sample_weight) {
        let p = softmax(scores(w, row));
        loss -= sw * p[label].max(1e-300).ln();
        for c in 0..3 {
            let r = sw * (p[c] - if c == label { 1.0 } else { 0.0 });
            let block = &mut grad[c * (f + 1)..(c + 1) * (f + 1)];
            for (g, v) in block[..f].iter_mut().zip(row) {
                *g += r * v;
            }
            block[f] += r;
        }
    }
    loss /= n;
    grad.iter_mut().for_each(|g| *g /= n);
    if l2 > 0.0 {
        for c in 0..3 {
            for j in 0..f {
                let i = c * (f + 1) + j;
                loss += 0.5 * l2 * w[i] * w[i];
                grad[i] += l2 * w[i];
            }
        }
    }
    (loss, grad)
}

fn l1_norm(w: &[f64], f: usize) -> f64 {
    w.iter()
        .enumerate()
        .filter(|(i, _)| i % (f + 1) != f)
        .map(|(_, v)| v.abs())
        .sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Limited-memory BFGS with Armijo backtracking for the L2-penalized objective.
fn lbfgs(z: &[Vec<f64>], y: &[usize], sw: &[f64], l2: f64, max_iter: usize) -> Vec<f64> {
    const MEMORY: usize = 10;
    let dim = 3 * (z.first().map_or(0, Vec::len) + 1);
    let mut w = vec![0.0; dim];
    let (mut value, mut grad) = logistic_objective(&w, z, y, sw, l2);
    let mut history: std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)> = Default::default();
    for _ in 0..max_iter {
        if grad.iter().fold(0.0f64, |m, g| m.max(g.abs())) < GRADIENT_TOL {
            break;
        }
        // Two-loop recursion for the search direction.
        let mut q = grad.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, yv, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(yv).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        if let Some((s, yv, _)) = history.back() {
            let gamma = dot(s, yv) / dot(yv, yv);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, yv, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(yv, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut slope = -dot(&grad, &q);
        if slope >= 0.0 {
            history.clear();
            q = grad.clone();
            slope = -dot(&grad, &grad);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let cand: Vec<f64> = w.iter().zip(&q).map(|(wi, d)| wi - step * d).collect();
            let (v, g) = logistic_objective(&cand, z, y, sw, l2);
            if v <= value + 1e-4 * step * slope {
                accepted = Some((cand, v, g));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, v, g)) = accepted else {
            break;
        };
        let s: Vec<f64> = cand.iter().zip(&w).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 {
            if history.len() == MEMORY {
                history.pop_front();
            }
            history.push_back((s, yv, 1.0 / sy));
        }
        let improvement = value - v;
        w = cand;
        value = v;
        grad = g;
        if improvement < STALL_TOL * 1e-3 {
            break;
        }
    }
    w
}

/// Accelerated proximal gradient (FISTA with restarts) for the L1 penalty.
fn fista_l1(z: &[Vec<f64>], y: &[usize], sw: &[f64], l1: f64, max_iter: usize) -> Vec<f64> {
    let f = z.first().map_or(0, Vec::len);
    let prox = |v: &mut [f64], t: f64| {
        for (i, w) in v.iter_mut().enumerate() {
            if i % (f + 1) != f {
                *w = w.signum() * (w.abs() - t * l1).max(0.0);
            }
        }
    };
    let objective = |w: &[f64]| logistic_objective(w, z, y, sw, 0.0).0 + l1 * l1_norm(w, f);
    let mut w = vec![0.0; 3 * (f + 1)];
    let mut momentum = w.clone();
    let mut t = 1.0f64;
    let mut step = 1.0f64;
    let mut current = objective(&w);
    let mut checkpoint = current;
    for it in 1..=max_iter {
        let (fm, gm) = logistic_objective(&momentum, z, y, sw, 0.0);
        let mut cand;
        loop {
            cand = momentum.iter().zip(&gm).map(|(a, g)| a - step * g).collect::<Vec<_>>();
            prox(&mut cand, step);
            let diff: Vec<f64> = cand.iter().zip(&momentum).map(|(a, b)| a - b).collect();
            let bound = fm + dot(&diff, &gm) + dot(&diff, &diff) / (2.0 * step);
            if logistic_objective(&cand, z, y, sw, 0.0).0 <= bound + 1e-15 || step < 1e-12 {
                break;
            }
            step *= 0.5;
        }
        let value = objective(&cand);
        // Gradient-mapping norm: zero exactly at the penalized optimum.
        let mapping = cand
            .iter()
            .zip(&momentum)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / step;
        if value > current {
            // Restart the acceleration from the last accepted point.
            t = 1.0;
            momentum = w.clone();
            continue;
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        momentum = cand
            .iter()
            .zip(&w)
            .map(|(c, p)| c + (t - 1.0) / t_next * (c - p))
            .collect();
        w = cand;
        t = t_next;
        current = value;
        if mapping < GRADIENT_TOL {
            break;
        }
        if it % STALL_WINDOW == 0 {
            if checkpoint - current < STALL_TOL {
                break;
            }
            checkpoint = current;
        }
    }
    w
}

impl LogisticModel {
    pub(crate) fn fit(params: &LogisticParams, x: &[Vec<f64>], y: &[usize]) -> Result<Self> {
        let scaler = Standardizer::fit(x);
        let z = scaler.apply_all(x);
        let f = scaler.mean.len();
        let sw: Vec<f64> = y.iter().map(|&c| params.class_weight[c]).collect();
        let lambda = 1.0 / (params.c * x.len().max(1) as f64);
        let w = match params.penalty {
            Penalty::L2 => lbfgs(&z, y, &sw, lambda, params.max_iter),
            Penalty::L1 => fista_l1(&z, y, &sw, lambda, params.max_iter),
        };
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateFit("logistic regression diverged".into()));
        }
        Ok(Self {
            scaler,
            weights: w,
            n_features: f,
        })
    }

    pub(crate) fn proba(&self, row: &[f64]) -> [f64; 3] {
        softmax(scores(&self.weights, &self.scaler.apply(row)))
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }
}
