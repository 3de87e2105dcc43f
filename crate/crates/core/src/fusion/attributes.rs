use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Logistic calibration `p = 1 / (1 + exp(-(a·s + b)))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Logistic {
    pub a: f64,
    pub b: f64,
}

impl Default for Logistic {
    fn default() -> Self {
        Logistic { a: 1.0, b: 0.0 }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Logistic {
    pub fn apply(&self, s: f64) -> f64 {
        sigmoid(self.a * s + self.b)
    }

    /// Mean negative log-likelihood on labeled scores.
    pub fn nll(&self, data: &[(f64, bool)]) -> f64 {
        let eps = 1e-300;
        data.iter()
            .map(|&(s, y)| {
                let p = self.apply(s);
                -if y { (p + eps).ln() } else { (1.0 - p + eps).ln() }
            })
            .sum::<f64>()
            / data.len().max(1) as f64
    }
}

/// Mean of the `k` scores largest in magnitude (signed values averaged),
/// calibrated by `logistic`.
pub fn fuse_attribute_scores(scores: &[f64], k: usize, logistic: &Logistic) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::invalid("no attribute scores"));
    }
    if k == 0 {
        return Err(Error::invalid("K must be at least 1"));
    }
    let mut s = scores.to_vec();
    s.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    s.truncate(k);
    Ok(logistic.apply(s.iter().sum::<f64>() / s.len() as f64))
}

/// Magnitude at which a fit on separable data is stopped.
const LOGISTIC_GUARD: f64 = 50.0;

/// Maximum-likelihood logistic fit by gradient ascent from `(0, 0)`.
/// Scores are standardized internally for conditioning.
pub fn fit_logistic(data: &[(f64, bool)]) -> Result<Logistic> {
    if !data.iter().any(|d| d.1) || !data.iter().any(|d| !d.1) {
        return Err(Error::invalid("logistic fit needs both labels"));
    }
    let n = data.len() as f64;
    let mean = data.iter().map(|d| d.0).sum::<f64>() / n;
    let sd = (data.iter().map(|d| (d.0 - mean).powi(2)).sum::<f64>() / n).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    let z: Vec<(f64, f64)> = data.iter().map(|&(s, y)| ((s - mean) / sd, y as u8 as f64)).collect();
    let (mut a, mut b) = (0.0f64, 0.0f64);
    // the log-likelihood of standardized data has curvature at most 1/4 · (1 + max z²)
    let zmax = z.iter().map(|d| d.0 * d.0).fold(0.0, f64::max);
    let lr = 4.0 / (1.0 + zmax);
    for _ in 0..100_000 {
        let (mut ga, mut gb) = (0.0, 0.0);
        for &(x, y) in &z {
            let r = y - sigmoid(a * x + b);
            ga += r * x;
            gb += r;
        }
        ga /= n;
        gb /= n;
        a += lr * ga;
        b += lr * gb;
        if a.abs() > LOGISTIC_GUARD || b.abs() > LOGISTIC_GUARD {
            log::warn!("logistic fit stopped at magnitude guard; data look separable");
            break;
        }
        if ga.abs() < 1e-12 && gb.abs() < 1e-12 {
            break;
        }
    }
    // undo standardization: a·(s - mean)/sd + b
    Ok(Logistic {
        a: a / sd,
        b: b - a * mean / sd,
    })
}
