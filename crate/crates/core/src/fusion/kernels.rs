use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaussian kernel with peak value 1 at `mean`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianKernel {
    pub mean: f64,
    pub sigma: f64,
}

impl GaussianKernel {
    pub fn new(mean: f64, sigma: f64) -> Result<Self> {
        if sigma > 0.0 && sigma.is_finite() && mean.is_finite() {
            Ok(GaussianKernel { mean, sigma })
        } else {
            Err(Error::invalid(format!("kernel sigma must be positive, got {sigma}")))
        }
    }

    pub fn score(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sigma;
        (-0.5 * z * z).exp()
    }
}

/// Kernel on `t_start_b - t_end_a`; negative gaps (overlap) are allowed.
pub fn temporal_similarity(t_end_a: f64, t_start_b: f64, k: &GaussianKernel) -> f64 {
    k.score(t_start_b - t_end_a)
}

/// Kernel on the Euclidean norm of the size difference.
pub fn size_similarity(a: [f64; 3], b: [f64; 3], k: &GaussianKernel) -> f64 {
    let d = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    k.score(d)
}

/// Projective map from an image plane to the ground map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography(pub Matrix3<f64>);

impl Homography {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let det = m.determinant();
        if det.abs() <= 1e-12 || !det.is_finite() {
            return Err(Error::invalid(format!("homography is singular (det {det:e})")));
        }
        Ok(Homography(m))
    }

    pub fn from_row_slice(v: &[f64]) -> Result<Self> {
        if v.len() != 9 {
            return Err(Error::DimensionMismatch { expected: 9, found: v.len() });
        }
        Homography::new(Matrix3::from_row_slice(v))
    }

    pub fn identity() -> Self {
        Homography(Matrix3::identity())
    }

    pub fn project(&self, p: [f64; 2]) -> Result<[f64; 2]> {
        let h = self.0 * Vector3::new(p[0], p[1], 1.0);
        if h.z.abs() < 1e-12 {
            return Err(Error::invalid(format!("point ({}, {}) maps to infinity", p[0], p[1])));
        }
        Ok([h.x / h.z, h.y / h.z])
    }
}

/// Kernel on the map-plane distance between two projected image points.
pub fn spatial_similarity(
    loc_a: [f64; 2],
    loc_b: [f64; 2],
    h_a: &Homography,
    h_b: &Homography,
    k: &GaussianKernel,
) -> Result<f64> {
    let a = h_a.project(loc_a)?;
    let b = h_b.project(loc_b)?;
    Ok(k.score(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()))
}
