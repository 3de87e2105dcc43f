use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Whitening transform of the in-class covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct RcaModel {
    pub transform: DMatrix<f64>,
    pub lambda: f64,
}

impl RcaModel {
    pub fn identity(dim: usize) -> Self {
        RcaModel {
            transform: DMatrix::identity(dim, dim),
            lambda: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.transform.nrows()
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok((&self.transform * DVector::from_column_slice(v)).as_slice().to_vec())
    }

    /// Euclidean distance after the transform.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                found: b.len(),
            });
        }
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        Ok(self.apply(&diff)?.iter().map(|x| x * x).sum::<f64>().sqrt())
    }
}

/// `C = (1/p) Σ_j Σ_i (x_ji - m_j)(x_ji - m_j)^T` over labeled points.
pub fn in_class_covariance(points: &[(Vec<f64>, usize)]) -> Result<DMatrix<f64>> {
    let Some((first, _)) = points.first() else {
        return Err(Error::invalid("no points"));
    };
    let d = first.len();
    if d == 0 {
        return Err(Error::invalid("zero-dimensional points"));
    }
    let mut sums: std::collections::BTreeMap<usize, (DVector<f64>, usize)> = Default::default();
    for (x, c) in points {
        if x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: x.len() });
        }
        let e = sums.entry(*c).or_insert_with(|| (DVector::zeros(d), 0));
        e.0 += DVector::from_column_slice(x);
        e.1 += 1;
    }
    let mut cov = DMatrix::zeros(d, d);
    for (x, c) in points {
        let (s, n) = &sums[c];
        let diff = DVector::from_column_slice(x) - s / *n as f64;
        cov += &diff * diff.transpose();
    }
    Ok(cov / points.len() as f64)
}

/// Fit `W = (C + λI)^(-1/2)`. `lambda = None` uses `1e-3 · trace(C) / d`.
pub fn rca_fit(points: &[(Vec<f64>, usize)], lambda: Option<f64>) -> Result<RcaModel> {
    if points.len() < 2 {
        return Err(Error::invalid("RCA needs at least two points"));
    }
    let cov = in_class_covariance(points)?;
    let d = cov.nrows();
    let lambda = lambda.unwrap_or(1e-3 * cov.trace() / d as f64);
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::invalid("lambda must be non-negative"));
    }
    let reg = cov + DMatrix::identity(d, d) * lambda;
    let eig = SymmetricEigen::new(reg);
    let max = eig.eigenvalues.max().abs().max(1.0);
    let min = eig.eigenvalues.min();
    if min <= 1e-12 * max {
        return Err(Error::SingularCovariance(min));
    }
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| 1.0 / e.sqrt()));
    let w = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
    // symmetrize away rounding
    let transform = (&w + w.transpose()) * 0.5;
    Ok(RcaModel { transform, lambda })
}
