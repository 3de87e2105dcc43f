use serde::{Deserialize, Serialize};

use super::rca::RcaModel;
use crate::error::{Error, Result};

/// Dense grid of patch descriptors, row-major, with per-patch saliency and
/// relevance weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchGrid {
    pub rows: usize,
    pub cols: usize,
    pub features: Vec<Vec<f64>>,
    pub saliency: Vec<f64>,
    pub relevance: Vec<f64>,
}

impl PatchGrid {
    /// Grid with unit saliency and relevance.
    pub fn new(rows: usize, cols: usize, features: Vec<Vec<f64>>) -> Result<Self> {
        if features.len() != rows * cols || features.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: features.len(),
            });
        }
        let d = features[0].len();
        if let Some(f) = features.iter().find(|f| f.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: f.len() });
        }
        Ok(PatchGrid {
            rows,
            cols,
            saliency: vec![1.0; features.len()],
            relevance: vec![1.0; features.len()],
            features,
        })
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    /// Descriptor of the whole grid, patches stacked row-major.
    pub fn stacked(&self) -> Vec<f64> {
        self.features.concat()
    }

    fn validate(&self) -> Result<()> {
        let n = self.rows * self.cols;
        if self.features.len() != n || self.saliency.len() != n || self.relevance.len() != n {
            return Err(Error::invalid("patch grid arrays do not match its shape"));
        }
        if self.saliency.iter().chain(&self.relevance).any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite saliency or relevance"));
        }
        Ok(())
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Population variance of the distances from `patch` to its `k` nearest
/// reference patches, measured after `model` when given.
pub fn saliency_score(patch: &[f64], references: &[Vec<f64>], k: usize, model: Option<&RcaModel>) -> Result<f64> {
    if k == 0 || k > references.len() {
        return Err(Error::invalid(format!(
            "K = {k} needs 1..={} reference patches",
            references.len()
        )));
    }
    let mut d: Vec<f64> = references
        .iter()
        .map(|r| {
            if r.len() != patch.len() {
                return Err(Error::DimensionMismatch {
                    expected: patch.len(),
                    found: r.len(),
                });
            }
            match model {
                Some(m) => m.distance(patch, r),
                None => Ok(euclid(patch, r)),
            }
        })
        .collect::<Result<_>>()?;
    d.sort_by(f64::total_cmp);
    d.truncate(k);
    let mean = d.iter().sum::<f64>() / k as f64;
    Ok(d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / k as f64)
}

/// Set the saliency of every patch of `grid` against the patches at the same
/// position in `references`. Values are left unnormalized.
pub fn compute_saliency(grid: &mut PatchGrid, references: &[PatchGrid], k: usize, model: Option<&RcaModel>) -> Result<()> {
    for r in references {
        if r.rows != grid.rows || r.cols != grid.cols {
            return Err(Error::invalid("reference grid shape differs"));
        }
    }
    for i in 0..grid.len() {
        let refs: Vec<Vec<f64>> = references.iter().map(|r| r.features[i].clone()).collect();
        grid.saliency[i] = saliency_score(&grid.features[i], &refs, k, model)?;
    }
    Ok(())
}

/// Divide all saliency values by their maximum over `grids`.
pub fn normalize_saliency(grids: &mut [PatchGrid]) {
    let max = grids
        .iter()
        .flat_map(|g| g.saliency.iter().copied())
        .fold(0.0, f64::max);
    if max > 0.0 {
        for g in grids {
            for s in &mut g.saliency {
                *s /= max;
            }
        }
    }
}

/// Absolute sum of the first-column coefficients of the transform in the
/// coordinate block of one patch.
pub fn relevance_score(model: &RcaModel, patch: usize, patch_dim: usize) -> Result<f64> {
    let d = model.dim();
    if patch_dim == 0 || d % patch_dim != 0 {
        return Err(Error::invalid(format!("transform dimension {d} is not a multiple of {patch_dim}")));
    }
    if patch >= d / patch_dim {
        return Err(Error::invalid(format!("patch {patch} out of range")));
    }
    Ok((patch * patch_dim..(patch + 1) * patch_dim)
        .map(|r| model.transform[(r, 0)].abs())
        .sum())
}

/// Relevance of every patch block.
pub fn relevance_scores(model: &RcaModel, patch_dim: usize) -> Result<Vec<f64>> {
    if patch_dim == 0 {
        return Err(Error::invalid("patch dimension must be positive"));
    }
    (0..model.dim() / patch_dim)
        .map(|p| relevance_score(model, p, patch_dim))
        .collect()
}

/// Patch affinity `exp(-|a - b|² / (2 σ_d²))`.
pub fn patch_affinity(a: &[f64], b: &[f64], sigma_d: f64) -> f64 {
    let d = euclid(a, b);
    (-d * d / (2.0 * sigma_d * sigma_d)).exp()
}

/// Saliency- and relevance-weighted patch matching score of `p` against `q`.
/// Each patch of `p` is matched to the patch of `q` within `window`
/// (columns, rows) that maximizes its term
/// `S_p R_p d S_q R_q / (α + |S_p - S_q|)`.
pub fn appearance_similarity(p: &PatchGrid, q: &PatchGrid, alpha: f64, window: (usize, usize), sigma_d: f64) -> Result<f64> {
    p.validate()?;
    q.validate()?;
    if p.rows != q.rows || p.cols != q.cols {
        return Err(Error::invalid("patch grids differ in shape"));
    }
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    if alpha <= 0.0 || !alpha.is_finite() {
        return Err(Error::invalid("alpha must be positive"));
    }
    if sigma_d <= 0.0 {
        return Err(Error::invalid("sigma_d must be positive"));
    }
    Ok(weighted_match(p, q, alpha, window, |i, j| {
        patch_affinity(&p.features[i], &q.features[j], sigma_d)
    }))
}

/// Matching score with the patch affinity supplied by `d(i, j)`.
fn weighted_match(p: &PatchGrid, q: &PatchGrid, alpha: f64, window: (usize, usize), d: impl Fn(usize, usize) -> f64) -> f64 {
    let (dx, dy) = window;
    let mut total = 0.0;
    for m in 0..p.rows {
        for n in 0..p.cols {
            let i = p.index(m, n);
            let (sp, rp) = (p.saliency[i], p.relevance[i]);
            let mut best: f64 = 0.0;
            for mq in m.saturating_sub(dy)..=(m + dy).min(q.rows - 1) {
                for nq in n.saturating_sub(dx)..=(n + dx).min(q.cols - 1) {
                    let j = q.index(mq, nq);
                    let term = sp * rp * d(i, j) * q.saliency[j] * q.relevance[j] / (alpha + (sp - q.saliency[j]).abs());
                    best = best.max(term);
                }
            }
            total += best;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    #[test]
    fn saliency_examples() {
        let p = vec![0.0, 0.0];
        let same = vec![vec![0.0, 0.0]; 3];
        assert_eq!(saliency_score(&p, &same, 3, None).unwrap(), 0.0);
        let refs = vec![vec![3.0, 0.0], vec![0.0, 1.0], vec![0.0, 2.0], vec![10.0, 0.0]];
        assert_eq!(saliency_score(&p, &refs, 1, None).unwrap(), 0.0);
        assert!((saliency_score(&p, &refs, 3, None).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(saliency_score(&p, &refs, 5, None).is_err());
        assert!(saliency_score(&p, &refs, 0, None).is_err());
    }

    #[test]
    fn relevance_examples() {
        let id = RcaModel::identity(6);
        assert_eq!(relevance_scores(&id, 3).unwrap(), vec![1.0, 0.0]);
        let mut t = DMatrix::zeros(8, 8);
        t.column_mut(0).fill(0.5);
        let m = RcaModel { transform: t, lambda: 0.0 };
        assert_eq!(relevance_score(&m, 1, 4).unwrap(), 2.0);
        let t = DMatrix::from_row_slice(
            4,
            4,
            &[0.3, 9.0, 9.0, 9.0, -0.2, 9.0, 9.0, 9.0, 0.7, 9.0, 9.0, 9.0, -1.1, 9.0, 9.0, 9.0],
        );
        let m = RcaModel { transform: t, lambda: 0.0 };
        let r = relevance_scores(&m, 2).unwrap();
        assert!((r[0] - 0.5).abs() < 1e-15);
        assert!((r[1] - 1.8).abs() < 1e-15);
        assert!(relevance_score(&m, 2, 2).is_err());
    }

    fn grid(features: Vec<Vec<f64>>, rows: usize, cols: usize) -> PatchGrid {
        PatchGrid::new(rows, cols, features).unwrap()
    }

    #[test]
    fn identical_grids_score_count_over_alpha() {
        let g = grid((0..6).map(|i| vec![i as f64, 1.0]).collect(), 2, 3);
        let s = appearance_similarity(&g, &g, 0.5, (1, 0), 1.0).unwrap();
        assert!((s - 6.0 / 0.5).abs() < 1e-12);
        let mut z = g.clone();
        z.relevance = vec![0.0; 6];
        assert_eq!(appearance_similarity(&z, &g, 0.5, (1, 0), 1.0).unwrap(), 0.0);
        assert!(appearance_similarity(&g, &g, 0.0, (1, 0), 1.0).is_err());
    }

    #[test]
    fn two_by_two_brute_force() {
        let mut p = grid(vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]], 2, 2);
        let mut q = grid(vec![vec![1.0], vec![0.2], vec![2.5], vec![2.0]], 2, 2);
        p.saliency = vec![0.2, 0.9, 0.5, 0.4];
        p.relevance = vec![1.0, 0.5, 0.8, 0.3];
        q.saliency = vec![0.7, 0.1, 0.6, 0.95];
        q.relevance = vec![0.4, 1.0, 0.9, 0.6];
        let (alpha, sd) = (0.3, 0.8);
        // window (1, 0): each patch may match either patch of its own row
        let mut want = 0.0;
        for i in 0..4 {
            let row = i / 2;
            let mut best: f64 = 0.0;
            for j in [2 * row, 2 * row + 1] {
                let d = (-(p.features[i][0] - q.features[j][0]).powi(2) / (2.0 * sd * sd)).exp();
                let t = p.saliency[i] * p.relevance[i] * d * q.saliency[j] * q.relevance[j]
                    / (alpha + (p.saliency[i] - q.saliency[j]).abs());
                best = best.max(t);
            }
            want += best;
        }
        let got = appearance_similarity(&p, &q, alpha, (1, 0), sd).unwrap();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn normalization_divides_by_max() {
        let mut gs = vec![grid(vec![vec![0.0]; 2], 1, 2), grid(vec![vec![0.0]; 2], 1, 2)];
        gs[0].saliency = vec![1.0, 2.0];
        gs[1].saliency = vec![4.0, 0.0];
        normalize_saliency(&mut gs);
        assert_eq!(gs[0].saliency, vec![0.25, 0.5]);
        assert_eq!(gs[1].saliency, vec![1.0, 0.0]);
    }

    proptest! {
        #[test]
        fn monotone_in_patch_affinity(d in proptest::collection::vec(0.0f64..1.0, 36),
                                      s in proptest::collection::vec(0.0f64..1.0, 12),
                                      k in 0usize..36, bump in 0.0f64..1.0) {
            let mut p = grid(vec![vec![0.0]; 6], 2, 3);
            let mut q = p.clone();
            p.saliency = s[..6].to_vec();
            q.saliency = s[6..].to_vec();
            let before = weighted_match(&p, &q, 0.5, (1, 1), |i, j| d[i * 6 + j]);
            let mut raised = d.clone();
            raised[k] = (raised[k] + bump).min(1.0);
            let after = weighted_match(&p, &q, 0.5, (1, 1), |i, j| raised[i * 6 + j]);
            prop_assert!(after >= before);
        }
    }
}
