//! Similarity scores that become soft evidence for cross-sensor association:
//! RCA metric learning, Gaussian kernels on time, map distance and size,
//! confusion-matrix class agreement, patch-based appearance matching and
//! attribute-score calibration.

mod appearance;
mod attributes;
mod class;
mod io;
mod kernels;
mod rca;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evidence::{clamp_probability, EvidenceRecord, Truth};
use crate::logic::GroundAtom;
use crate::tracklet::{Appearance, Tracklet};

pub use appearance::{
    appearance_similarity, compute_saliency, normalize_saliency, patch_affinity, relevance_score, relevance_scores,
    saliency_score, PatchGrid,
};
pub use attributes::{fit_logistic, fuse_attribute_scores, Logistic};
pub use class::{class_similarity, ConfusionMatrix};
pub use io::{read_confusion_csv, read_homography, read_patch_grid_csv};
pub use kernels::{size_similarity, spatial_similarity, temporal_similarity, GaussianKernel, Homography};
pub use rca::{in_class_covariance, rca_fit, RcaModel};

pub const TEMPORAL: &str = "temporallyClose";
pub const SPATIAL: &str = "spatiallyClose";
pub const SIZE: &str = "similarSize";
pub const CLASS: &str = "similarClass";
pub const APPEARANCE: &str = "similarAppearance";
pub const VEHICLE: &str = "VEHICLE";

/// Kernel and matching parameters, read from a TOML file with the keys
/// `m_t sigma_t m_l sigma_l m_s sigma_s alpha sigma_d K window_dx window_dy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionParams {
    pub m_t: f64,
    pub sigma_t: f64,
    pub m_l: f64,
    pub sigma_l: f64,
    pub m_s: f64,
    pub sigma_s: f64,
    pub alpha: f64,
    pub sigma_d: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub window_dx: usize,
    pub window_dy: usize,
    /// Temporal and spatial kernels for specific ordered sensor pairs.
    pub pairs: Vec<PairKernels>,
}

/// Kernel overrides for tracklets leaving sensor `from` and entering `to`.
/// Camera pairs that are far apart or separated by signals have wider gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairKernels {
    pub from: String,
    pub to: String,
    pub m_t: Option<f64>,
    pub sigma_t: Option<f64>,
    pub m_l: Option<f64>,
    pub sigma_l: Option<f64>,
}

impl Default for FusionParams {
    fn default() -> Self {
        FusionParams {
            m_t: 0.0,
            sigma_t: 10.0,
            m_l: 0.0,
            sigma_l: 5.0,
            m_s: 0.0,
            sigma_s: 0.5,
            alpha: 0.1,
            sigma_d: 1.0,
            k: 5,
            window_dx: 2,
            window_dy: 1,
            pairs: Vec::new(),
        }
    }
}

impl FusionParams {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::invalid(format!("fusion config: {e}")))
    }

    fn pair(&self, from: &str, to: &str) -> Option<&PairKernels> {
        self.pairs.iter().find(|p| p.from == from && p.to == to)
    }

    pub fn temporal(&self) -> Result<GaussianKernel> {
        GaussianKernel::new(self.m_t, self.sigma_t)
    }

    pub fn spatial(&self) -> Result<GaussianKernel> {
        GaussianKernel::new(self.m_l, self.sigma_l)
    }

    /// Temporal kernel for the sensor pair, falling back to the global one.
    pub fn temporal_for(&self, from: &str, to: &str) -> Result<GaussianKernel> {
        let p = self.pair(from, to);
        GaussianKernel::new(
            p.and_then(|p| p.m_t).unwrap_or(self.m_t),
            p.and_then(|p| p.sigma_t).unwrap_or(self.sigma_t),
        )
    }

    pub fn spatial_for(&self, from: &str, to: &str) -> Result<GaussianKernel> {
        let p = self.pair(from, to);
        GaussianKernel::new(
            p.and_then(|p| p.m_l).unwrap_or(self.m_l),
            p.and_then(|p| p.sigma_l).unwrap_or(self.sigma_l),
        )
    }

    pub fn size(&self) -> Result<GaussianKernel> {
        GaussianKernel::new(self.m_s, self.sigma_s)
    }
}

/// Per-sensor calibration and learned models used to score a pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssociationModels {
    pub homographies: BTreeMap<String, Homography>,
    pub confusion: BTreeMap<String, ConfusionMatrix>,
    /// Class prior; falls back to the matrix prior, then uniform.
    pub prior: Option<Vec<f64>>,
    /// Metric for appearance feature vectors.
    pub rca: Option<RcaModel>,
    /// Maps raw appearance scores to probabilities.
    pub appearance_calibration: Option<Logistic>,
}

/// Uncalibrated appearance score of a pair, `None` when either tracklet has
/// no appearance or the two kinds differ. Grids use the patch matching score;
/// vectors use the Gaussian affinity of their distance under the RCA metric.
pub fn raw_appearance_score(
    a: &Tracklet,
    b: &Tracklet,
    models: &AssociationModels,
    params: &FusionParams,
) -> Option<Result<f64>> {
    match (a.appearance.as_ref()?, b.appearance.as_ref()?) {
        (Appearance::Grid(p), Appearance::Grid(q)) => Some(appearance_similarity(
            p,
            q,
            params.alpha,
            (params.window_dx, params.window_dy),
            params.sigma_d,
        )),
        (Appearance::Vector(u), Appearance::Vector(v)) => Some((|| {
            let d = match &models.rca {
                Some(m) => m.distance(u, v)?,
                None => {
                    if u.len() != v.len() {
                        return Err(Error::DimensionMismatch {
                            expected: u.len(),
                            found: v.len(),
                        });
                    }
                    u.iter().zip(v).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
                }
            };
            Ok((-d * d / (2.0 * params.sigma_d * params.sigma_d)).exp())
        })()),
        _ => None,
    }
}

fn class_prior(models: &AssociationModels, cm: &ConfusionMatrix) -> Vec<f64> {
    models
        .prior
        .clone()
        .or_else(|| cm.prior.clone())
        .unwrap_or_else(|| cm.uniform_prior())
}

/// Raw cue scores of a pair, keyed by predicate name. Cues whose inputs are
/// missing are left out with a warning.
pub fn similarity_scores(
    a: &Tracklet,
    b: &Tracklet,
    models: &AssociationModels,
    params: &FusionParams,
) -> Result<BTreeMap<&'static str, f64>> {
    if a.sensor == b.sensor {
        return Err(Error::invalid(format!(
            "tracklets {} and {} come from the same sensor",
            a.id, b.id
        )));
    }
    let mut out = BTreeMap::new();
    out.insert(TEMPORAL, temporal_similarity(a.t_end, b.t_start, &params.temporal_for(&a.sensor, &b.sensor)?));

    match (models.homographies.get(&a.sensor), models.homographies.get(&b.sensor)) {
        (Some(ha), Some(hb)) => {
            let (pa, pb) = (a.last(), b.first());
            out.insert(SPATIAL, spatial_similarity([pa.x, pa.y], [pb.x, pb.y], ha, hb, &params.spatial_for(&a.sensor, &b.sensor)?)?);
        }
        _ => log::warn!("no homography for {} or {}; spatial cue omitted", a.sensor, b.sensor),
    }

    if a.category() == Some(VEHICLE) && b.category() == Some(VEHICLE) {
        match (a.size, b.size) {
            (Some(sa), Some(sb)) => {
                out.insert(SIZE, size_similarity(sa, sb, &params.size()?));
            }
            _ => log::warn!("vehicle pair {}/{} without sizes; size cue omitted", a.id, b.id),
        }
    }

    match (
        models.confusion.get(&a.sensor),
        models.confusion.get(&b.sensor),
        a.category(),
        b.category(),
    ) {
        (Some(ca), Some(cb), Some(oa), Some(ob)) => match (ca.class_index(oa), cb.class_index(ob)) {
            (Some(ia), Some(ib)) => {
                let prior = class_prior(models, ca);
                let joint = class_similarity(ia, ib, ca, cb, &prior)?;
                let marginal: f64 = (0..prior.len()).map(|k| ca.entries[k][ia] * prior[k]).sum();
                // probability that sensor b reports its class given a's report
                out.insert(CLASS, if marginal > 0.0 { joint / marginal } else { 0.0 });
            }
            _ => log::warn!("class {oa} or {ob} missing from a confusion matrix; class cue omitted"),
        },
        (None, _, _, _) | (_, None, _, _) => {
            log::warn!("no confusion matrix for {} or {}; class cue omitted", a.sensor, b.sensor)
        }
        _ => {}
    }

    if let Some(raw) = raw_appearance_score(a, b, models, params) {
        let raw = raw?;
        let p = match &models.appearance_calibration {
            Some(l) => l.apply(raw),
            None => raw,
        };
        out.insert(APPEARANCE, p);
    }
    Ok(out)
}

/// Soft evidence records `cue(A, B)` for a tracklet pair, scores clamped
/// into `[1e-6, 1 - 1e-6]`.
pub fn emit_similarity_evidence(
    a: &Tracklet,
    b: &Tracklet,
    models: &AssociationModels,
    params: &FusionParams,
) -> Result<Vec<EvidenceRecord>> {
    Ok(similarity_scores(a, b, models, params)?
        .into_iter()
        .map(|(pred, s)| {
            EvidenceRecord::new(
                GroundAtom::new(pred, [a.id.as_str(), b.id.as_str()]),
                Truth::Soft(clamp_probability(s)),
            )
        })
        .collect())
}

/// Fit the appearance calibration on labeled pairs (same target or not).
pub fn fit_appearance_calibration(
    pairs: &[(&Tracklet, &Tracklet, bool)],
    models: &AssociationModels,
    params: &FusionParams,
) -> Result<Logistic> {
    let data: Vec<(f64, bool)> = pairs
        .iter()
        .filter_map(|(a, b, y)| raw_appearance_score(a, b, models, params).map(|s| s.map(|s| (s, *y))))
        .collect::<Result<_>>()?;
    fit_logistic(&data)
}
