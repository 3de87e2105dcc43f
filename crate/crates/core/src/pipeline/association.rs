use crate::error::{Error, Result};
use crate::evidence::{EvidenceSet, Truth};
use crate::fusion::{emit_similarity_evidence, AssociationModels, FusionParams};
use crate::learn::{learn_weights, LearnParams, LearnResult, TrainingInstance};
use crate::logic::{GroundAtom, KnowledgeBase};
use crate::tracklet::Tracklet;

/// Output of the association knowledge base.
pub const EQUAL_AGENT: &str = "equalAgent";
/// Name under which the complex-event level reads association results.
pub const EQUAL_AGENTS: &str = "equalAgents";
/// Marks the ordered tracklet pairs that were scored.
pub const CANDIDATE_PAIR: &str = "candidatePair";

/// Ordered pairs `(a, b)` from different sensors with `a` starting first
/// (ties broken by id).
pub fn candidate_pairs(tracklets: &[Tracklet]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, a) in tracklets.iter().enumerate() {
        for (j, b) in tracklets.iter().enumerate() {
            let before = a.t_start < b.t_start || (a.t_start == b.t_start && a.id < b.id);
            if i != j && a.sensor != b.sensor && before {
                out.push((i, j));
            }
        }
    }
    out
}

fn pair_evidence(a: &Tracklet, b: &Tracklet, models: &AssociationModels, fusion: &FusionParams) -> Result<EvidenceSet> {
    let mut ev = EvidenceSet::new();
    ev.add(GroundAtom::new(CANDIDATE_PAIR, [a.id.as_str(), b.id.as_str()]), Truth::True);
    for r in emit_similarity_evidence(a, b, models, fusion)? {
        ev.push(r);
    }
    Ok(ev)
}

/// Candidate-pair and similarity evidence for every cross-sensor pair.
pub fn association_evidence(
    tracklets: &[Tracklet],
    models: &AssociationModels,
    fusion: &FusionParams,
) -> Result<EvidenceSet> {
    let mut ev = EvidenceSet::new();
    for (i, j) in candidate_pairs(tracklets) {
        ev.extend(&pair_evidence(&tracklets[i], &tracklets[j], models, fusion)?);
    }
    Ok(ev)
}

/// One training example for the association weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPair {
    pub first: String,
    pub second: String,
    /// Candidate and similarity evidence of the pair.
    pub evidence: EvidenceSet,
    pub equal: bool,
}

impl LabeledPair {
    pub fn from_tracklets(
        a: &Tracklet,
        b: &Tracklet,
        equal: bool,
        models: &AssociationModels,
        fusion: &FusionParams,
    ) -> Result<Self> {
        Ok(LabeledPair {
            first: a.id.clone(),
            second: b.id.clone(),
            evidence: pair_evidence(a, b, models, fusion)?,
            equal,
        })
    }
}

/// Learn the association rule weights from labeled pairs, each pair being
/// its own database.
pub fn learn_association_weights(
    kb: &KnowledgeBase,
    pairs: &[LabeledPair],
    params: &LearnParams,
) -> Result<LearnResult> {
    if !pairs.iter().any(|p| p.equal) {
        return Err(Error::invalid("association training needs at least one positive pair"));
    }
    let instances: Vec<TrainingInstance> = pairs
        .iter()
        .map(|p| {
            let mut labels = EvidenceSet::new();
            let truth = if p.equal { Truth::True } else { Truth::False };
            labels.add(GroundAtom::new(EQUAL_AGENT, [p.first.as_str(), p.second.as_str()]), truth);
            TrainingInstance {
                evidence: p.evidence.clone(),
                labels,
            }
        })
        .collect();
    learn_weights(kb, &instances, &[EQUAL_AGENT.to_string()], params)
}
