//! Discriminative weight learning by gradient ascent on the conditional
//! log-likelihood of query atoms given evidence.
//!
//! For formula `i` the gradient is `E[n_i | x, y] - E[n_i | x] - w_i / σ²`.
//! Without hidden atoms the first term is the count in the labeled world.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evidence::{EvidenceSet, Truth};
use crate::ground::{ground, GroundNetwork};
use crate::infer::{exact_enumerate, gibbs_expectations, map_with, InferenceParams};
use crate::logic::KnowledgeBase;
use crate::parser::Query;

/// Weights beyond this magnitude abort learning.
pub const DIVERGENCE_LIMIT: f64 = 100.0;

/// Observed evidence and query labels of one database. Query groundings
/// without a label are taken as false.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingInstance {
    pub evidence: EvidenceSet,
    pub labels: EvidenceSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// Gibbs estimate of the expected counts.
    Gibbs,
    /// Counts in the MAP world (voted perceptron).
    Perceptron,
    /// Exact enumeration; small networks only.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnParams {
    pub learning_rate: f64,
    pub iterations: usize,
    /// Standard deviation of the Gaussian prior; infinite disables it.
    pub l2_sigma: f64,
    pub samples_per_gradient: usize,
    /// Return the average of all iterates instead of the last one.
    pub averaging: bool,
    pub estimator: Estimator,
    /// Sampler and MAP settings; `samples` is replaced by
    /// `samples_per_gradient` and the seed advances every iteration.
    pub inference: InferenceParams,
}

impl Default for LearnParams {
    fn default() -> Self {
        LearnParams {
            learning_rate: 0.1,
            iterations: 100,
            l2_sigma: 10.0,
            samples_per_gradient: 1000,
            averaging: true,
            estimator: Estimator::Gibbs,
            inference: InferenceParams {
                chains: 1,
                ..Default::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnResult {
    pub weights: Vec<f64>,
    /// Euclidean norm of the gradient at each iteration.
    pub gradient_norms: Vec<f64>,
}

/// Instances sharing the same evidence share one network.
struct Group {
    net: GroundNetwork,
    members: Vec<Member>,
}

struct Member {
    /// Per atom: the label of query atoms.
    clamp: Vec<Option<bool>>,
    /// Some variable atom has no label.
    hidden: bool,
    /// Counts in the labeled world when nothing is hidden.
    counts: Vec<f64>,
}

fn check_queries(kb: &KnowledgeBase, queries: &[String]) -> Result<Vec<Query>> {
    if queries.is_empty() {
        return Err(Error::invalid("no query predicates given"));
    }
    queries
        .iter()
        .map(|q| {
            let s = kb.schema(q).ok_or_else(|| Error::UndeclaredPredicate(q.clone()))?;
            if s.closed_world {
                return Err(Error::invalid(format!("query predicate {q} is closed-world")));
            }
            Ok(Query::Predicate(q.clone()))
        })
        .collect()
}

fn prepare(kb: &KnowledgeBase, instances: &[TrainingInstance], queries: &[String]) -> Result<Vec<Group>> {
    let qs = check_queries(kb, queries)?;
    let mut groups: Vec<Group> = Vec::new();
    let mut by_evidence: HashMap<String, usize> = HashMap::new();
    for inst in instances {
        let key = format!("{:?}", inst.evidence);
        let gi = match by_evidence.get(&key) {
            Some(&g) => g,
            None => {
                let net = ground(kb, &inst.evidence, &qs)?;
                groups.push(Group { net, members: Vec::new() });
                by_evidence.insert(key, groups.len() - 1);
                groups.len() - 1
            }
        };
        let net = &groups[gi].net;
        let mut clamp = vec![None; net.atoms.len()];
        for &a in &net.queries {
            if net.atoms.status(a).is_variable() {
                clamp[a] = Some(false);
            }
        }
        for r in inst.labels.records() {
            let v = match r.truth {
                Truth::True => true,
                Truth::False => false,
                Truth::Soft(_) => return Err(Error::invalid(format!("soft label on {}", r.atom))),
            };
            if let Some(a) = net.atoms.get(&r.atom) {
                if clamp[a].is_some() {
                    clamp[a] = Some(v);
                }
            }
        }
        let hidden = (0..net.atoms.len()).any(|a| net.atoms.status(a).is_variable() && clamp[a].is_none());
        let counts = if hidden {
            Vec::new()
        } else {
            let world: Vec<bool> = clamp.iter().map(|c| c.unwrap_or(false)).collect();
            net.formula_counts(&world)
        };
        groups[gi].members.push(Member { clamp, hidden, counts });
    }
    Ok(groups)
}

fn expected_counts(
    net: &GroundNetwork,
    w: &[f64],
    clamp: Option<&[Option<bool>]>,
    params: &LearnParams,
    inf: &InferenceParams,
) -> Result<Vec<f64>> {
    match params.estimator {
        Estimator::Exact => Ok(exact_enumerate(net, Some(w), clamp)?.expected_counts),
        Estimator::Gibbs => Ok(gibbs_expectations(net, w, clamp, inf)?.1),
        Estimator::Perceptron => {
            let m = map_with(net, Some(w), clamp, inf)?;
            Ok(net.formula_counts(&m.world))
        }
    }
}

/// Summed data gradient over all groups, without the prior term.
fn data_gradient(groups: &[Group], w: &[f64], params: &LearnParams, inf: &InferenceParams) -> Result<Vec<f64>> {
    let parts: Vec<Vec<f64>> = groups
        .par_iter()
        .map(|g| {
            let free = expected_counts(&g.net, w, None, params, inf)?;
            let mut grad = vec![0.0; w.len()];
            for m in &g.members {
                let observed = if m.hidden {
                    expected_counts(&g.net, w, Some(&m.clamp), params, inf)?
                } else {
                    m.counts.clone()
                };
                for k in 0..w.len() {
                    grad[k] += observed[k] - free[k];
                }
            }
            Ok(grad)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![0.0; w.len()];
    for p in parts {
        for (t, x) in total.iter_mut().zip(p) {
            *t += x;
        }
    }
    Ok(total)
}

fn prior(w: f64, sigma: f64) -> f64 {
    if sigma.is_finite() {
        w / (sigma * sigma)
    } else {
        0.0
    }
}

fn inference_for(params: &LearnParams, iteration: usize) -> InferenceParams {
    InferenceParams {
        samples: params.samples_per_gradient,
        seed: params.inference.seed.wrapping_add(iteration as u64),
        ..params.inference.clone()
    }
}

/// Gradient of the conditional log-likelihood summed over `instances`, with
/// the prior term `-w/σ²` included once. Hard formulas get 0.
pub fn cll_gradient(
    kb: &KnowledgeBase,
    instances: &[TrainingInstance],
    queries: &[String],
    weights: &[f64],
    params: &LearnParams,
) -> Result<Vec<f64>> {
    if weights.len() != kb.formulas().len() {
        return Err(Error::DimensionMismatch {
            expected: kb.formulas().len(),
            found: weights.len(),
        });
    }
    let groups = prepare(kb, instances, queries)?;
    let mut g = data_gradient(&groups, weights, params, &inference_for(params, 0))?;
    for (k, f) in kb.formulas().iter().enumerate() {
        g[k] = if f.is_hard() { 0.0 } else { g[k] - prior(weights[k], params.l2_sigma) };
    }
    Ok(g)
}

/// Exact conditional log-likelihood `Σ log P(y | x)` minus `Σ w²/(2σ²)`.
pub fn exact_cll(
    kb: &KnowledgeBase,
    instances: &[TrainingInstance],
    queries: &[String],
    weights: &[f64],
    l2_sigma: f64,
) -> Result<f64> {
    let groups = prepare(kb, instances, queries)?;
    let mut total = 0.0;
    for g in &groups {
        let free = exact_enumerate(&g.net, Some(weights), None)?.log_z;
        for m in &g.members {
            total += exact_enumerate(&g.net, Some(weights), Some(&m.clamp))?.log_z - free;
        }
    }
    if l2_sigma.is_finite() {
        for (w, f) in weights.iter().zip(kb.formulas()) {
            if !f.is_hard() {
                total -= w * w / (2.0 * l2_sigma * l2_sigma);
            }
        }
    }
    Ok(total)
}

/// Learn soft formula weights from zero. Hard formulas keep weight 0 in the
/// returned vector and are never updated.
pub fn learn_weights(
    kb: &KnowledgeBase,
    instances: &[TrainingInstance],
    queries: &[String],
    params: &LearnParams,
) -> Result<LearnResult> {
    if instances.is_empty() {
        return Err(Error::invalid("no training instances"));
    }
    if params.learning_rate <= 0.0 || !params.learning_rate.is_finite() {
        return Err(Error::invalid("learning rate must be positive"));
    }
    let groups = prepare(kb, instances, queries)?;
    let nf = kb.formulas().len();
    let hard: Vec<bool> = kb.formulas().iter().map(|f| f.is_hard()).collect();
    let n = instances.len() as f64;
    let mut w = vec![0.0; nf];
    let mut sum = vec![0.0; nf];
    let mut norms = Vec::with_capacity(params.iterations);
    for it in 0..params.iterations {
        let mut g = data_gradient(&groups, &w, params, &inference_for(params, it))?;
        for k in 0..nf {
            g[k] = if hard[k] { 0.0 } else { g[k] - prior(w[k], params.l2_sigma) };
        }
        norms.push(g.iter().map(|x| x * x).sum::<f64>().sqrt());
        for k in 0..nf {
            w[k] += params.learning_rate * g[k] / n;
            if w[k].abs() > DIVERGENCE_LIMIT || !w[k].is_finite() {
                return Err(Error::Divergence { index: k, value: w[k] });
            }
            sum[k] += w[k];
        }
        log::debug!("iteration {it}: |g| = {:.4}", norms[it]);
    }
    let weights = if params.averaging && params.iterations > 0 {
        sum.iter().map(|s| s / params.iterations as f64).collect()
    } else {
        w
    };
    Ok(LearnResult {
        weights,
        gradient_norms: norms,
    })
}
