//! Marginal inference by Gibbs sampling, MAP inference by MaxWalkSAT and an
//! exact enumeration oracle.
//!
//! During sampling hard clauses carry a large finite weight
//! (`InferenceParams::hard_weight`). Groups of variables tied by several hard
//! clauses are additionally resampled jointly, otherwise constraints such as
//! `a v b` with `!a v !b` would pin a single-site sampler to its start state.
//! MAP search and exact enumeration treat hard clauses strictly.

mod compiled;
mod exact;
mod gibbs;
mod maxwalksat;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::Result;
use crate::ground::{GroundClause, GroundNetwork, Origin};
use crate::logic::{GroundAtom, Weight};

pub use crate::evidence::log_odds_weight;
pub use exact::{exact_enumerate, world_score, ExactResult, MAX_EXACT_VARS};
pub use maxwalksat::Cost;

pub(crate) use compiled::Compiled;

/// Chain disagreement above which a result is flagged.
pub const CHAIN_DISAGREEMENT_FLAG: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceParams {
    /// Kept sweeps per chain.
    pub samples: usize,
    /// Discarded sweeps per chain; defaults to 10% of `samples`.
    pub burn_in: Option<usize>,
    pub chains: usize,
    pub seed: u64,
    /// Weight standing in for hard clauses while sampling.
    pub hard_weight: f64,
    pub max_flips: usize,
    pub max_tries: usize,
    /// Random-walk probability of MaxWalkSAT.
    pub noise: f64,
}

impl Default for InferenceParams {
    fn default() -> Self {
        InferenceParams {
            samples: 10_000,
            burn_in: None,
            chains: 3,
            seed: 0,
            hard_weight: 40.0,
            max_flips: 100_000,
            max_tries: 10,
            noise: 0.5,
        }
    }
}

impl InferenceParams {
    pub fn burn_in(&self) -> usize {
        self.burn_in.unwrap_or(self.samples / 10)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub method: &'static str,
    pub chains: usize,
    pub samples_per_chain: usize,
    pub burn_in: usize,
    /// Per query atom, the estimate of each chain.
    pub per_chain: Vec<Vec<f64>>,
    pub max_chain_disagreement: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalResult {
    pub atoms: Vec<GroundAtom>,
    pub probabilities: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl MarginalResult {
    pub fn get(&self, atom: &GroundAtom) -> Option<f64> {
        self.atoms.iter().position(|a| a == atom).map(|i| self.probabilities[i])
    }

    /// One line per atom: `P(atom) = value`.
    pub fn to_text(&self) -> String {
        self.atoms
            .iter()
            .zip(&self.probabilities)
            .map(|(a, p)| format!("P({a}) = {p:.6}\n"))
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let d = &self.diagnostics;
        json!({
            "method": d.method,
            "marginals": self.atoms.iter().zip(&self.probabilities).enumerate().map(|(i, (a, p))| json!({
                "atom": a.to_string(),
                "p": p,
                "per_chain": d.per_chain.get(i).cloned().unwrap_or_default(),
            })).collect::<Vec<_>>(),
            "chains": d.chains,
            "samples_per_chain": d.samples_per_chain,
            "burn_in": d.burn_in,
            "max_chain_disagreement": d.max_chain_disagreement,
            "flagged": d.flagged,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapResult {
    /// Truth value per atom of the network.
    pub world: Vec<bool>,
    pub hard_unsatisfied: usize,
    /// Total weight of violated positive and satisfied negative clauses.
    pub soft_cost: f64,
}

pub(crate) fn effective_weight(c: &GroundClause, weights: Option<&[f64]>) -> Weight {
    match (c.weight, c.origin, weights) {
        (Weight::Hard, ..) => Weight::Hard,
        (_, Origin::Formula(k), Some(w)) => Weight::Soft(w[k]),
        (w, ..) => w,
    }
}

fn query_list(net: &GroundNetwork, queries: &[usize]) -> Vec<usize> {
    if queries.is_empty() {
        net.queries.clone()
    } else {
        queries.to_vec()
    }
}

/// Gibbs marginals for the given atoms (the network's registered queries when
/// `queries` is empty). Fixed atoms report 0 or 1.
pub fn gibbs_marginals(net: &GroundNetwork, queries: &[usize], params: &InferenceParams) -> Result<MarginalResult> {
    let c = Compiled::new(net, None, None)?;
    let chains = gibbs::run_chains(&c, params, false)?;
    let queries = query_list(net, queries);
    let mut probabilities = Vec::with_capacity(queries.len());
    let mut per_chain = Vec::with_capacity(queries.len());
    let mut worst: f64 = 0.0;
    for &a in &queries {
        let est: Vec<f64> = match c.var_of_atom[a] {
            Some(v) => chains.iter().map(|ch| ch.marginals[v]).collect(),
            None => vec![net.atoms.status(a).fixed_value().unwrap_or(false) as u8 as f64; chains.len()],
        };
        let lo = est.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = est.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(hi - lo);
        probabilities.push(est.iter().sum::<f64>() / est.len() as f64);
        per_chain.push(est);
    }
    if worst > CHAIN_DISAGREEMENT_FLAG {
        log::warn!("gibbs chains disagree by {worst:.3}");
    }
    Ok(MarginalResult {
        atoms: queries.iter().map(|&a| net.atoms.atom(a).clone()).collect(),
        probabilities,
        diagnostics: Diagnostics {
            method: "gibbs",
            chains: params.chains,
            samples_per_chain: params.samples,
            burn_in: params.burn_in(),
            per_chain,
            max_chain_disagreement: worst,
            flagged: worst > CHAIN_DISAGREEMENT_FLAG,
        },
    })
}

/// Exact marginals by enumeration (at most `MAX_EXACT_VARS` variables per
/// connected component).
pub fn exact_marginals(net: &GroundNetwork, queries: &[usize]) -> Result<MarginalResult> {
    let r = exact_enumerate(net, None, None)?;
    let queries = query_list(net, queries);
    Ok(MarginalResult {
        atoms: queries.iter().map(|&a| net.atoms.atom(a).clone()).collect(),
        probabilities: queries.iter().map(|&a| r.marginals[a]).collect(),
        diagnostics: Diagnostics {
            method: "exact",
            chains: 0,
            samples_per_chain: 0,
            burn_in: 0,
            per_chain: Vec::new(),
            max_chain_disagreement: 0.0,
            flagged: false,
        },
    })
}

/// Most probable world found by MaxWalkSAT. Deterministic given the seed.
pub fn map_inference(net: &GroundNetwork, params: &InferenceParams) -> Result<MapResult> {
    map_with(net, None, None, params)
}

pub(crate) fn map_with(
    net: &GroundNetwork,
    weights: Option<&[f64]>,
    clamp: Option<&[Option<bool>]>,
    params: &InferenceParams,
) -> Result<MapResult> {
    let c = Compiled::new(net, weights, clamp)?;
    let (val, cost) = maxwalksat::walksat(
        &c,
        &maxwalksat::WalkParams {
            max_flips: params.max_flips,
            max_tries: params.max_tries,
            noise: params.noise,
            seed: params.seed,
            stream: 0,
            hard_only: false,
        },
    );
    Ok(MapResult {
        world: c.atom_world(net, &val, clamp),
        hard_unsatisfied: cost.hard,
        soft_cost: cost.soft,
    })
}

/// Sampled per-atom marginals and expected per-formula true-grounding counts
/// under `weights`, with `clamp` fixing selected atoms.
pub(crate) fn gibbs_expectations(
    net: &GroundNetwork,
    weights: &[f64],
    clamp: Option<&[Option<bool>]>,
    params: &InferenceParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let c = Compiled::new(net, Some(weights), clamp)?;
    let mut counts = net.constant_true.clone();
    for &ci in &c.constant_sat {
        if let Origin::Formula(k) = net.clauses[ci].origin {
            counts[k] += 1.0;
        }
    }
    let mut marg: Vec<f64> = (0..net.atoms.len())
        .map(|a| {
            net.atoms
                .status(a)
                .fixed_value()
                .or_else(|| clamp.and_then(|cl| cl.get(a).copied().flatten()))
                .map_or(0.5, |v| v as u8 as f64)
        })
        .collect();
    if c.num_vars() == 0 {
        return Ok((marg, counts));
    }
    let chains = gibbs::run_chains(&c, params, true)?;
    let nch = chains.len() as f64;
    for (i, cl) in c.clauses.iter().enumerate() {
        if let Origin::Formula(k) = net.clauses[cl.source].origin {
            counts[k] += chains.iter().map(|ch| ch.clause_sat[i]).sum::<f64>() / nch;
        }
    }
    for (v, &a) in c.atom_of_var.iter().enumerate() {
        marg[a] = chains.iter().map(|ch| ch.marginals[v]).sum::<f64>() / nch;
    }
    Ok((marg, counts))
}

#[cfg(test)]
mod tests;
