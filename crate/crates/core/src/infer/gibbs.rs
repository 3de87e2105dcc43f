use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::compiled::Compiled;
use super::maxwalksat::{walksat, WalkParams};
use super::InferenceParams;
use crate::error::{Error, Result};

/// Largest hard-clause group updated jointly (2^k states enumerated).
pub(crate) const MAX_BLOCK_VARS: usize = 10;

/// Binary soft clauses at least this heavy also get a joint pair update, so
/// near-deterministic implications do not trap single-site moves.
pub(crate) const PAIR_BLOCK_WEIGHT: f64 = 2.0;

pub(crate) struct ChainOutput {
    /// Per variable: fraction of kept sweeps with the variable true.
    pub marginals: Vec<f64>,
    /// Per compiled clause: fraction of kept sweeps with the clause satisfied.
    pub clause_sat: Vec<f64>,
}

struct Chain<'a> {
    c: &'a Compiled,
    w: Vec<f64>,
    val: Vec<bool>,
    ntrue: Vec<u32>,
    blocks: &'a [Vec<usize>],
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Chain<'_> {
    fn set(&mut self, v: usize, value: bool) {
        if self.val[v] == value {
            return;
        }
        self.val[v] = value;
        for &(ci, neg) in &self.c.occurs[v] {
            if value != neg {
                self.ntrue[ci] += 1;
            } else {
                self.ntrue[ci] -= 1;
            }
        }
    }

    /// Log-odds of v = true given its Markov blanket.
    fn conditional(&self, v: usize) -> f64 {
        let mut delta = 0.0;
        for &(ci, neg) in &self.c.occurs[v] {
            let lit_true = self.val[v] != neg;
            let others = self.ntrue[ci] - lit_true as u32;
            if others == 0 {
                let w = self.w[ci];
                delta += if neg { -w } else { w };
            }
        }
        delta
    }

    /// Flip `v`, returning the change in satisfied weight.
    fn flip(&mut self, v: usize) -> f64 {
        let mut delta = 0.0;
        let value = !self.val[v];
        self.val[v] = value;
        for &(ci, neg) in &self.c.occurs[v] {
            if value != neg {
                if self.ntrue[ci] == 0 {
                    delta += self.w[ci];
                }
                self.ntrue[ci] += 1;
            } else {
                self.ntrue[ci] -= 1;
                if self.ntrue[ci] == 0 {
                    delta -= self.w[ci];
                }
            }
        }
        delta
    }

    /// Resample a block jointly from its exact conditional. States are
    /// visited in Gray-code order so each step is a single flip.
    fn block_update(&mut self, b: usize, rng: &mut ChaCha8Rng) {
        let blocks = self.blocks;
        let vars = &blocks[b];
        let k = vars.len();
        let start: usize = vars
            .iter()
            .enumerate()
            .map(|(j, &v)| (self.val[v] as usize) << j)
            .sum();
        // scores[g] is relative to the starting state, g = start ^ gray(i)
        let mut scores = vec![0.0; 1 << k];
        let mut s = 0.0;
        let mut state = start;
        for i in 1..(1usize << k) {
            let j = i.trailing_zeros() as usize;
            s += self.flip(vars[j]);
            state ^= 1 << j;
            scores[state] = s;
        }
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = scores.iter().map(|s| (s - max).exp()).sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = scores.len() - 1;
        for (i, s) in scores.iter().enumerate() {
            u -= (s - max).exp();
            if u <= 0.0 {
                pick = i;
                break;
            }
        }
        for (j, &v) in vars.iter().enumerate() {
            if (state >> j) & 1 != (pick >> j) & 1 {
                self.flip(v);
            }
        }
    }

    fn sweep(&mut self, rng: &mut ChaCha8Rng) {
        for v in 0..self.val.len() {
            let p = sigmoid(self.conditional(v));
            let value = rng.random::<f64>() < p;
            self.set(v, value);
        }
        for b in 0..self.blocks.len() {
            self.block_update(b, rng);
        }
    }
}

/// Run independent chains in parallel. Each starts from a MaxWalkSAT state
/// that satisfies every hard clause.
pub(crate) fn run_chains(c: &Compiled, p: &InferenceParams, track_clauses: bool) -> Result<Vec<ChainOutput>> {
    if p.samples == 0 {
        return Err(Error::invalid("samples must be at least 1"));
    }
    if p.chains == 0 {
        return Err(Error::invalid("chains must be at least 1"));
    }
    let max_soft = c.max_abs_soft();
    if p.hard_weight <= max_soft {
        log::warn!(
            "hard weight {} does not exceed the largest soft weight {max_soft}",
            p.hard_weight
        );
    }
    let w: Vec<f64> = c
        .clauses
        .iter()
        .map(|cl| if cl.hard { p.hard_weight } else { cl.weight })
        .collect();
    let mut blocks = c.hard_blocks(MAX_BLOCK_VARS);
    blocks.extend(c.heavy_pairs(PAIR_BLOCK_WEIGHT));
    let burn_in = p.burn_in();

    (0..p.chains)
        .into_par_iter()
        .map(|chain| {
            let (init, cost) = walksat(
                c,
                &WalkParams {
                    max_flips: p.max_flips,
                    max_tries: p.max_tries,
                    noise: p.noise,
                    seed: p.seed,
                    stream: 2 * chain as u64 + 1,
                    hard_only: true,
                },
            );
            if cost.hard > 0 {
                return Err(Error::NoSatisfyingState { unsatisfied: cost.hard });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
            rng.set_stream(2 * chain as u64 + 2);
            let ntrue = c.true_counts(&init);
            let mut st = Chain {
                c,
                w: w.clone(),
                val: init,
                ntrue,
                blocks: &blocks,
            };
            for _ in 0..burn_in {
                st.sweep(&mut rng);
            }
            let mut on = vec![0u64; c.num_vars()];
            let mut sat = vec![0u64; if track_clauses { c.clauses.len() } else { 0 }];
            for _ in 0..p.samples {
                st.sweep(&mut rng);
                for (v, &x) in st.val.iter().enumerate() {
                    on[v] += x as u64;
                }
                if track_clauses {
                    for (ci, &n) in st.ntrue.iter().enumerate() {
                        sat[ci] += (n > 0) as u64;
                    }
                }
            }
            let s = p.samples as f64;
            Ok(ChainOutput {
                marginals: on.iter().map(|&x| x as f64 / s).collect(),
                clause_sat: sat.iter().map(|&x| x as f64 / s).collect(),
            })
        })
        .collect()
}
