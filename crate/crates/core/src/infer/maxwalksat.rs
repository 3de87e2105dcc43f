use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::compiled::Compiled;

/// Lexicographic cost: violated hard clauses first, then soft penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cost {
    pub hard: usize,
    pub soft: f64,
}

impl Cost {
    fn better_than(&self, other: &Cost) -> bool {
        self.hard < other.hard || (self.hard == other.hard && self.soft < other.soft - 1e-12)
    }
}

/// Set of clause ids with O(1) insert and remove.
struct IndexedSet {
    items: Vec<usize>,
    pos: Vec<usize>,
}

impl IndexedSet {
    fn new(n: usize) -> Self {
        IndexedSet {
            items: Vec::new(),
            pos: vec![usize::MAX; n],
        }
    }

    fn insert(&mut self, x: usize) {
        if self.pos[x] == usize::MAX {
            self.pos[x] = self.items.len();
            self.items.push(x);
        }
    }

    fn remove(&mut self, x: usize) {
        let p = self.pos[x];
        if p != usize::MAX {
            let last = *self.items.last().unwrap();
            self.items.swap_remove(p);
            if last != x {
                self.pos[last] = p;
            }
            self.pos[x] = usize::MAX;
        }
    }

    fn clear(&mut self) {
        for &x in &self.items {
            self.pos[x] = usize::MAX;
        }
        self.items.clear();
    }
}

/// A clause is bad when it contributes cost: an unsatisfied hard or
/// positive-weight clause, or a satisfied negative-weight clause.
fn is_bad(c: &super::compiled::CClause, ntrue: u32) -> bool {
    if c.hard || c.weight > 0.0 {
        ntrue == 0
    } else {
        c.weight < 0.0 && ntrue > 0
    }
}

fn clause_cost(c: &super::compiled::CClause, ntrue: u32) -> Cost {
    if !is_bad(c, ntrue) {
        return Cost { hard: 0, soft: 0.0 };
    }
    if c.hard {
        Cost { hard: 1, soft: 0.0 }
    } else {
        Cost {
            hard: 0,
            soft: c.weight.abs(),
        }
    }
}

pub(crate) struct WalkParams {
    pub max_flips: usize,
    pub max_tries: usize,
    pub noise: f64,
    pub seed: u64,
    pub stream: u64,
    /// Stop at the first assignment satisfying every hard clause.
    pub hard_only: bool,
}

/// MaxWalkSAT over the compiled variables. Returns the best assignment seen
/// and its cost.
pub(crate) fn walksat(c: &Compiled, p: &WalkParams) -> (Vec<bool>, Cost) {
    let n = c.num_vars();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    rng.set_stream(p.stream);

    let mut best_val = vec![false; n];
    let mut best_cost = Cost {
        hard: usize::MAX,
        soft: f64::INFINITY,
    };
    let mut bad_hard = IndexedSet::new(c.clauses.len());
    let mut bad_soft = IndexedSet::new(c.clauses.len());
    let mut candidates: Vec<usize> = Vec::new();

    for _ in 0..p.max_tries.max(1) {
        let mut val: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let mut ntrue = c.true_counts(&val);
        bad_hard.clear();
        bad_soft.clear();
        let mut cost = Cost { hard: 0, soft: 0.0 };
        for (ci, cl) in c.clauses.iter().enumerate() {
            let cc = clause_cost(cl, ntrue[ci]);
            cost.hard += cc.hard;
            cost.soft += cc.soft;
            if is_bad(cl, ntrue[ci]) {
                if cl.hard {
                    bad_hard.insert(ci);
                } else {
                    bad_soft.insert(ci);
                }
            }
        }
        if cost.better_than(&best_cost) {
            best_cost = cost;
            best_val.clone_from(&val);
        }

        for _ in 0..p.max_flips {
            if bad_hard.items.is_empty() && (p.hard_only || bad_soft.items.is_empty()) {
                break;
            }
            let set = if !bad_hard.items.is_empty() { &bad_hard } else { &bad_soft };
            let ci = set.items[rng.random_range(0..set.items.len())];
            let cl = &c.clauses[ci];
            // a satisfied negative clause is repaired by falsifying a true literal
            candidates.clear();
            if !cl.hard && cl.weight < 0.0 {
                candidates.extend(cl.lits.iter().filter(|&&(v, neg)| val[v] != neg).map(|&(v, _)| v));
            } else {
                candidates.extend(cl.lits.iter().map(|&(v, _)| v));
            }
            let v = if rng.random::<f64>() < p.noise {
                candidates[rng.random_range(0..candidates.len())]
            } else {
                let mut best: Option<(usize, i64, f64)> = None;
                for &v in &candidates {
                    let (dh, ds) = flip_delta(c, &val, &ntrue, v);
                    let better = match best {
                        None => true,
                        Some((_, bh, bs)) => dh < bh || (dh == bh && ds < bs - 1e-12),
                    };
                    if better {
                        best = Some((v, dh, ds));
                    }
                }
                best.expect("clause has literals").0
            };

            // apply flip
            val[v] = !val[v];
            for &(cj, neg) in &c.occurs[v] {
                let before = clause_cost(&c.clauses[cj], ntrue[cj]);
                if val[v] != neg {
                    ntrue[cj] += 1;
                } else {
                    ntrue[cj] -= 1;
                }
                let cl = &c.clauses[cj];
                let after = clause_cost(cl, ntrue[cj]);
                cost.hard = cost.hard + after.hard - before.hard;
                cost.soft += after.soft - before.soft;
                let target = if cl.hard { &mut bad_hard } else { &mut bad_soft };
                if is_bad(cl, ntrue[cj]) {
                    target.insert(cj);
                } else {
                    target.remove(cj);
                }
            }
            if cost.better_than(&best_cost) {
                best_cost = cost;
                best_val.clone_from(&val);
            }
        }
        if best_cost.hard == 0 && (p.hard_only || best_cost.soft <= 1e-12) {
            break;
        }
    }
    // recompute to shed accumulated rounding
    let ntrue = c.true_counts(&best_val);
    let mut cost = Cost { hard: 0, soft: 0.0 };
    for (ci, cl) in c.clauses.iter().enumerate() {
        let cc = clause_cost(cl, ntrue[ci]);
        cost.hard += cc.hard;
        cost.soft += cc.soft;
    }
    (best_val, cost)
}

/// Change in (hard, soft) cost if `v` is flipped.
fn flip_delta(c: &Compiled, val: &[bool], ntrue: &[u32], v: usize) -> (i64, f64) {
    let mut dh = 0i64;
    let mut ds = 0.0;
    for &(ci, neg) in &c.occurs[v] {
        let cl = &c.clauses[ci];
        let now = ntrue[ci];
        let after = if val[v] != neg { now - 1 } else { now + 1 };
        let b = clause_cost(cl, now);
        let a = clause_cost(cl, after);
        dh += a.hard as i64 - b.hard as i64;
        ds += a.soft - b.soft;
    }
    (dh, ds)
}
