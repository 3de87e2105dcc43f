use crate::error::{Error, Result};
use super::effective_weight;
use crate::ground::GroundNetwork;
use crate::logic::Weight;

/// Clause over variable indices, evidence already folded in.
#[derive(Debug, Clone)]
pub(crate) struct CClause {
    pub lits: Vec<(usize, bool)>,
    pub weight: f64,
    pub hard: bool,
    /// Index of the ground clause this came from.
    pub source: usize,
}

/// Network view used by the samplers: only random variables remain, and
/// clauses made constant by fixed atoms are removed.
#[derive(Debug, Clone)]
pub(crate) struct Compiled {
    pub atom_of_var: Vec<usize>,
    pub var_of_atom: Vec<Option<usize>>,
    pub clauses: Vec<CClause>,
    /// Per variable: (clause, negated) occurrences.
    pub occurs: Vec<Vec<(usize, bool)>>,
    /// Ground clauses satisfied regardless of the variables.
    pub constant_sat: Vec<usize>,
}

impl Compiled {
    /// Fold evidence and `clamp` (per atom, `Some` fixes the value) into the
    /// clause set. A hard clause falsified by fixed values is an error.
    /// `weights` overrides per-formula soft weights.
    pub fn new(net: &GroundNetwork, weights: Option<&[f64]>, clamp: Option<&[Option<bool>]>) -> Result<Compiled> {
        let n = net.atoms.len();
        let fixed = |a: usize| -> Option<bool> {
            net.atoms
                .status(a)
                .fixed_value()
                .or_else(|| clamp.and_then(|c| c.get(a).copied().flatten()))
        };
        let mut var_of_atom = vec![None; n];
        let mut atom_of_var = Vec::new();
        for (a, slot) in var_of_atom.iter_mut().enumerate() {
            if net.atoms.status(a).is_variable() && fixed(a).is_none() {
                *slot = Some(atom_of_var.len());
                atom_of_var.push(a);
            }
        }
        let mut clauses = Vec::with_capacity(net.clauses.len());
        let mut constant_sat = Vec::new();
        let mut unsat_hard = 0;
        for (ci, c) in net.clauses.iter().enumerate() {
            let mut lits: Vec<(usize, bool)> = Vec::with_capacity(c.literals.len());
            let mut sat = false;
            for l in &c.literals {
                match fixed(l.atom) {
                    Some(v) => sat |= v != l.negated,
                    None => {
                        let v = var_of_atom[l.atom].expect("non-fixed atom is a variable");
                        if !lits.contains(&(v, l.negated)) {
                            lits.push((v, l.negated));
                        }
                    }
                }
            }
            let tautology = lits.iter().any(|&(v, neg)| lits.contains(&(v, !neg)));
            if sat || tautology {
                constant_sat.push(ci);
                continue;
            }
            if lits.is_empty() {
                if c.is_hard() {
                    unsat_hard += 1;
                }
                continue;
            }
            let (weight, hard) = match effective_weight(c, weights) {
                Weight::Soft(w) => (w, false),
                Weight::Hard => (0.0, true),
            };
            clauses.push(CClause {
                lits,
                weight,
                hard,
                source: ci,
            });
        }
        if unsat_hard > 0 {
            return Err(Error::NoSatisfyingState { unsatisfied: unsat_hard });
        }
        let mut occurs = vec![Vec::new(); atom_of_var.len()];
        for (ci, c) in clauses.iter().enumerate() {
            for &(v, neg) in &c.lits {
                occurs[v].push((ci, neg));
            }
        }
        Ok(Compiled {
            atom_of_var,
            var_of_atom,
            clauses,
            occurs,
            constant_sat,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.atom_of_var.len()
    }

    pub fn max_abs_soft(&self) -> f64 {
        self.clauses
            .iter()
            .filter(|c| !c.hard)
            .map(|c| c.weight.abs())
            .fold(0.0, f64::max)
    }

    /// Per clause: number of true literals under `val`.
    pub fn true_counts(&self, val: &[bool]) -> Vec<u32> {
        self.clauses
            .iter()
            .map(|c| c.lits.iter().filter(|&&(v, neg)| val[v] != neg).count() as u32)
            .collect()
    }

    /// Full per-atom world from variable values.
    pub fn atom_world(&self, net: &GroundNetwork, val: &[bool], clamp: Option<&[Option<bool>]>) -> Vec<bool> {
        (0..net.atoms.len())
            .map(|a| match self.var_of_atom[a] {
                Some(v) => val[v],
                None => net
                    .atoms
                    .status(a)
                    .fixed_value()
                    .or_else(|| clamp.and_then(|c| c.get(a).copied().flatten()))
                    .unwrap_or(false),
            })
            .collect()
    }

    /// Groups of variables tied together by hard clauses whose satisfying
    /// assignments are not connected under single flips, so single-site
    /// updates could not move between them. Each group is a sorted variable
    /// list of at most `max_vars` variables.
    /// Distinct variable pairs joined by a binary soft clause of weight at
    /// least `min_weight` in magnitude.
    pub fn heavy_pairs(&self, min_weight: f64) -> Vec<Vec<usize>> {
        let mut pairs: Vec<Vec<usize>> = self
            .clauses
            .iter()
            .filter(|c| !c.hard && c.lits.len() == 2 && c.weight.abs() >= min_weight && c.lits[0].0 != c.lits[1].0)
            .map(|c| {
                let (a, b) = (c.lits[0].0, c.lits[1].0);
                vec![a.min(b), a.max(b)]
            })
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }

    pub fn hard_blocks(&self, max_vars: usize) -> Vec<Vec<usize>> {
        let n = self.num_vars();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for c in self.clauses.iter().filter(|c| c.hard) {
            let first = c.lits[0].0;
            for &(v, _) in &c.lits[1..] {
                let (a, b) = (find(&mut parent, first), find(&mut parent, v));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut hard_of: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (ci, c) in self.clauses.iter().enumerate().filter(|(_, c)| c.hard) {
            let r = find(&mut parent, c.lits[0].0);
            hard_of[r].push(ci);
        }
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
        for v in 0..n {
            let r = find(&mut parent, v);
            members[r].push(v);
        }
        members
            .into_iter()
            .enumerate()
            .filter(|(r, m)| {
                hard_of[*r].len() >= 2 && m.len() > 1 && m.len() <= max_vars && !self.flip_connected(m, &hard_of[*r])
            })
            .map(|(_, m)| m)
            .collect()
    }

    /// Whether the assignments of `vars` satisfying `hard` form one connected
    /// set under single-variable flips.
    fn flip_connected(&self, vars: &[usize], hard: &[usize]) -> bool {
        let k = vars.len();
        let local = |v: usize| vars.binary_search(&v).expect("clause variable in group");
        let masks: Vec<(usize, usize)> = hard
            .iter()
            .map(|&ci| {
                // (variables, required polarity) as bit masks
                let (mut vm, mut pm) = (0, 0);
                for &(v, neg) in &self.clauses[ci].lits {
                    vm |= 1 << local(v);
                    if !neg {
                        pm |= 1 << local(v);
                    }
                }
                (vm, pm)
            })
            .collect();
        let ok = |s: usize| masks.iter().all(|&(vm, pm)| (!(s ^ pm)) & vm != 0);
        let feasible: Vec<usize> = (0..1usize << k).filter(|&s| ok(s)).collect();
        let Some(&first) = feasible.first() else {
            return true;
        };
        let mut seen = vec![false; 1 << k];
        seen[first] = true;
        let mut stack = vec![first];
        let mut reached = 1;
        while let Some(s) = stack.pop() {
            for j in 0..k {
                let t = s ^ (1 << j);
                if !seen[t] && ok(t) {
                    seen[t] = true;
                    reached += 1;
                    stack.push(t);
                }
            }
        }
        reached == feasible.len()
    }
}
