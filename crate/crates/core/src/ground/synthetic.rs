use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AtomStatus, GroundAtomTable, GroundClause, GroundLiteral, GroundNetwork, Origin};
use crate::logic::{GroundAtom, Weight};

/// Shape of a random ground network.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomNetworkParams {
    pub atoms: usize,
    pub clauses: usize,
    /// Literals per clause are drawn from `1..=max_len`.
    pub max_len: usize,
    /// Soft weights are uniform in `[-max_weight, max_weight]`.
    pub max_weight: f64,
    pub hard: usize,
}

impl Default for RandomNetworkParams {
    fn default() -> Self {
        RandomNetworkParams {
            atoms: 12,
            clauses: 20,
            max_len: 3,
            max_weight: 3.0,
            hard: 2,
        }
    }
}

/// Random network over open atoms `X(A0)..`. Every clause is its own formula.
/// Hard clauses are made consistent with a planted world, so the hard part is
/// always satisfiable.
pub fn random_network(p: &RandomNetworkParams, seed: u64) -> GroundNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut atoms = GroundAtomTable::default();
    for i in 0..p.atoms {
        atoms.insert(GroundAtom::new("X", [format!("A{i}")]), AtomStatus::Open);
    }
    let planted: Vec<bool> = (0..p.atoms).map(|_| rng.random_bool(0.5)).collect();
    let mut clauses = Vec::with_capacity(p.clauses);
    for k in 0..p.clauses {
        let len = rng.random_range(1..=p.max_len.min(p.atoms).max(1));
        let mut picked: Vec<usize> = Vec::with_capacity(len);
        while picked.len() < len {
            let a = rng.random_range(0..p.atoms);
            if !picked.contains(&a) {
                picked.push(a);
            }
        }
        let mut literals: Vec<GroundLiteral> = picked
            .into_iter()
            .map(|atom| GroundLiteral {
                atom,
                negated: rng.random_bool(0.5),
            })
            .collect();
        let hard = k < p.hard;
        if hard && !literals.iter().any(|l| planted[l.atom] != l.negated) {
            let j = rng.random_range(0..literals.len());
            literals[j].negated = !literals[j].negated;
        }
        let weight = if hard {
            Weight::Hard
        } else {
            Weight::Soft(rng.random_range(-p.max_weight..=p.max_weight))
        };
        clauses.push(GroundClause {
            literals,
            weight,
            origin: Origin::Formula(k),
        });
    }
    GroundNetwork {
        queries: (0..p.atoms).collect(),
        constant_true: vec![0.0; p.clauses],
        constant_false: vec![0.0; p.clauses],
        formula_weights: clauses.iter().map(|c| c.weight).collect(),
        atoms,
        clauses,
    }
}
