use super::effective_weight;
use crate::error::{Error, Result};
use crate::ground::{connected_components, GroundNetwork, Origin};
use crate::logic::Weight;

/// Largest component enumerated exactly.
pub const MAX_EXACT_VARS: usize = 20;

#[derive(Debug, Clone)]
pub struct ExactResult {
    /// Per atom of the network: probability of being true (0 or 1 for fixed
    /// and clamped atoms).
    pub marginals: Vec<f64>,
    /// Log partition function over the free variables, including the
    /// contribution of groundings satisfied by evidence.
    pub log_z: f64,
    /// Per formula: expected number of true groundings.
    pub expected_counts: Vec<f64>,
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Enumerate every world of each connected component. `weights` overrides
/// per-formula soft weights; `clamp` fixes selected atoms.
pub fn exact_enumerate(
    net: &GroundNetwork,
    weights: Option<&[f64]>,
    clamp: Option<&[Option<bool>]>,
) -> Result<ExactResult> {
    let n_atoms = net.atoms.len();
    let fixed = |a: usize| -> Option<bool> {
        net.atoms
            .status(a)
            .fixed_value()
            .or_else(|| clamp.and_then(|c| c.get(a).copied().flatten()))
    };
    let mut marginals: Vec<f64> = (0..n_atoms)
        .map(|a| fixed(a).map_or(0.5, |v| v as u8 as f64))
        .collect();
    let nf = net.num_formulas();
    let mut expected = net.constant_true.clone();
    let mut log_z = 0.0;
    for k in 0..nf {
        if let Weight::Soft(w0) = net.formula_weights[k] {
            let w = weights.map_or(w0, |w| w[k]);
            log_z += w * net.constant_true[k];
        }
    }

    // clauses with no free atom are constants
    let free = |a: usize| net.atoms.status(a).is_variable() && fixed(a).is_none();
    for c in &net.clauses {
        if c.literals.iter().any(|l| free(l.atom)) {
            continue;
        }
        let sat = c.satisfied(|a| fixed(a).unwrap_or(false));
        match effective_weight(c, weights) {
            Weight::Hard if !sat => return Err(Error::NoSatisfyingState { unsatisfied: 1 }),
            Weight::Hard => {}
            Weight::Soft(w) => {
                if sat {
                    log_z += w;
                }
            }
        }
        if let (Origin::Formula(k), true) = (c.origin, sat) {
            expected[k] += 1.0;
        }
    }

    for comp in connected_components(net) {
        let vars: Vec<usize> = comp.atoms.iter().copied().filter(|&a| free(a)).collect();
        if vars.len() > MAX_EXACT_VARS {
            return Err(Error::ResourceCeiling(format!(
                "exact enumeration limited to {MAX_EXACT_VARS} variables per component, found {}",
                vars.len()
            )));
        }
        let clauses: Vec<usize> = comp
            .clauses
            .iter()
            .copied()
            .filter(|&ci| net.clauses[ci].literals.iter().any(|l| free(l.atom)))
            .collect();
        let mut pos = vec![usize::MAX; n_atoms];
        for (j, &a) in vars.iter().enumerate() {
            pos[a] = j;
        }
        let n_worlds = 1usize << vars.len();
        let value = |world: usize, a: usize| {
            if pos[a] != usize::MAX {
                world & (1 << pos[a]) != 0
            } else {
                fixed(a).unwrap_or(false)
            }
        };
        let mut scores = Vec::with_capacity(n_worlds);
        for world in 0..n_worlds {
            let mut s = 0.0;
            for &ci in &clauses {
                let c = &net.clauses[ci];
                let sat = c.satisfied(|a| value(world, a));
                match effective_weight(c, weights) {
                    Weight::Hard if !sat => s = f64::NEG_INFINITY,
                    Weight::Soft(w) if sat => s += w,
                    _ => {}
                }
            }
            scores.push(s);
        }
        let lz = log_sum_exp(&scores);
        if lz == f64::NEG_INFINITY {
            return Err(Error::NoSatisfyingState { unsatisfied: 1 });
        }
        log_z += lz;
        let mut m = vec![0.0; vars.len()];
        for (world, s) in scores.iter().enumerate() {
            let p = (s - lz).exp();
            if p == 0.0 {
                continue;
            }
            for (j, mj) in m.iter_mut().enumerate() {
                if world & (1 << j) != 0 {
                    *mj += p;
                }
            }
            for &ci in &clauses {
                let c = &net.clauses[ci];
                if let Origin::Formula(k) = c.origin {
                    if c.satisfied(|a| value(world, a)) {
                        expected[k] += p;
                    }
                }
            }
        }
        for (j, &a) in vars.iter().enumerate() {
            marginals[a] = m[j].clamp(0.0, 1.0);
        }
    }
    Ok(ExactResult {
        marginals,
        log_z,
        expected_counts: expected,
    })
}

/// Log score `Σ w·sat` of a full world, `None` when a hard clause is violated.
/// Groundings satisfied by evidence are not included.
pub fn world_score(net: &GroundNetwork, value: &[bool]) -> Option<f64> {
    let mut s = 0.0;
    for c in &net.clauses {
        let sat = c.satisfied(|a| net.value_of(a, value));
        match c.weight {
            Weight::Hard if !sat => return None,
            Weight::Soft(w) if sat => s += w,
            _ => {}
        }
    }
    Some(s)
}
