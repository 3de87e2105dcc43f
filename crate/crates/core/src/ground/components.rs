use super::GroundNetwork;

/// A connected piece of a network: variable atoms linked through shared
/// clauses, with the clauses that mention them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    /// Variable atom indices, ascending.
    pub atoms: Vec<usize>,
    /// Clause indices, ascending.
    pub clauses: Vec<usize>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Partition the variable atoms by clause co-occurrence. Clauses that mention
/// no variable atom belong to no component.
pub fn connected_components(net: &GroundNetwork) -> Vec<Component> {
    let n = net.atoms.len();
    let mut parent: Vec<usize> = (0..n).collect();
    let is_var = |a: usize| net.atoms.status(a).is_variable();
    for c in &net.clauses {
        let mut first = None;
        for l in c.literals.iter().filter(|l| is_var(l.atom)) {
            match first {
                None => first = Some(l.atom),
                Some(f) => {
                    let (a, b) = (find(&mut parent, f), find(&mut parent, l.atom));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
    }
    let mut slot = vec![usize::MAX; n];
    let mut out: Vec<Component> = Vec::new();
    for a in (0..n).filter(|&a| is_var(a)) {
        let r = find(&mut parent, a);
        if slot[r] == usize::MAX {
            slot[r] = out.len();
            out.push(Component {
                atoms: Vec::new(),
                clauses: Vec::new(),
            });
        }
        out[slot[r]].atoms.push(a);
    }
    for (ci, c) in net.clauses.iter().enumerate() {
        if let Some(l) = c.literals.iter().find(|l| is_var(l.atom)) {
            let r = find(&mut parent, l.atom);
            out[slot[r]].clauses.push(ci);
        }
    }
    out
}
