use std::collections::{HashMap, HashSet};

use super::{Atom, Expr, Formula, KnowledgeBase, Literal, Quantifier, Term, Variable, Weight};
use crate::error::{Error, Result};

/// Clause-count ceiling for the distribution step.
const MAX_CLAUSES: usize = 512;

enum Nnf {
    Lit(Literal),
    And(Vec<Nnf>),
    Or(Vec<Nnf>),
    /// Existential block in positive position: a disjunction of literals.
    Exists(Vec<Literal>),
}

/// Convert a rule body into weighted clauses.
///
/// Existentials in positive position must scope over a disjunction of
/// literals; they are kept as existential variables and expanded at grounding
/// time. Existentials under an odd number of negations are universals.
/// When the CNF has several clauses a soft weight is split equally.
pub fn clausify(
    expr: &Expr,
    weight: Weight,
    kb: &KnowledgeBase,
    source: &str,
    rule: usize,
) -> Result<Vec<Formula>> {
    check_scopes(expr, &mut HashSet::new())?;

    let mut existential = HashSet::new();
    let nnf = to_nnf(expr, true, &mut existential)?;
    let clauses = cnf(&nnf)?;
    let n = clauses.len();
    let weight = match weight {
        Weight::Soft(w) => Weight::Soft(w / n as f64),
        Weight::Hard => Weight::Hard,
    };

    clauses
        .into_iter()
        .map(|lits| {
            let mut literals: Vec<Literal> = Vec::with_capacity(lits.len());
            for l in lits {
                if !literals.contains(&l) {
                    literals.push(l);
                }
            }
            let variables = infer_variables(&literals, kb, &existential)?;
            Ok(Formula {
                weight,
                literals,
                variables,
                source: source.to_string(),
                rule,
            })
        })
        .collect()
}

fn infer_variables(
    literals: &[Literal],
    kb: &KnowledgeBase,
    existential: &HashSet<String>,
) -> Result<Vec<Variable>> {
    let mut vars: Vec<Variable> = Vec::new();
    for l in literals {
        let schema = kb
            .schema(&l.atom.predicate)
            .ok_or_else(|| Error::UndeclaredPredicate(l.atom.predicate.clone()))?;
        for (term, domain) in l.atom.args.iter().zip(&schema.arg_domains) {
            let Term::Var(name) = term else { continue };
            match vars.iter().find(|v| &v.name == name) {
                Some(v) if &v.domain != domain => {
                    return Err(Error::DomainMismatch {
                        name: name.clone(),
                        expected: v.domain.clone(),
                        found: domain.clone(),
                    })
                }
                Some(_) => {}
                None => vars.push(Variable {
                    name: name.clone(),
                    domain: domain.clone(),
                    quantifier: if existential.contains(name) {
                        Quantifier::Existential
                    } else {
                        Quantifier::Universal
                    },
                }),
            }
        }
    }
    Ok(vars)
}

/// Existential variables must be bound once and not occur outside their scope.
fn check_scopes(expr: &Expr, bound: &mut HashSet<String>) -> Result<()> {
    fn count_vars(e: &Expr, counts: &mut HashMap<String, usize>) {
        e.visit_atoms(&mut |a: &Atom| {
            for v in a.vars() {
                *counts.entry(v.to_string()).or_default() += 1;
            }
        });
    }

    let mut total = HashMap::new();
    count_vars(expr, &mut total);

    fn walk(e: &Expr, total: &HashMap<String, usize>, bound: &mut HashSet<String>) -> Result<()> {
        match e {
            Expr::Atom(_) => Ok(()),
            Expr::Not(x) => walk(x, total, bound),
            Expr::And(xs) | Expr::Or(xs) => xs.iter().try_for_each(|x| walk(x, total, bound)),
            Expr::Implies(a, b) | Expr::Iff(a, b) => {
                walk(a, total, bound)?;
                walk(b, total, bound)
            }
            Expr::Exists(vars, body) => {
                let mut inner = HashMap::new();
                count_vars(body, &mut inner);
                for v in vars {
                    if !bound.insert(v.clone()) {
                        return Err(Error::UnsupportedFormula(format!("variable `{v}` quantified twice")));
                    }
                    if total.get(v).copied().unwrap_or(0) != inner.get(v).copied().unwrap_or(0) {
                        return Err(Error::UnsupportedFormula(format!(
                            "existential variable `{v}` used outside its scope"
                        )));
                    }
                }
                walk(body, total, bound)
            }
        }
    }

    walk(expr, &total, bound)
}

fn to_nnf(e: &Expr, positive: bool, existential: &mut HashSet<String>) -> Result<Nnf> {
    Ok(match e {
        Expr::Atom(a) => Nnf::Lit(Literal {
            atom: a.clone(),
            negated: !positive,
        }),
        Expr::Not(x) => to_nnf(x, !positive, existential)?,
        Expr::And(xs) => {
            let parts = xs.iter().map(|x| to_nnf(x, positive, existential)).collect::<Result<_>>()?;
            if positive {
                Nnf::And(parts)
            } else {
                Nnf::Or(parts)
            }
        }
        Expr::Or(xs) => {
            let parts = xs.iter().map(|x| to_nnf(x, positive, existential)).collect::<Result<_>>()?;
            if positive {
                Nnf::Or(parts)
            } else {
                Nnf::And(parts)
            }
        }
        Expr::Implies(a, b) => {
            let (a, b) = (to_nnf(a, !positive, existential)?, to_nnf(b, positive, existential)?);
            if positive {
                Nnf::Or(vec![a, b])
            } else {
                Nnf::And(vec![a, b])
            }
        }
        Expr::Iff(a, b) => {
            if has_exists(a) || has_exists(b) {
                return Err(Error::UnsupportedFormula(
                    "existential inside `<=>` occurs in both polarities".into(),
                ));
            }
            let (pa, na) = (to_nnf(a, true, existential)?, to_nnf(a, false, existential)?);
            let (pb, nb) = (to_nnf(b, true, existential)?, to_nnf(b, false, existential)?);
            if positive {
                Nnf::And(vec![Nnf::Or(vec![na, pb]), Nnf::Or(vec![pa, nb])])
            } else {
                Nnf::Or(vec![Nnf::And(vec![pa, nb]), Nnf::And(vec![na, pb])])
            }
        }
        Expr::Exists(vars, body) => {
            if positive {
                existential.extend(vars.iter().cloned());
            }
            let inner = to_nnf(body, positive, existential)?;
            if !positive {
                // not-exists is a universal over the same body
                inner
            } else {
                let mut lits = Vec::new();
                if !collect_disjunction(&inner, &mut lits) {
                    return Err(Error::UnsupportedFormula(
                        "existential must scope over a disjunction of literals".into(),
                    ));
                }
                Nnf::Exists(lits)
            }
        }
    })
}

fn has_exists(e: &Expr) -> bool {
    match e {
        Expr::Atom(_) => false,
        Expr::Exists(..) => true,
        Expr::Not(x) => has_exists(x),
        Expr::And(xs) | Expr::Or(xs) => xs.iter().any(has_exists),
        Expr::Implies(a, b) | Expr::Iff(a, b) => has_exists(a) || has_exists(b),
    }
}

fn collect_disjunction(n: &Nnf, out: &mut Vec<Literal>) -> bool {
    match n {
        Nnf::Lit(l) => {
            out.push(l.clone());
            true
        }
        Nnf::Or(xs) => xs.iter().all(|x| collect_disjunction(x, out)),
        Nnf::Exists(ls) => {
            out.extend(ls.iter().cloned());
            true
        }
        Nnf::And(xs) if xs.len() == 1 => collect_disjunction(&xs[0], out),
        Nnf::And(_) => false,
    }
}

fn cnf(n: &Nnf) -> Result<Vec<Vec<Literal>>> {
    Ok(match n {
        Nnf::Lit(l) => vec![vec![l.clone()]],
        Nnf::Exists(ls) => vec![ls.clone()],
        Nnf::And(xs) => {
            let mut out = Vec::new();
            for x in xs {
                out.extend(cnf(x)?);
            }
            out
        }
        Nnf::Or(xs) => {
            let mut acc: Vec<Vec<Literal>> = vec![Vec::new()];
            for x in xs {
                let part = cnf(x)?;
                if acc.len() * part.len() > MAX_CLAUSES {
                    return Err(Error::UnsupportedFormula(format!(
                        "clausal form exceeds {MAX_CLAUSES} clauses"
                    )));
                }
                let mut next = Vec::with_capacity(acc.len() * part.len());
                for a in &acc {
                    for p in &part {
                        let mut c = a.clone();
                        c.extend(p.iter().cloned());
                        next.push(c);
                    }
                }
                acc = next;
            }
            acc
        }
    })
}
