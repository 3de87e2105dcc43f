//! Bottom-up grounding of a knowledge base against evidence.
//!
//! Negated literals over closed-world predicates act as generators: only
//! bindings that make every such atom true (or soft) can yield a clause that
//! is not already satisfied, so those bindings are produced by joining the
//! evidence tuples instead of enumerating the full product. Everything else
//! is satisfied by the closed-world assumption and only counted.

mod components;
mod synthetic;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::evidence::{log_odds_weight, EvidenceSet, Truth};
use crate::logic::{GroundAtom, KnowledgeBase, Quantifier, Term, Weight};
use crate::parser::Query;

pub use components::{connected_components, Component};
pub use synthetic::{random_network, RandomNetworkParams};

pub const DEFAULT_MAX_CLAUSES: usize = 5_000_000;

pub type Domains = BTreeMap<String, BTreeSet<String>>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AtomStatus {
    True,
    False,
    Soft(f64),
    Open,
}

impl AtomStatus {
    /// Random variable during inference (open or soft evidence).
    pub fn is_variable(&self) -> bool {
        matches!(self, AtomStatus::Open | AtomStatus::Soft(_))
    }

    pub fn fixed_value(&self) -> Option<bool> {
        match self {
            AtomStatus::True => Some(true),
            AtomStatus::False => Some(false),
            _ => None,
        }
    }
}

/// Dense, insertion-ordered table of the ground atoms a network refers to.
#[derive(Debug, Clone, Default)]
pub struct GroundAtomTable {
    atoms: Vec<GroundAtom>,
    status: Vec<AtomStatus>,
    index: HashMap<GroundAtom, usize>,
}

impl GroundAtomTable {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atom(&self, i: usize) -> &GroundAtom {
        &self.atoms[i]
    }

    pub fn status(&self, i: usize) -> AtomStatus {
        self.status[i]
    }

    pub fn get(&self, atom: &GroundAtom) -> Option<usize> {
        self.index.get(atom).copied()
    }

    pub fn atoms(&self) -> &[GroundAtom] {
        &self.atoms
    }

    /// Index of `atom`, adding it with `status` if absent.
    pub fn insert(&mut self, atom: GroundAtom, status: AtomStatus) -> usize {
        if let Some(&i) = self.index.get(&atom) {
            return i;
        }
        let i = self.atoms.len();
        self.index.insert(atom.clone(), i);
        self.atoms.push(atom);
        self.status.push(status);
        i
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Formula(usize),
    /// Unit clause encoding soft evidence on the given atom.
    SoftEvidence(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroundLiteral {
    pub atom: usize,
    pub negated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundClause {
    pub literals: Vec<GroundLiteral>,
    pub weight: Weight,
    pub origin: Origin,
}

impl GroundClause {
    pub fn is_hard(&self) -> bool {
        self.weight.is_hard()
    }

    pub fn formula(&self) -> Option<usize> {
        match self.origin {
            Origin::Formula(k) => Some(k),
            Origin::SoftEvidence(_) => None,
        }
    }

    /// Truth under `value`, which gives the value of every referenced atom.
    pub fn satisfied(&self, value: impl Fn(usize) -> bool) -> bool {
        self.literals.iter().any(|l| value(l.atom) != l.negated)
    }
}

#[derive(Debug, Clone, Default)]
pub struct GroundNetwork {
    pub atoms: GroundAtomTable,
    pub clauses: Vec<GroundClause>,
    /// Atom indices of the requested query groundings, in query order.
    pub queries: Vec<usize>,
    /// Per formula: groundings satisfied outright by evidence (pruned).
    pub constant_true: Vec<f64>,
    /// Per formula: soft groundings falsified outright by evidence.
    pub constant_false: Vec<f64>,
    /// Formula weights at grounding time.
    pub formula_weights: Vec<Weight>,
}

impl GroundNetwork {
    pub fn num_formulas(&self) -> usize {
        self.constant_true.len()
    }

    /// Indices of the atoms that are random variables.
    pub fn variables(&self) -> Vec<usize> {
        (0..self.atoms.len()).filter(|&i| self.atoms.status(i).is_variable()).collect()
    }

    /// Log-odds weights of the soft-evidence unit clauses, by atom.
    pub fn soft_unit_weights(&self) -> Vec<(usize, f64)> {
        self.clauses
            .iter()
            .filter_map(|c| match (c.origin, c.weight) {
                (Origin::SoftEvidence(a), Weight::Soft(w)) => Some((a, w)),
                _ => None,
            })
            .collect()
    }

    /// Number of true groundings of every formula in a world. `value[i]` is
    /// the truth of atom `i`; entries for fixed atoms are ignored.
    pub fn formula_counts(&self, value: &[bool]) -> Vec<f64> {
        let mut n = self.constant_true.clone();
        for c in &self.clauses {
            if let Origin::Formula(k) = c.origin {
                if c.satisfied(|a| self.value_of(a, value)) {
                    n[k] += 1.0;
                }
            }
        }
        n
    }

    /// Value of an atom: its evidence value when fixed, otherwise `value[i]`.
    pub fn value_of(&self, atom: usize, value: &[bool]) -> bool {
        self.atoms.status(atom).fixed_value().unwrap_or(value[atom])
    }

    /// Text dump: an atom legend followed by one clause per line as
    /// `w | ±atom ±atom ...`.
    pub fn dump(&self) -> String {
        let mut out = String::from("# atoms\n");
        for (i, a) in self.atoms.atoms().iter().enumerate() {
            let st = match self.atoms.status(i) {
                AtomStatus::True => "true".to_string(),
                AtomStatus::False => "false".to_string(),
                AtomStatus::Soft(p) => format!("soft {p}"),
                AtomStatus::Open => "open".to_string(),
            };
            let _ = writeln!(out, "{i}\t{a}\t{st}");
        }
        out.push_str("# clauses\n");
        for c in &self.clauses {
            let w = match c.weight {
                Weight::Soft(w) => format!("{w}"),
                Weight::Hard => "hard".to_string(),
            };
            let lits: Vec<String> = c
                .literals
                .iter()
                .map(|l| format!("{}{}", if l.negated { '-' } else { '+' }, l.atom))
                .collect();
            let _ = writeln!(out, "{w} | {}", lits.join(" "));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroundingMode {
    /// Join-based grounding with evidence simplification.
    Pruned,
    /// Every binding, no simplification. Reference for testing.
    Naive,
}

#[derive(Debug, Clone, Copy)]
pub struct GroundingOptions {
    pub mode: GroundingMode,
    pub max_clauses: usize,
}

impl Default for GroundingOptions {
    fn default() -> Self {
        GroundingOptions {
            mode: GroundingMode::Pruned,
            max_clauses: DEFAULT_MAX_CLAUSES,
        }
    }
}

/// Domains from KB enumerations plus every constant that appears in evidence,
/// typed by argument position.
pub fn collect_domains(kb: &KnowledgeBase, evidence: &EvidenceSet) -> Result<Domains> {
    let mut domains = kb.domains().clone();
    for r in evidence.records() {
        let schema = kb
            .schema(&r.atom.predicate)
            .ok_or_else(|| Error::UndeclaredPredicate(r.atom.predicate.clone()))?;
        if schema.arity() != r.atom.args.len() {
            return Err(Error::ArityMismatch {
                name: r.atom.predicate.clone(),
                expected: schema.arity(),
                found: r.atom.args.len(),
            });
        }
        for (c, d) in r.atom.args.iter().zip(&schema.arg_domains) {
            domains.entry(d.clone()).or_default().insert(c.clone());
        }
    }
    Ok(domains)
}

/// Ground with default options.
pub fn ground(kb: &KnowledgeBase, evidence: &EvidenceSet, queries: &[Query]) -> Result<GroundNetwork> {
    ground_with(kb, evidence, queries, &GroundingOptions::default())
}

#[derive(Clone, Copy)]
enum Arg {
    Const(u32),
    Slot(usize),
}

struct CLit {
    pred: usize,
    args: Vec<Arg>,
    negated: bool,
    /// Existential slots this literal mentions.
    ex_slots: Vec<usize>,
}

struct Grounder<'a> {
    kb: &'a KnowledgeBase,
    mode: GroundingMode,
    max_clauses: usize,
    symbols: Vec<String>,
    symbol_ids: HashMap<String, u32>,
    /// Domain members as symbol ids, by domain name.
    domains: HashMap<String, Vec<u32>>,
    /// Evidence by (predicate id, argument ids).
    evidence: HashMap<(usize, Vec<u32>), Truth>,
    /// True or soft tuples per closed-world predicate, for generators.
    positive: Vec<Rc<Vec<Vec<u32>>>>,
    /// (variable, domain) per slot of the formula being grounded.
    slots: Vec<(String, String)>,
    net: GroundNetwork,
}

impl<'a> Grounder<'a> {
    fn sym(&mut self, s: &str) -> u32 {
        if let Some(&i) = self.symbol_ids.get(s) {
            return i;
        }
        let i = self.symbols.len() as u32;
        self.symbols.push(s.to_string());
        self.symbol_ids.insert(s.to_string(), i);
        i
    }

    fn ground_atom(&self, pred: usize, args: &[u32]) -> GroundAtom {
        GroundAtom {
            predicate: self.kb.schemas()[pred].name.clone(),
            args: args.iter().map(|&a| self.symbols[a as usize].clone()).collect(),
        }
    }

    fn status(&self, pred: usize, args: &[u32]) -> AtomStatus {
        match self.evidence.get(&(pred, args.to_vec())) {
            Some(Truth::True) => AtomStatus::True,
            Some(Truth::False) => AtomStatus::False,
            Some(Truth::Soft(p)) => AtomStatus::Soft(*p),
            None if self.kb.schemas()[pred].closed_world => AtomStatus::False,
            None => AtomStatus::Open,
        }
    }

    fn push_clause(&mut self, clause: GroundClause) -> Result<()> {
        if self.net.clauses.len() >= self.max_clauses {
            return Err(Error::ResourceCeiling(format!(
                "more than {} ground clauses",
                self.max_clauses
            )));
        }
        self.net.clauses.push(clause);
        Ok(())
    }

    fn ground_formula(&mut self, k: usize) -> Result<()> {
        let f = &self.kb.formulas()[k];
        let mut slot_of: HashMap<&str, usize> = HashMap::new();
        let mut slot_domain: Vec<String> = Vec::new();
        let mut n_universal = 0;
        self.slots.clear();
        for q in [Quantifier::Universal, Quantifier::Existential] {
            for v in f.variables.iter().filter(|v| v.quantifier == q) {
                slot_of.insert(v.name.as_str(), slot_domain.len());
                slot_domain.push(v.domain.clone());
                self.slots.push((v.name.clone(), v.domain.clone()));
                if q == Quantifier::Universal {
                    n_universal += 1;
                }
            }
        }
        let mut lits = Vec::with_capacity(f.literals.len());
        for l in &f.literals {
            let pred = self
                .kb
                .schema_id(&l.atom.predicate)
                .ok_or_else(|| Error::UndeclaredPredicate(l.atom.predicate.clone()))?;
            let mut args = Vec::with_capacity(l.atom.args.len());
            let mut ex_slots = Vec::new();
            for t in &l.atom.args {
                match t {
                    Term::Const(c) => args.push(Arg::Const(self.sym(c))),
                    Term::Var(v) => {
                        let s = slot_of[v.as_str()];
                        if s >= n_universal && !ex_slots.contains(&s) {
                            ex_slots.push(s);
                        }
                        args.push(Arg::Slot(s));
                    }
                }
            }
            lits.push(CLit {
                pred,
                args,
                negated: l.negated,
                ex_slots,
            });
        }
        let doms: Vec<Vec<u32>> = slot_domain
            .iter()
            .map(|d| self.domains.get(d).cloned().unwrap_or_default())
            .collect();

        // generators: negated, closed-world, universal-only literals
        let mut generators: Vec<usize> = Vec::new();
        if self.mode == GroundingMode::Pruned {
            for (i, l) in lits.iter().enumerate() {
                if l.negated && l.ex_slots.is_empty() && self.kb.schemas()[l.pred].closed_world {
                    generators.push(i);
                }
            }
            // smallest relation first
            generators.sort_by_key(|&i| self.positive[lits[i].pred].len());
        }

        let mut total: u128 = 1;
        for d in &doms[..n_universal] {
            total = total.saturating_mul(d.len() as u128);
        }

        let mut binding: Vec<Option<u32>> = vec![None; slot_domain.len()];
        let mut emitted: u128 = 0;
        self.join(k, &lits, &generators, 0, &doms, n_universal, &mut binding, &mut emitted)?;
        if self.mode == GroundingMode::Pruned {
            self.net.constant_true[k] += (total - emitted) as f64;
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn join(
        &mut self,
        k: usize,
        lits: &[CLit],
        generators: &[usize],
        g: usize,
        doms: &[Vec<u32>],
        n_universal: usize,
        binding: &mut Vec<Option<u32>>,
        emitted: &mut u128,
    ) -> Result<()> {
        if g == generators.len() {
            return self.enumerate_free(k, lits, doms, n_universal, binding, emitted);
        }
        let lit = &lits[generators[g]];
        // shared handle: the same relation may feed several generators
        let tuples = Rc::clone(&self.positive[lit.pred]);
        let mut result = Ok(());
        for t in tuples.iter() {
            let mut newly: Vec<usize> = Vec::new();
            let mut ok = true;
            for (a, &c) in lit.args.iter().zip(t) {
                match *a {
                    Arg::Const(x) => ok = x == c,
                    Arg::Slot(s) => match binding[s] {
                        Some(b) => ok = b == c,
                        None => {
                            binding[s] = Some(c);
                            newly.push(s);
                        }
                    },
                }
                if !ok {
                    break;
                }
            }
            if ok {
                result = self.join(k, lits, generators, g + 1, doms, n_universal, binding, emitted);
            }
            for s in newly {
                binding[s] = None;
            }
            if result.is_err() {
                break;
            }
        }
        result
    }

    fn enumerate_free(
        &mut self,
        k: usize,
        lits: &[CLit],
        doms: &[Vec<u32>],
        n_universal: usize,
        binding: &mut [Option<u32>],
        emitted: &mut u128,
    ) -> Result<()> {
        let free: Vec<usize> = (0..n_universal).filter(|&s| binding[s].is_none()).collect();
        if free.iter().any(|&s| doms[s].is_empty()) {
            return Ok(());
        }
        let mut idx = vec![0usize; free.len()];
        loop {
            for (j, &s) in free.iter().enumerate() {
                binding[s] = Some(doms[s][idx[j]]);
            }
            *emitted += 1;
            self.emit(k, lits, doms, binding)?;
            let mut j = 0;
            while j < idx.len() {
                idx[j] += 1;
                if idx[j] < doms[free[j]].len() {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == idx.len() {
                break;
            }
        }
        for &s in &free {
            binding[s] = None;
        }
        Ok(())
    }

    /// Build, simplify and store the ground clause for one full binding of
    /// the universal variables.
    fn emit(&mut self, k: usize, lits: &[CLit], doms: &[Vec<u32>], binding: &mut [Option<u32>]) -> Result<()> {
        let naive = self.mode == GroundingMode::Naive;
        let mut out: Vec<GroundLiteral> = Vec::new();
        let mut satisfied = false;
        let mut args: Vec<u32> = Vec::new();
        for l in lits {
            // odometer over this literal's existential slots (one pass if none)
            let mut idx = vec![0usize; l.ex_slots.len()];
            if let Some(&s) = l.ex_slots.iter().find(|&&s| doms[s].is_empty()) {
                let (var, domain) = self.slots[s].clone();
                return Err(Error::EmptyDomain { var, domain });
            }
            loop {
                for (j, &s) in l.ex_slots.iter().enumerate() {
                    binding[s] = Some(doms[s][idx[j]]);
                }
                args.clear();
                for a in &l.args {
                    args.push(match *a {
                        Arg::Const(c) => c,
                        Arg::Slot(s) => binding[s].expect("slot bound"),
                    });
                }
                let status = self.status(l.pred, &args);
                match status.fixed_value() {
                    Some(v) if !naive => {
                        if v != l.negated {
                            satisfied = true;
                        }
                    }
                    _ => {
                        let atom = self.ground_atom(l.pred, &args);
                        let i = self.net.atoms.insert(atom, status);
                        out.push(GroundLiteral {
                            atom: i,
                            negated: l.negated,
                        });
                    }
                }
                let mut j = 0;
                while j < idx.len() {
                    idx[j] += 1;
                    if idx[j] < doms[l.ex_slots[j]].len() {
                        break;
                    }
                    idx[j] = 0;
                    j += 1;
                }
                if j == idx.len() {
                    break;
                }
            }
            for &s in &l.ex_slots {
                binding[s] = None;
            }
        }

        let weight = self.kb.formulas()[k].weight;
        if naive {
            let violated = out
                .iter()
                .all(|l| self.net.atoms.status(l.atom).fixed_value() == Some(l.negated));
            if violated && weight.is_hard() {
                return Err(self.unsatisfiable(k, binding));
            }
            return self.push_clause(GroundClause {
                literals: out,
                weight,
                origin: Origin::Formula(k),
            });
        }

        if satisfied {
            self.net.constant_true[k] += 1.0;
            return Ok(());
        }
        // tautology, then duplicate merge
        let tautology = out
            .iter()
            .any(|a| out.iter().any(|b| a.atom == b.atom && a.negated != b.negated));
        if tautology {
            self.net.constant_true[k] += 1.0;
            return Ok(());
        }
        let mut merged: Vec<GroundLiteral> = Vec::with_capacity(out.len());
        for l in out {
            if !merged.contains(&l) {
                merged.push(l);
            }
        }
        if merged.is_empty() {
            if weight.is_hard() {
                return Err(self.unsatisfiable(k, binding));
            }
            self.net.constant_false[k] += 1.0;
            return Ok(());
        }
        self.push_clause(GroundClause {
            literals: merged,
            weight,
            origin: Origin::Formula(k),
        })
    }

    fn unsatisfiable(&self, k: usize, binding: &[Option<u32>]) -> Error {
        let f = &self.kb.formulas()[k];
        let mut parts = Vec::new();
        let universal = f.variables.iter().filter(|v| v.quantifier == Quantifier::Universal);
        for (s, v) in universal.enumerate() {
            if let Some(c) = binding[s] {
                parts.push(format!("{}={}", v.name, self.symbols[c as usize]));
            }
        }
        Error::Unsatisfiable {
            formula: k,
            rule: f.source.clone(),
            binding: if parts.is_empty() {
                "no variables".to_string()
            } else {
                parts.join(", ")
            },
        }
    }

    fn query_atoms(&mut self, queries: &[Query]) -> Result<()> {
        for q in queries {
            let (pred, pattern): (usize, Vec<Option<u32>>) = match q {
                Query::Predicate(name) => {
                    let p = self.kb.schema_id(name).ok_or_else(|| Error::UndeclaredPredicate(name.clone()))?;
                    (p, vec![None; self.kb.schemas()[p].arity()])
                }
                Query::Pattern(atom) => {
                    self.kb.check_atom(atom)?;
                    let p = self.kb.schema_id(&atom.predicate).expect("checked");
                    let mut pat = Vec::new();
                    for t in &atom.args {
                        pat.push(match t {
                            Term::Const(c) => Some(self.sym(c)),
                            Term::Var(_) => None,
                        });
                    }
                    (p, pat)
                }
            };
            let schema = self.kb.schemas()[pred].clone();
            // repeated variables in a pattern must take equal values
            let vars: Vec<Option<&str>> = match q {
                Query::Pattern(atom) => atom
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) => Some(v.as_str()),
                        Term::Const(_) => None,
                    })
                    .collect(),
                Query::Predicate(_) => vec![None; schema.arity()],
            };
            let choices: Vec<Vec<u32>> = pattern
                .iter()
                .zip(&schema.arg_domains)
                .map(|(p, d)| match p {
                    Some(c) => vec![*c],
                    None => self.domains.get(d).cloned().unwrap_or_default(),
                })
                .collect();
            if choices.iter().any(|c| c.is_empty()) {
                continue;
            }
            let mut idx = vec![0usize; choices.len()];
            loop {
                let args: Vec<u32> = idx.iter().zip(&choices).map(|(&i, c)| c[i]).collect();
                let consistent = (0..args.len()).all(|a| {
                    (0..a).all(|b| vars[a].is_none() || vars[a] != vars[b] || args[a] == args[b])
                });
                if consistent {
                    let status = self.status(pred, &args);
                    let atom = self.ground_atom(pred, &args);
                    let i = self.net.atoms.insert(atom, status);
                    if !self.net.queries.contains(&i) {
                        self.net.queries.push(i);
                    }
                }
                let mut j = 0;
                while j < idx.len() {
                    idx[j] += 1;
                    if idx[j] < choices[j].len() {
                        break;
                    }
                    idx[j] = 0;
                    j += 1;
                }
                if j == idx.len() {
                    break;
                }
            }
        }
        Ok(())
    }
}

/// Instantiate `kb` against `evidence`, registering the query groundings.
pub fn ground_with(
    kb: &KnowledgeBase,
    evidence: &EvidenceSet,
    queries: &[Query],
    opts: &GroundingOptions,
) -> Result<GroundNetwork> {
    let evidence = evidence.normalized()?;
    let domains = collect_domains(kb, &evidence)?;
    let mut g = Grounder {
        kb,
        mode: opts.mode,
        max_clauses: opts.max_clauses,
        symbols: Vec::new(),
        symbol_ids: HashMap::new(),
        domains: HashMap::new(),
        evidence: HashMap::new(),
        positive: Vec::new(),
        slots: Vec::new(),
        net: GroundNetwork {
            constant_true: vec![0.0; kb.formulas().len()],
            constant_false: vec![0.0; kb.formulas().len()],
            formula_weights: kb.formulas().iter().map(|f| f.weight).collect(),
            ..Default::default()
        },
    };
    for (name, consts) in &domains {
        let ids = consts.iter().map(|c| g.sym(c)).collect();
        g.domains.insert(name.clone(), ids);
    }
    let mut positive = vec![Vec::new(); kb.schemas().len()];
    let mut soft_atoms = Vec::new();
    for r in evidence.records() {
        let pred = kb.schema_id(&r.atom.predicate).expect("checked by collect_domains");
        let args: Vec<u32> = r.atom.args.iter().map(|a| g.sym(a)).collect();
        if matches!(r.truth, Truth::True | Truth::Soft(_)) {
            positive[pred].push(args.clone());
        }
        if let Truth::Soft(p) = r.truth {
            soft_atoms.push((r.atom.clone(), p));
        }
        g.evidence.insert((pred, args), r.truth);
    }
    g.positive = positive.into_iter().map(Rc::new).collect();
    for (atom, p) in &soft_atoms {
        g.net.atoms.insert(atom.clone(), AtomStatus::Soft(*p));
    }
    g.query_atoms(queries)?;
    for k in 0..kb.formulas().len() {
        g.ground_formula(k)?;
    }
    for (atom, p) in soft_atoms {
        let i = g.net.atoms.get(&atom).expect("interned above");
        let w = log_odds_weight(p)?;
        g.push_clause(GroundClause {
            literals: vec![GroundLiteral { atom: i, negated: false }],
            weight: Weight::Soft(w),
            origin: Origin::SoftEvidence(i),
        })?;
    }
    Ok(g.net)
}

/// Reference count of true groundings of formula `k` by direct enumeration
/// of all bindings. `world` must assign every ground atom the formula touches.
pub fn count_true_groundings(
    kb: &KnowledgeBase,
    k: usize,
    domains: &Domains,
    world: &HashMap<GroundAtom, bool>,
) -> Result<u64> {
    let f = kb
        .formulas()
        .get(k)
        .ok_or_else(|| Error::invalid(format!("no formula {k}")))?;
    let universal: Vec<_> = f
        .variables
        .iter()
        .filter(|v| v.quantifier == Quantifier::Universal)
        .collect();
    let values: Vec<Vec<&String>> = universal
        .iter()
        .map(|v| domains.get(&v.domain).map(|d| d.iter().collect()).unwrap_or_default())
        .collect();
    if values.iter().any(|v| v.is_empty()) {
        return Ok(0);
    }
    let mut idx = vec![0usize; universal.len()];
    let mut count = 0u64;
    loop {
        let mut sub: HashMap<String, String> = HashMap::new();
        for (j, v) in universal.iter().enumerate() {
            sub.insert(v.name.clone(), values[j][idx[j]].clone());
        }
        let mut partial = f.clone();
        for l in partial.literals.iter_mut() {
            for t in l.atom.args.iter_mut() {
                if let Term::Var(v) = t {
                    if let Some(c) = sub.get(v) {
                        *t = Term::Const(c.clone());
                    }
                }
            }
        }
        let expanded = partial.expand_existential(domains)?;
        let mut sat = false;
        for l in &expanded.literals {
            let atom = GroundAtom::new(l.atom.predicate.clone(), l.atom.args.iter().map(|t| t.name().to_string()));
            let v = *world
                .get(&atom)
                .ok_or_else(|| Error::IncompleteWorld(format!("no value for {atom}")))?;
            if v != l.negated {
                sat = true;
            }
        }
        if sat {
            count += 1;
        }
        let mut j = 0;
        while j < idx.len() {
            idx[j] += 1;
            if idx[j] < values[j].len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == idx.len() {
            break;
        }
    }
    Ok(count)
}
