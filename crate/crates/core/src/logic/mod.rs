//! Typed first-order language: terms, atoms, clausal formulas and the
//! knowledge base that holds them.
//!
//! Rules are stored twice: once as written (`Rule`, kept for diagnostics and
//! printing) and once in clausal form (`Formula`). Weight vectors used by
//! inference and learning are indexed by formula position.

mod clausify;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};

pub use clausify::clausify;

/// True when `name` is spelled like a variable (lowercase first letter).
pub fn is_variable_name(name: &str) -> bool {
    name.chars().next().is_some_and(|c| c.is_ascii_lowercase())
}

/// True when `name` is spelled like a constant (uppercase letter or digit first,
/// identifier characters after).
pub fn is_constant_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_uppercase() || c.is_ascii_digit() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn parse(text: &str) -> Term {
        if is_variable_name(text) {
            Term::Var(text.to_string())
        } else {
            Term::Const(text.to_string())
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Var(s) | Term::Const(s) => s,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A constant together with the domain it belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Constant {
    pub symbol: String,
    pub domain: String,
}

impl Constant {
    pub fn new(symbol: impl Into<String>, domain: impl Into<String>) -> Self {
        Constant {
            symbol: symbol.into(),
            domain: domain.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateSchema {
    pub name: String,
    pub arg_domains: Vec<String>,
    /// Evidence predicate: groundings not listed in evidence are false.
    pub closed_world: bool,
}

impl PredicateSchema {
    pub fn new(name: impl Into<String>, arg_domains: &[&str], closed_world: bool) -> Self {
        PredicateSchema {
            name: name.into(),
            arg_domains: arg_domains.iter().map(|d| d.to_string()).collect(),
            closed_world,
        }
    }

    pub fn arity(&self) -> usize {
        self.arg_domains.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Atom {
            predicate: predicate.into(),
            args,
        }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| !t.is_var())
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v.as_str()),
            Term::Const(_) => None,
        })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub atom: Atom,
    pub negated: bool,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal {
            atom,
            negated: false,
        }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal {
            atom,
            negated: true,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("!")?;
        }
        write!(f, "{}", self.atom)
    }
}

/// Fully ground atom with plain string arguments, as it appears in evidence
/// and query results.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new<S: Into<String>>(predicate: impl Into<String>, args: impl IntoIterator<Item = S>) -> Self {
        GroundAtom {
            predicate: predicate.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.predicate, self.args.join(", "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    Soft(f64),
    Hard,
}

impl Weight {
    pub fn is_hard(&self) -> bool {
        matches!(self, Weight::Hard)
    }

    pub fn soft(&self) -> Option<f64> {
        match self {
            Weight::Soft(w) => Some(*w),
            Weight::Hard => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Universal,
    Existential,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Variable {
    pub name: String,
    pub domain: String,
    pub quantifier: Quantifier,
}

/// Rule body before clausification.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Atom(Atom),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Implies(Box<Expr>, Box<Expr>),
    Iff(Box<Expr>, Box<Expr>),
    Exists(Vec<String>, Box<Expr>),
}

impl Expr {
    pub fn atom(predicate: &str, args: &[&str]) -> Expr {
        Expr::Atom(Atom::new(predicate, args.iter().map(|a| Term::parse(a)).collect()))
    }

    pub fn not(e: Expr) -> Expr {
        Expr::Not(Box::new(e))
    }

    pub fn implies(a: Expr, b: Expr) -> Expr {
        Expr::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Expr, b: Expr) -> Expr {
        Expr::Iff(Box::new(a), Box::new(b))
    }

    pub fn exists(vars: &[&str], body: Expr) -> Expr {
        Expr::Exists(vars.iter().map(|v| v.to_string()).collect(), Box::new(body))
    }

    pub(crate) fn visit_atoms<'a>(&'a self, f: &mut impl FnMut(&'a Atom)) {
        match self {
            Expr::Atom(a) => f(a),
            Expr::Not(e) | Expr::Exists(_, e) => e.visit_atoms(f),
            Expr::And(es) | Expr::Or(es) => es.iter().for_each(|e| e.visit_atoms(f)),
            Expr::Implies(a, b) | Expr::Iff(a, b) => {
                a.visit_atoms(f);
                b.visit_atoms(f);
            }
        }
    }
}

/// A rule as written, before clausification.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub weight: Weight,
    pub expr: Expr,
    pub source: String,
}

/// One weighted clause. Variables not marked existential are universally
/// quantified over their domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Formula {
    pub weight: Weight,
    pub literals: Vec<Literal>,
    /// Variables in order of first occurrence.
    pub variables: Vec<Variable>,
    pub source: String,
    /// Index of the rule this clause was produced from.
    pub rule: usize,
}

impl Formula {
    pub fn is_hard(&self) -> bool {
        self.weight.is_hard()
    }

    pub fn is_ground(&self) -> bool {
        self.literals.iter().all(|l| l.atom.is_ground())
    }

    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn has_existentials(&self) -> bool {
        self.variables.iter().any(|v| v.quantifier == Quantifier::Existential)
    }

    /// Replace variables by constants. Every variable must be bound and the
    /// constant's domain must match the variable's.
    pub fn substitute(&self, binding: &HashMap<String, Constant>) -> Result<Formula> {
        for v in &self.variables {
            match binding.get(&v.name) {
                None => return Err(Error::UnboundVariable(v.name.clone())),
                Some(c) if c.domain != v.domain => {
                    return Err(Error::DomainMismatch {
                        name: v.name.clone(),
                        expected: v.domain.clone(),
                        found: c.domain.clone(),
                    })
                }
                Some(_) => {}
            }
        }
        let literals = self
            .literals
            .iter()
            .map(|l| Literal {
                negated: l.negated,
                atom: Atom {
                    predicate: l.atom.predicate.clone(),
                    args: l
                        .atom
                        .args
                        .iter()
                        .map(|t| match t {
                            Term::Var(v) => Term::Const(binding[v].symbol.clone()),
                            c => c.clone(),
                        })
                        .collect(),
                },
            })
            .collect();
        Ok(Formula {
            weight: self.weight,
            literals,
            variables: Vec::new(),
            source: self.source.clone(),
            rule: self.rule,
        })
    }

    /// Replace each existentially quantified variable by the finite
    /// disjunction over its domain. Literals that mention several
    /// existential variables expand over their joint product.
    pub fn expand_existential(&self, domains: &BTreeMap<String, BTreeSet<String>>) -> Result<Formula> {
        let existential: Vec<&Variable> = self
            .variables
            .iter()
            .filter(|v| v.quantifier == Quantifier::Existential)
            .collect();
        if existential.is_empty() {
            return Ok(self.clone());
        }
        let mut values: HashMap<&str, Vec<&String>> = HashMap::new();
        for v in &existential {
            let dom: Vec<&String> = domains.get(&v.domain).map(|d| d.iter().collect()).unwrap_or_default();
            if dom.is_empty() {
                return Err(Error::EmptyDomain {
                    var: v.name.clone(),
                    domain: v.domain.clone(),
                });
            }
            values.insert(v.name.as_str(), dom);
        }

        let mut literals: Vec<Literal> = Vec::new();
        for lit in &self.literals {
            let mut ex_vars: Vec<&str> = Vec::new();
            for v in lit.atom.vars() {
                if values.contains_key(v) && !ex_vars.contains(&v) {
                    ex_vars.push(v);
                }
            }
            if ex_vars.is_empty() {
                push_unique(&mut literals, lit.clone());
                continue;
            }
            // odometer over the joint domain of this literal's existential variables
            let mut idx = vec![0usize; ex_vars.len()];
            loop {
                let args = lit
                    .atom
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) => match ex_vars.iter().position(|e| e == v) {
                            Some(k) => Term::Const(values[ex_vars[k]][idx[k]].clone()),
                            None => t.clone(),
                        },
                        c => c.clone(),
                    })
                    .collect();
                push_unique(
                    &mut literals,
                    Literal {
                        atom: Atom::new(lit.atom.predicate.clone(), args),
                        negated: lit.negated,
                    },
                );
                let mut k = 0;
                loop {
                    if k == idx.len() {
                        break;
                    }
                    idx[k] += 1;
                    if idx[k] < values[ex_vars[k]].len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == idx.len() {
                    break;
                }
            }
        }

        Ok(Formula {
            weight: self.weight,
            literals,
            variables: self
                .variables
                .iter()
                .filter(|v| v.quantifier == Quantifier::Universal)
                .cloned()
                .collect(),
            source: self.source.clone(),
            rule: self.rule,
        })
    }
}

fn push_unique(lits: &mut Vec<Literal>, lit: Literal) {
    if !lits.contains(&lit) {
        lits.push(lit);
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnowledgeBase {
    schemas: Vec<PredicateSchema>,
    schema_index: HashMap<String, usize>,
    rules: Vec<Rule>,
    formulas: Vec<Formula>,
    domains: BTreeMap<String, BTreeSet<String>>,
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare_domain<I, S>(&mut self, name: &str, constants: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let dom = self.domains.entry(name.to_string()).or_default();
        dom.extend(constants.into_iter().map(Into::into));
    }

    pub fn declare_predicate(&mut self, schema: PredicateSchema) -> Result<()> {
        if schema.arg_domains.is_empty() {
            return Err(Error::invalid(format!("predicate `{}` needs at least one argument", schema.name)));
        }
        if self.schema_index.contains_key(&schema.name) {
            return Err(Error::invalid(format!("predicate `{}` declared twice", schema.name)));
        }
        for d in &schema.arg_domains {
            self.domains.entry(d.clone()).or_default();
        }
        self.schema_index.insert(schema.name.clone(), self.schemas.len());
        self.schemas.push(schema);
        Ok(())
    }

    /// Validate, clausify and append a rule. Returns the rule index.
    pub fn add_rule(&mut self, weight: Weight, expr: Expr, source: impl Into<String>) -> Result<usize> {
        let mut check = Ok(());
        expr.visit_atoms(&mut |a| {
            if check.is_ok() {
                check = self.check_atom(a);
            }
        });
        check?;
        let source = source.into();
        let rule_idx = self.rules.len();
        let formulas = clausify(&expr, weight, self, &source, rule_idx)?;
        self.rules.push(Rule { weight, expr, source });
        self.formulas.extend(formulas);
        Ok(rule_idx)
    }

    /// Append an already clausified formula (used when re-reading printed
    /// knowledge bases and when merging).
    pub fn push_formula(&mut self, mut formula: Formula) -> Result<usize> {
        for l in &formula.literals {
            self.check_atom(&l.atom)?;
        }
        formula.rule = self.rules.len();
        let expr = Expr::Or(
            formula
                .literals
                .iter()
                .map(|l| {
                    let a = Expr::Atom(l.atom.clone());
                    if l.negated {
                        Expr::not(a)
                    } else {
                        a
                    }
                })
                .collect(),
        );
        self.rules.push(Rule {
            weight: formula.weight,
            expr,
            source: formula.source.clone(),
        });
        self.formulas.push(formula);
        Ok(self.formulas.len() - 1)
    }

    pub fn check_atom(&self, atom: &Atom) -> Result<()> {
        let schema = self
            .schema(&atom.predicate)
            .ok_or_else(|| Error::UndeclaredPredicate(atom.predicate.clone()))?;
        if schema.arity() != atom.args.len() {
            return Err(Error::ArityMismatch {
                name: atom.predicate.clone(),
                expected: schema.arity(),
                found: atom.args.len(),
            });
        }
        Ok(())
    }

    pub fn schema(&self, name: &str) -> Option<&PredicateSchema> {
        self.schema_index.get(name).map(|&i| &self.schemas[i])
    }

    pub fn schema_id(&self, name: &str) -> Option<usize> {
        self.schema_index.get(name).copied()
    }

    pub fn schemas(&self) -> &[PredicateSchema] {
        &self.schemas
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn formulas(&self) -> &[Formula] {
        &self.formulas
    }

    pub fn domains(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.domains
    }

    /// Current soft weights, zero for hard formulas.
    pub fn weights(&self) -> Vec<f64> {
        self.formulas.iter().map(|f| f.weight.soft().unwrap_or(0.0)).collect()
    }

    /// Overwrite soft formula weights; hard formulas keep their status.
    pub fn set_weights(&mut self, weights: &[f64]) -> Result<()> {
        if weights.len() != self.formulas.len() {
            return Err(Error::DimensionMismatch {
                expected: self.formulas.len(),
                found: weights.len(),
            });
        }
        for (f, &w) in self.formulas.iter_mut().zip(weights) {
            if !f.is_hard() {
                f.weight = Weight::Soft(w);
            }
        }
        Ok(())
    }

    /// Union of several knowledge bases. A predicate declared in more than one
    /// input is closed-world only if every declaration is, and names listed in
    /// `force_open` are always open. Conflicting arities are an error.
    pub fn merge(parts: &[&KnowledgeBase], force_open: &[&str]) -> Result<KnowledgeBase> {
        let mut kb = KnowledgeBase::new();
        for part in parts {
            for s in &part.schemas {
                match kb.schema_index.get(&s.name) {
                    Some(&i) => {
                        let existing = &mut kb.schemas[i];
                        if existing.arg_domains != s.arg_domains {
                            return Err(Error::ArityMismatch {
                                name: s.name.clone(),
                                expected: existing.arity(),
                                found: s.arity(),
                            });
                        }
                        existing.closed_world &= s.closed_world;
                    }
                    None => kb.declare_predicate(s.clone())?,
                }
            }
            for (d, cs) in &part.domains {
                kb.declare_domain(d, cs.iter().cloned());
            }
        }
        for s in kb.schemas.iter_mut() {
            if force_open.contains(&s.name.as_str()) {
                s.closed_world = false;
            }
        }
        for part in parts {
            for f in &part.formulas {
                kb.push_formula(f.clone())?;
            }
        }
        Ok(kb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kb_pq() -> KnowledgeBase {
        let mut kb = KnowledgeBase::new();
        kb.declare_predicate(PredicateSchema::new("P", &["agent"], true)).unwrap();
        kb.declare_predicate(PredicateSchema::new("Q", &["agent"], false)).unwrap();
        kb
    }

    fn bind(pairs: &[(&str, &str, &str)]) -> HashMap<String, Constant> {
        pairs
            .iter()
            .map(|(v, c, d)| (v.to_string(), Constant::new(*c, *d)))
            .collect()
    }

    #[test]
    fn substitute_implication() {
        let mut kb = kb_pq();
        kb.add_rule(
            Weight::Soft(1.5),
            Expr::implies(Expr::atom("P", &["x"]), Expr::atom("Q", &["x"])),
            "P(x) => Q(x)",
        )
        .unwrap();
        let g = kb.formulas()[0].substitute(&bind(&[("x", "A", "agent")])).unwrap();
        assert_eq!(g.weight, Weight::Soft(1.5));
        let text: Vec<String> = g.literals.iter().map(|l| l.to_string()).collect();
        assert_eq!(text, vec!["!P(A)", "Q(A)"]);
        assert!(g.is_ground());
    }

    #[test]
    fn substitute_ground_is_identity() {
        let mut kb = kb_pq();
        kb.add_rule(Weight::Hard, Expr::atom("Q", &["A"]), "Q(A).").unwrap();
        let f = &kb.formulas()[0];
        let g = f.substitute(&HashMap::new()).unwrap();
        assert_eq!(&g, f);
    }

    #[test]
    fn substitute_errors() {
        let mut kb = kb_pq();
        kb.add_rule(
            Weight::Soft(1.0),
            Expr::implies(Expr::atom("P", &["x"]), Expr::atom("Q", &["x"])),
            "",
        )
        .unwrap();
        let f = &kb.formulas()[0];
        assert!(matches!(f.substitute(&HashMap::new()), Err(Error::UnboundVariable(v)) if v == "x"));
        assert!(matches!(
            f.substitute(&bind(&[("x", "Z1", "zone")])),
            Err(Error::DomainMismatch { .. })
        ));
    }

    #[test]
    fn existential_expansion() {
        let mut kb = KnowledgeBase::new();
        kb.declare_predicate(PredicateSchema::new("Q", &["zone"], false)).unwrap();
        kb.add_rule(Weight::Soft(1.0), Expr::exists(&["z"], Expr::atom("Q", &["z"])), "").unwrap();
        let f = &kb.formulas()[0];
        assert!(f.has_existentials());

        let mut domains = BTreeMap::new();
        domains.insert("zone".to_string(), BTreeSet::from(["A".to_string(), "B".to_string()]));
        let g = f.expand_existential(&domains).unwrap();
        let text: Vec<String> = g.literals.iter().map(|l| l.to_string()).collect();
        assert_eq!(text, vec!["Q(A)", "Q(B)"]);

        domains.insert("zone".to_string(), BTreeSet::from(["A".to_string()]));
        let g = f.expand_existential(&domains).unwrap();
        assert_eq!(g.literals.len(), 1);

        domains.insert("zone".to_string(), BTreeSet::new());
        assert!(matches!(f.expand_existential(&domains), Err(Error::EmptyDomain { .. })));
    }

    #[test]
    fn set_weights_skips_hard() {
        let mut kb = kb_pq();
        kb.add_rule(Weight::Soft(1.0), Expr::atom("Q", &["x"]), "").unwrap();
        kb.add_rule(Weight::Hard, Expr::not(Expr::atom("Q", &["A"])), "").unwrap();
        kb.set_weights(&[3.0, 7.0]).unwrap();
        assert_eq!(kb.formulas()[0].weight, Weight::Soft(3.0));
        assert_eq!(kb.formulas()[1].weight, Weight::Hard);
        assert!(kb.set_weights(&[1.0]).is_err());
    }

    #[test]
    fn merge_opens_shared_predicates() {
        let a = kb_pq();
        let mut b = KnowledgeBase::new();
        b.declare_predicate(PredicateSchema::new("P", &["agent"], false)).unwrap();
        b.declare_predicate(PredicateSchema::new("R", &["agent"], true)).unwrap();
        let m = KnowledgeBase::merge(&[&a, &b], &["R"]).unwrap();
        assert!(!m.schema("P").unwrap().closed_world);
        assert!(!m.schema("R").unwrap().closed_world);
        assert!(!m.schema("Q").unwrap().closed_world);
    }

    #[test]
    fn names() {
        assert!(is_constant_name("Loc_12_45"));
        assert!(is_constant_name("12"));
        assert!(!is_constant_name("loc"));
        assert!(is_variable_name("a1"));
    }
}
