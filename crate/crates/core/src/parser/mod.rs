//! Text formats: knowledge bases (`.mln`), evidence (`.db`), queries and
//! learned weights.
//!
//! The rule language is line oriented. A statement ends at a newline unless
//! the line is inside parentheses, ends with an operator, or the next line
//! starts with one.
//!
//! ```text
//! zoneClass = {SKY, VERTICAL, HORIZONTAL}
//! *appearI(agent, zone)
//! entryExitZone(zone)
//! 2.0 appearI(a, z) => entryExitZone(z)
//! zoneBuildingEntExit(z) => zoneClass(z, VERTICAL).
//! 4 move(v, a, b, i) => (passVehicle(v) <=> class(v, VEHICLE))
//! ```

mod lexer;
mod print;

use crate::error::{Error, ParseError, Pos, Result};
use crate::evidence::{EvidenceSet, Truth};
use crate::logic::{is_constant_name, is_variable_name, Atom, Expr, GroundAtom, KnowledgeBase, PredicateSchema, Term, Weight};

use lexer::{join_continuations, lex, Tok, Token};

pub use print::{format_expr, print_clause, print_kb};

/// Nesting limit for parenthesized and negated subformulas.
const MAX_DEPTH: usize = 200;

/// One line of a query file.
#[derive(Debug, Clone, PartialEq)]
pub enum Query {
    /// Every grounding of the predicate.
    Predicate(String),
    /// Groundings matching an atom whose arguments may be variables.
    Pattern(Atom),
}

fn perr(pos: Pos, msg: impl Into<String>) -> Error {
    Error::Parse(ParseError::new(pos, msg))
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
    kb: KnowledgeBase,
    depth: usize,
}

impl Parser {
    fn new(text: &str, kb: KnowledgeBase) -> Result<Self> {
        let toks = join_continuations(lex(text)?);
        Ok(Parser { toks, i: 0, kb, depth: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let j = (self.i + k).min(self.toks.len() - 1);
        &self.toks[j].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<Token> {
        if *self.peek() == want {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&want.describe()))
        }
    }

    fn unexpected(&self, expected: &str) -> Error {
        perr(self.pos(), format!("expected {expected}, found {}", self.peek().describe()))
    }

    fn skip_newlines(&mut self) {
        while *self.peek() == Tok::Newline {
            self.bump();
        }
    }

    fn end_of_statement(&mut self) -> Result<()> {
        match self.peek() {
            Tok::Newline => {
                self.bump();
                Ok(())
            }
            Tok::Eof => Ok(()),
            _ => Err(self.unexpected("end of line")),
        }
    }

    fn ident(&mut self) -> Result<(String, Pos)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let p = self.pos();
                self.bump();
                Ok((s, p))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn constant(&mut self) -> Result<String> {
        let pos = self.pos();
        let s = match self.peek().clone() {
            Tok::Ident(s) | Tok::Number(_, s) => s,
            _ => return Err(self.unexpected("constant")),
        };
        if !is_constant_name(&s) {
            return Err(perr(pos, format!("`{s}` is not a constant (constants start with an uppercase letter or digit)")));
        }
        self.bump();
        Ok(s)
    }

    fn term(&mut self) -> Result<Term> {
        let pos = self.pos();
        let s = match self.peek().clone() {
            Tok::Ident(s) | Tok::Number(_, s) => s,
            _ => return Err(self.unexpected("term")),
        };
        self.bump();
        if is_variable_name(&s) {
            Ok(Term::Var(s))
        } else if is_constant_name(&s) {
            Ok(Term::Const(s))
        } else {
            Err(perr(pos, format!("`{s}` is neither a variable nor a constant")))
        }
    }

    fn atom(&mut self) -> Result<Atom> {
        let (name, pos) = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut args = vec![self.term()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.term()?);
        }
        self.expect(Tok::RParen)?;
        let atom = Atom::new(name, args);
        self.kb.check_atom(&atom).map_err(|e| perr(pos, e.to_string()))?;
        Ok(atom)
    }

    fn formula(&mut self) -> Result<Expr> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(perr(self.pos(), "formula nested too deeply"));
        }
        let lhs = self.disjunction()?;
        let out = match self.peek() {
            Tok::Implies => {
                self.bump();
                Expr::implies(lhs, self.formula()?)
            }
            Tok::Iff => {
                self.bump();
                Expr::iff(lhs, self.formula()?)
            }
            _ => lhs,
        };
        self.depth -= 1;
        Ok(out)
    }

    fn disjunction(&mut self) -> Result<Expr> {
        let mut parts = vec![self.conjunction()?];
        // after an operand an identifier `v` can only be the operator
        while self.peek().is_or() {
            self.bump();
            parts.push(self.conjunction()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Expr::Or(parts) })
    }

    fn conjunction(&mut self) -> Result<Expr> {
        let mut parts = vec![self.unary()?];
        while *self.peek() == Tok::Caret {
            self.bump();
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Expr::And(parts) })
    }

    fn unary(&mut self) -> Result<Expr> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(perr(self.pos(), "formula nested too deeply"));
        }
        let out = match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Expr::not(self.unary()?)
            }
            Tok::LParen => {
                self.bump();
                let e = self.formula()?;
                self.expect(Tok::RParen)?;
                e
            }
            Tok::Ident(s) if s == "EXIST" && *self.peek_at(1) != Tok::LParen => {
                self.bump();
                let mut vars = Vec::new();
                loop {
                    let (v, p) = self.ident()?;
                    if !is_variable_name(&v) {
                        return Err(perr(p, format!("`{v}` cannot be quantified (variables start lowercase)")));
                    }
                    vars.push(v);
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
                let body = self.unary()?;
                Expr::Exists(vars, Box::new(body))
            }
            Tok::Ident(_) => Expr::Atom(self.atom()?),
            _ => return Err(self.unexpected("atom, `!`, `(` or `EXIST`")),
        };
        self.depth -= 1;
        Ok(out)
    }

    /// `name(d1, ..., dn)` followed by end of line.
    fn looks_like_declaration(&self) -> bool {
        if !matches!(self.peek(), Tok::Ident(_)) || *self.peek_at(1) != Tok::LParen {
            return false;
        }
        let mut k = 2;
        loop {
            if !matches!(self.peek_at(k), Tok::Ident(_)) {
                return false;
            }
            match self.peek_at(k + 1) {
                Tok::Comma => k += 2,
                Tok::RParen => return matches!(self.peek_at(k + 2), Tok::Newline | Tok::Eof),
                _ => return false,
            }
        }
    }

    fn declaration(&mut self, closed_world: bool) -> Result<PredicateSchema> {
        let (name, _) = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut doms = Vec::new();
        loop {
            doms.push(self.ident()?.0);
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(Tok::RParen)?;
        self.end_of_statement()?;
        Ok(PredicateSchema {
            name,
            arg_domains: doms,
            closed_world,
        })
    }

    fn statement_text(&self, from: usize, to: usize) -> String {
        let mut s = String::new();
        let mut prev: Option<&Tok> = None;
        for t in &self.toks[from..to] {
            let glue = matches!(t.tok, Tok::RParen | Tok::Comma | Tok::Dot | Tok::LParen)
                || matches!(prev, Some(Tok::LParen | Tok::Bang | Tok::Minus) | None);
            if !glue {
                s.push(' ');
            }
            s.push_str(&t.tok.text());
            prev = Some(&t.tok);
        }
        s
    }
}

/// Parse a knowledge base.
pub fn parse_kb(text: &str) -> Result<KnowledgeBase> {
    let mut p = Parser::new(text, KnowledgeBase::new())?;
    loop {
        p.skip_newlines();
        if *p.peek() == Tok::Eof {
            break;
        }
        let start_pos = p.pos();
        let start = p.i;
        match p.peek().clone() {
            Tok::Ident(name) if *p.peek_at(1) == Tok::Eq => {
                p.bump();
                p.bump();
                p.expect(Tok::LBrace)?;
                let mut consts = Vec::new();
                if *p.peek() != Tok::RBrace {
                    loop {
                        consts.push(p.constant()?);
                        if *p.peek() == Tok::Comma {
                            p.bump();
                        } else {
                            break;
                        }
                    }
                }
                p.expect(Tok::RBrace)?;
                p.end_of_statement()?;
                p.kb.declare_domain(&name, consts);
            }
            Tok::Star => {
                p.bump();
                let schema = p.declaration(true)?;
                p.kb.declare_predicate(schema).map_err(|e| perr(start_pos, e.to_string()))?;
            }
            Tok::Ident(name) if p.kb.schema(&name).is_none() && p.looks_like_declaration() => {
                let schema = p.declaration(false)?;
                p.kb.declare_predicate(schema).map_err(|e| perr(start_pos, e.to_string()))?;
            }
            _ => {
                let weight = match p.peek().clone() {
                    Tok::Number(w, _) => {
                        p.bump();
                        Some(w)
                    }
                    Tok::Minus => {
                        p.bump();
                        match p.peek().clone() {
                            Tok::Number(w, _) => {
                                p.bump();
                                Some(-w)
                            }
                            _ => return Err(p.unexpected("number after `-`")),
                        }
                    }
                    _ => None,
                };
                let expr = p.formula()?;
                let hard = if *p.peek() == Tok::Dot {
                    p.bump();
                    true
                } else {
                    false
                };
                let end = p.i;
                p.end_of_statement()?;
                let weight = match (weight, hard) {
                    (Some(w), false) => Weight::Soft(w),
                    (None, true) => Weight::Hard,
                    (Some(_), true) => return Err(perr(start_pos, "a rule is either weighted or hard (trailing `.`), not both")),
                    (None, false) => return Err(perr(start_pos, "rule needs a leading weight or a trailing `.`")),
                };
                let source = p.statement_text(start, end);
                p.kb.add_rule(weight, expr, source).map_err(|e| perr(start_pos, e.to_string()))?;
            }
        }
    }
    Ok(p.kb)
}

/// Parse a knowledge base, then override soft weights from a weights file.
pub fn parse_kb_with_weights(text: &str, weights: &str) -> Result<KnowledgeBase> {
    let mut kb = parse_kb(text)?;
    let mut w = kb.weights();
    for (idx, value) in parse_weights(weights)? {
        if idx >= w.len() {
            return Err(Error::invalid(format!(
                "weights file names formula {idx}, knowledge base has {}",
                w.len()
            )));
        }
        w[idx] = value;
    }
    kb.set_weights(&w)?;
    Ok(kb)
}

/// Weights file: `index<TAB>source<TAB>weight`, one line per formula. Hard
/// formulas are written with weight `hard`.
pub fn write_weights(kb: &KnowledgeBase) -> String {
    let mut out = String::new();
    for (i, f) in kb.formulas().iter().enumerate() {
        let w = match f.weight {
            Weight::Soft(w) => format!("{w}"),
            Weight::Hard => "hard".to_string(),
        };
        let src = print_clause(f).replace(['\t', '\n'], " ");
        out.push_str(&format!("{i}\t{src}\t{w}\n"));
    }
    out
}

/// Read a weights file. Lines with weight `hard` are skipped.
pub fn parse_weights(text: &str) -> Result<Vec<(usize, f64)>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.trim().is_empty() || line.trim_start().starts_with("//") || line.trim_start().starts_with('#') {
            continue;
        }
        let pos = Pos { line: ln + 1, col: 1 };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 {
            return Err(perr(pos, "expected `index<TAB>source<TAB>weight`"));
        }
        let idx: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| perr(pos, format!("bad formula index `{}`", fields[0])))?;
        let last = fields[fields.len() - 1].trim();
        if last == "hard" {
            continue;
        }
        let w: f64 = last.parse().map_err(|_| perr(pos, format!("bad weight `{last}`")))?;
        if !w.is_finite() {
            return Err(perr(pos, format!("weight `{last}` is not finite")));
        }
        out.push((idx, w));
    }
    Ok(out)
}

/// Parse an evidence file against `kb`. Lines are `P(A, B)`, `!P(A, B)` or
/// `0.73 P(A, B)`.
pub fn parse_evidence(text: &str, kb: &KnowledgeBase) -> Result<EvidenceSet> {
    let mut p = Parser::new(text, kb.clone())?;
    let mut ev = EvidenceSet::new();
    loop {
        p.skip_newlines();
        if *p.peek() == Tok::Eof {
            break;
        }
        let start = p.pos();
        let prob = match p.peek().clone() {
            Tok::Number(v, _) => {
                p.bump();
                Some(v)
            }
            _ => None,
        };
        let negated = if *p.peek() == Tok::Bang {
            p.bump();
            true
        } else {
            false
        };
        let atom_pos = p.pos();
        let atom = p.atom()?;
        p.end_of_statement()?;
        if !atom.is_ground() {
            return Err(perr(atom_pos, format!("evidence atom {atom} is not ground")));
        }
        let ground = GroundAtom::new(atom.predicate, atom.args.iter().map(|t| t.name().to_string()));
        let truth = match (prob, negated) {
            (None, false) => Truth::True,
            (None, true) => Truth::False,
            (Some(v), neg) => {
                let t = Truth::soft(v).map_err(|e| perr(start, e.to_string()))?;
                match (t, neg) {
                    (Truth::Soft(q), true) => Truth::Soft(1.0 - q),
                    (t, _) => t,
                }
            }
        };
        ev.add(ground, truth);
    }
    Ok(ev)
}

/// Parse a query file: one predicate name or (partially) ground atom per line.
pub fn parse_queries(text: &str, kb: &KnowledgeBase) -> Result<Vec<Query>> {
    let mut p = Parser::new(text, kb.clone())?;
    let mut out = Vec::new();
    loop {
        p.skip_newlines();
        if *p.peek() == Tok::Eof {
            break;
        }
        loop {
            if *p.peek_at(1) == Tok::LParen {
                out.push(Query::Pattern(p.atom()?));
            } else {
                let (name, pos) = p.ident()?;
                if kb.schema(&name).is_none() {
                    return Err(perr(pos, format!("undeclared predicate `{name}`")));
                }
                out.push(Query::Predicate(name));
            }
            if *p.peek() == Tok::Comma {
                p.bump();
            } else {
                break;
            }
        }
        p.end_of_statement()?;
    }
    Ok(out)
}
