use std::fmt::Write;

use crate::logic::{Expr, Formula, KnowledgeBase, Literal, Quantifier, Weight};

const HEADER: &str = "// knowledge base\n";

/// Render an expression with minimal parentheses.
pub fn format_expr(e: &Expr) -> String {
    fn prec(e: &Expr) -> u8 {
        match e {
            Expr::Implies(..) | Expr::Iff(..) => 0,
            Expr::Or(_) => 1,
            Expr::And(_) => 2,
            Expr::Not(_) | Expr::Atom(_) | Expr::Exists(..) => 3,
        }
    }
    fn wrap(e: &Expr, min: u8) -> String {
        let s = format_expr(e);
        if prec(e) < min {
            format!("({s})")
        } else {
            s
        }
    }
    match e {
        Expr::Atom(a) => a.to_string(),
        Expr::Not(x) => format!("!{}", wrap(x, 3)),
        Expr::And(xs) => xs.iter().map(|x| wrap(x, 3)).collect::<Vec<_>>().join(" ^ "),
        Expr::Or(xs) => xs.iter().map(|x| wrap(x, 2)).collect::<Vec<_>>().join(" v "),
        Expr::Implies(a, b) => format!("{} => {}", wrap(a, 1), wrap(b, 0)),
        Expr::Iff(a, b) => format!("{} <=> {}", wrap(a, 1), wrap(b, 0)),
        Expr::Exists(vs, body) => format!("EXIST {} ({})", vs.join(", "), format_expr(body)),
    }
}

fn is_existential(f: &Formula, l: &Literal) -> bool {
    l.atom.vars().any(|v| {
        f.variable(v)
            .is_some_and(|var| var.quantifier == Quantifier::Existential)
    })
}

/// One clause in implication form: negative literals form the antecedent,
/// positive ones and any existential block the consequent. Weight or hard
/// marker included.
pub fn print_clause(f: &Formula) -> String {
    let body = clause_body(f);
    match f.weight {
        Weight::Soft(w) => format!("{w} {body}"),
        Weight::Hard => format!("{body}."),
    }
}

fn clause_body(f: &Formula) -> String {
    let mut ante = Vec::new();
    let mut cons = Vec::new();
    let mut exist = Vec::new();
    for l in &f.literals {
        if is_existential(f, l) {
            exist.push(l.to_string());
        } else if l.negated {
            ante.push(l.atom.to_string());
        } else {
            cons.push(l.atom.to_string());
        }
    }
    if !exist.is_empty() {
        let vars: Vec<&str> = f
            .variables
            .iter()
            .filter(|v| v.quantifier == Quantifier::Existential)
            .map(|v| v.name.as_str())
            .collect();
        cons.push(format!("EXIST {} ({})", vars.join(", "), exist.join(" v ")));
    }
    match (ante.is_empty(), cons.is_empty()) {
        (true, _) => cons.join(" v "),
        (false, true) => ante.iter().map(|a| format!("!{a}")).collect::<Vec<_>>().join(" v "),
        (false, false) => format!("{} => {}", ante.join(" ^ "), cons.join(" v ")),
    }
}

/// Canonical text for a knowledge base: enumerated domains, predicate
/// declarations, then one clause per line in formula order.
pub fn print_kb(kb: &KnowledgeBase) -> String {
    let mut out = String::from(HEADER);
    let mut any = false;
    for (name, consts) in kb.domains() {
        if consts.is_empty() {
            continue;
        }
        let list: Vec<&str> = consts.iter().map(String::as_str).collect();
        let _ = writeln!(out, "{name} = {{{}}}", list.join(", "));
        any = true;
    }
    if any {
        out.push('\n');
    }
    for s in kb.schemas() {
        let star = if s.closed_world { "*" } else { "" };
        let _ = writeln!(out, "{star}{}({})", s.name, s.arg_domains.join(", "));
    }
    if !kb.schemas().is_empty() && !kb.formulas().is_empty() {
        out.push('\n');
    }
    for f in kb.formulas() {
        if f.literals.is_empty() {
            let _ = writeln!(out, "// empty clause from `{}` omitted", f.source);
            continue;
        }
        let _ = writeln!(out, "{}", print_clause(f));
    }
    out
}
