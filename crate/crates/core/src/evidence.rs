use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::logic::GroundAtom;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truth {
    True,
    False,
    /// Uncertain observation with probability strictly inside (0, 1).
    Soft(f64),
}

impl Truth {
    pub fn soft(p: f64) -> Result<Truth> {
        if p > 0.0 && p < 1.0 {
            Ok(Truth::Soft(p))
        } else {
            Err(Error::ProbabilityOutOfRange(p))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceRecord {
    pub atom: GroundAtom,
    pub truth: Truth,
}

impl EvidenceRecord {
    pub fn new(atom: GroundAtom, truth: Truth) -> Self {
        EvidenceRecord { atom, truth }
    }
}

/// Evidence-file syntax: `P(A)`, `!P(A)` or `0.9 P(A)`.
impl fmt::Display for EvidenceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.truth {
            Truth::True => write!(f, "{}", self.atom),
            Truth::False => write!(f, "!{}", self.atom),
            Truth::Soft(p) => write!(f, "{p} {}", self.atom),
        }
    }
}

/// Ordered collection of ground evidence. Insertion order is preserved and
/// drives atom numbering during grounding.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvidenceSet {
    records: Vec<EvidenceRecord>,
}

impl EvidenceSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: EvidenceRecord) {
        self.records.push(record);
    }

    pub fn add(&mut self, atom: GroundAtom, truth: Truth) {
        self.records.push(EvidenceRecord { atom, truth });
    }

    pub fn extend(&mut self, other: &EvidenceSet) {
        self.records.extend(other.records.iter().cloned());
    }

    pub fn records(&self) -> &[EvidenceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// One record per line, readable by `parse_evidence`.
    pub fn to_text(&self) -> String {
        self.records.iter().map(|r| format!("{r}\n")).collect()
    }

    /// Collapse duplicate records. Identical repeats are dropped; conflicting
    /// values for one atom are an error.
    pub fn normalized(&self) -> Result<EvidenceSet> {
        let mut seen: HashMap<&GroundAtom, Truth> = HashMap::new();
        let mut out = EvidenceSet::new();
        for r in &self.records {
            match seen.get(&r.atom) {
                Some(t) if *t == r.truth => {}
                Some(_) => return Err(Error::InconsistentEvidence(r.atom.to_string())),
                None => {
                    seen.insert(&r.atom, r.truth);
                    out.records.push(r.clone());
                }
            }
        }
        Ok(out)
    }

    pub fn get(&self, atom: &GroundAtom) -> Option<Truth> {
        self.records.iter().find(|r| &r.atom == atom).map(|r| r.truth)
    }
}

impl FromIterator<EvidenceRecord> for EvidenceSet {
    fn from_iter<T: IntoIterator<Item = EvidenceRecord>>(iter: T) -> Self {
        EvidenceSet {
            records: iter.into_iter().collect(),
        }
    }
}

/// Soft-evidence weight: the log odds `ln(p / (1 - p))`.
pub fn log_odds_weight(p: f64) -> Result<f64> {
    if p > 0.0 && p < 1.0 {
        Ok((p / (1.0 - p)).ln())
    } else {
        Err(Error::ProbabilityOutOfRange(p))
    }
}

/// Clamp a score into the range accepted as soft evidence.
pub fn clamp_probability(p: f64) -> f64 {
    const EPS: f64 = 1e-6;
    p.clamp(EPS, 1.0 - EPS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_odds() {
        assert_eq!(log_odds_weight(0.5).unwrap(), 0.0);
        assert!((log_odds_weight(0.9).unwrap() - 2.19722).abs() < 1e-5);
        assert!(log_odds_weight(1.0).is_err());
        assert!(log_odds_weight(0.0).is_err());
        assert!(log_odds_weight(0.2).unwrap() < log_odds_weight(0.3).unwrap());
    }

    #[test]
    fn normalization_detects_conflicts() {
        let mut ev = EvidenceSet::new();
        ev.add(GroundAtom::new("P", ["A"]), Truth::True);
        ev.add(GroundAtom::new("P", ["A"]), Truth::True);
        assert_eq!(ev.normalized().unwrap().len(), 1);
        ev.add(GroundAtom::new("P", ["A"]), Truth::False);
        assert!(matches!(ev.normalized(), Err(Error::InconsistentEvidence(_))));
    }

    #[test]
    fn text_round_trip() {
        let kb = crate::parser::parse_kb("*P(agent)\nQ(agent, agent)").unwrap();
        let text = "P(A)\n!Q(A, B)\n0.25 Q(B, A)\n";
        let ev = crate::parser::parse_evidence(text, &kb).unwrap();
        assert_eq!(ev.to_text(), text);
    }

    #[test]
    fn clamp() {
        assert_eq!(clamp_probability(1.0), 1.0 - 1e-6);
        assert_eq!(clamp_probability(0.0), 1e-6);
        assert_eq!(clamp_probability(0.3), 0.3);
    }
}
