//! Fixtures shared by the benchmarks.

use mlnfuse_core::evidence::EvidenceSet;
use mlnfuse_core::logic::KnowledgeBase;
use mlnfuse_core::parser::{parse_evidence, parse_kb};

/// Smokers network over `n` people with a chain of friendships and every
/// third person known to smoke.
pub fn smokers(n: usize) -> (KnowledgeBase, EvidenceSet) {
    let people: Vec<String> = (0..n).map(|i| format!("P{i}")).collect();
    let kb = parse_kb(&format!(
        "person = {{{}}}\nSmokes(person)\nCancer(person)\nFriends(person, person)\n\
         1.5 Smokes(x) => Cancer(x)\n1.1 Friends(x, y) ^ Smokes(x) => Smokes(y)\n-0.5 Cancer(x)\n",
        people.join(", ")
    ))
    .expect("fixture parses");
    let mut db = String::new();
    for i in 0..n {
        db += &format!("Friends(P{i}, P{})\n", (i + 1) % n);
        if i % 3 == 0 {
            db += &format!("Smokes(P{i})\n");
        }
    }
    let ev = parse_evidence(&db, &kb).expect("fixture evidence parses");
    (kb, ev)
}
