//! Counters for statements that hold only with high probability.

use serde::Serialize;

use crate::graph::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LemmaCheck {
    pub lemma: String,
    pub statement: u32,
    pub checked: u64,
    pub violations: u64,
    /// First violating pair, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub example: Option<(NodeId, NodeId)>,
}

impl LemmaCheck {
    pub fn new(lemma: &str, statement: u32) -> Self {
        LemmaCheck { lemma: lemma.to_string(), statement, checked: 0, violations: 0, example: None }
    }

    pub fn record(&mut self, ok: bool, pair: (NodeId, NodeId)) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            self.example.get_or_insert(pair);
        }
    }
}

/// Adds the counters of `more` into `acc`, matching by lemma and statement.
pub fn merge_checks(acc: &mut Vec<LemmaCheck>, more: &[LemmaCheck]) {
    for c in more {
        match acc.iter_mut().find(|a| a.lemma == c.lemma && a.statement == c.statement) {
            Some(a) => {
                a.checked += c.checked;
                a.violations += c.violations;
                if a.example.is_none() {
                    a.example = c.example;
                }
            }
            None => acc.push(c.clone()),
        }
    }
}

pub fn total_violations(checks: &[LemmaCheck]) -> u64 {
    checks.iter().map(|c| c.violations).sum()
}
