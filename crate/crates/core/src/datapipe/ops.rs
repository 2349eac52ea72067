use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use super::{CandidateAnswer, QueryRecord};
use crate::error::{Error, Result};

/// Fraction of a query's candidates that pass verification.
pub fn compute_verify_score(q: &QueryRecord) -> f64 {
    if q.candidates.is_empty() {
        return 0.0;
    }
    q.candidates.iter().filter(|c| c.verified).count() as f64 / q.candidates.len() as f64
}

/// Keeps queries whose verify score lies strictly inside (0, 1).
pub fn filter_by_verify_score(queries: Vec<QueryRecord>) -> Vec<QueryRecord> {
    queries
        .into_iter()
        .filter(|q| {
            let s = compute_verify_score(q);
            s > 0.0 && s < 1.0
        })
        .collect()
}

/// Indices (into the query's candidate list) of the chosen/rejected answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    pub chosen: usize,
    pub rejected: usize,
}

/// Best verified vs. worst failed candidate over all of `q`'s candidates.
pub fn select_chosen_rejected(q: &QueryRecord) -> Option<Selection> {
    select_among(q.candidates.iter().enumerate())
}

/// Selection over a subset of `(index, candidate)` pairs.
///
/// Chosen: highest quality among verified, then shorter, then lexicographically
/// smaller tokens, then lower index. Rejected: lowest quality among failed,
/// then longer, then lexicographically smaller tokens, then lower index.
pub fn select_among<'a>(candidates: impl IntoIterator<Item = (usize, &'a CandidateAnswer)>) -> Option<Selection> {
    let mut chosen: Option<(usize, &CandidateAnswer)> = None;
    let mut rejected: Option<(usize, &CandidateAnswer)> = None;
    for (i, c) in candidates {
        if c.verified {
            if chosen.is_none_or(|best| chosen_order((i, c), best) == Ordering::Less) {
                chosen = Some((i, c));
            }
        } else if rejected.is_none_or(|worst| rejected_order((i, c), worst) == Ordering::Less) {
            rejected = Some((i, c));
        }
    }
    Some(Selection { chosen: chosen?.0, rejected: rejected?.0 })
}

// Less = preferred.
fn chosen_order(a: (usize, &CandidateAnswer), b: (usize, &CandidateAnswer)) -> Ordering {
    b.1.quality
        .total_cmp(&a.1.quality)
        .then(a.1.tokens.len().cmp(&b.1.tokens.len()))
        .then(a.1.tokens.cmp(&b.1.tokens))
        .then(a.0.cmp(&b.0))
}

fn rejected_order(a: (usize, &CandidateAnswer), b: (usize, &CandidateAnswer)) -> Ordering {
    a.1.quality
        .total_cmp(&b.1.quality)
        .then(b.1.tokens.len().cmp(&a.1.tokens.len()))
        .then(a.1.tokens.cmp(&b.1.tokens))
        .then(a.0.cmp(&b.0))
}

/// Verified fraction among candidates from the given rounds.
pub fn compute_pass_rate(q: &QueryRecord, rounds: &BTreeSet<i64>) -> Result<f64> {
    let (mut total, mut passed) = (0usize, 0usize);
    for c in q.candidates.iter().filter(|c| rounds.contains(&c.source_round)) {
        total += 1;
        passed += c.verified as usize;
    }
    if total == 0 {
        return Err(Error::invalid(format!("query '{}' has no candidates in rounds {:?}", q.id, rounds)));
    }
    Ok(passed as f64 / total as f64)
}

/// Final answer held by a strict plurality of candidates; `None` on a tie.
pub fn answer_mode(candidates: &[CandidateAnswer]) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for c in candidates {
        *counts.entry(c.final_answer.as_str()).or_default() += 1;
    }
    let top = *counts.values().max()?;
    let mut leaders = counts.iter().filter(|(_, &n)| n == top);
    let (label, _) = leaders.next()?;
    match leaders.next() {
        Some(_) => None,
        None => Some(label.to_string()),
    }
}

/// Source of an independent answer used to settle label disagreements.
pub trait Arbiter: Send + Sync {
    fn alt_answer(&self, query: &QueryRecord) -> std::result::Result<String, String>;
}

/// Arbiter backed by an `id -> alt_answer` table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TableArbiter {
    pub answers: BTreeMap<String, String>,
}

impl TableArbiter {
    pub fn new(answers: BTreeMap<String, String>) -> Self {
        Self { answers }
    }
}

impl Arbiter for TableArbiter {
    fn alt_answer(&self, query: &QueryRecord) -> std::result::Result<String, String> {
        self.answers.get(&query.id).cloned().ok_or_else(|| format!("no arbiter answer for query '{}'", query.id))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArbitrationOutcome {
    Keep,
    Corrected(String),
    Discard(String),
}

/// Audits the ground truth against the candidates' majority answer.
///
/// Agreement keeps the label without consulting the arbiter. Otherwise the
/// arbiter's answer replaces the label, unless majority, label and arbiter
/// answer are pairwise distinct, in which case the query is discarded. A tied
/// majority counts as disagreeing with everything.
pub fn correct_ground_truth(q: &QueryRecord, arbiter: &dyn Arbiter) -> ArbitrationOutcome {
    let mode = answer_mode(&q.candidates);
    if mode.as_deref() == Some(q.ground_truth.as_str()) {
        return ArbitrationOutcome::Keep;
    }
    let alt = match arbiter.alt_answer(q) {
        Ok(a) => a,
        Err(reason) => return ArbitrationOutcome::Discard(format!("arbiter failure: {reason}")),
    };
    let alt_matches_mode = mode.as_deref() == Some(alt.as_str());
    if alt != q.ground_truth && !alt_matches_mode {
        let shown = mode.as_deref().unwrap_or("<tie>");
        return ArbitrationOutcome::Discard(format!(
            "inconsistent labels: ground truth '{}', majority '{shown}', arbiter '{alt}'",
            q.ground_truth
        ));
    }
    ArbitrationOutcome::Corrected(alt)
}

/// Sets a new ground truth and re-derives every candidate's verified flag
/// from its final answer.
pub fn apply_ground_truth(q: &mut QueryRecord, ground_truth: &str) {
    q.ground_truth = ground_truth.to_string();
    for c in &mut q.candidates {
        c.verified = c.final_answer == ground_truth;
    }
}
