use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ops::{
    apply_ground_truth, compute_pass_rate, compute_verify_score, correct_ground_truth, select_among, Arbiter,
    ArbitrationOutcome, Selection,
};
use super::{Category, PreferencePairRecord, QueryRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurationConfig {
    /// Rounds whose candidates may become chosen/rejected answers.
    pub selection_rounds: BTreeSet<i64>,
    /// Later rounds the pass rate is measured over.
    pub pass_rate_rounds: BTreeSet<i64>,
}

impl Default for CurationConfig {
    fn default() -> Self {
        Self { selection_rounds: [0].into(), pass_rate_rounds: [1, 2, 3, 4].into() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub input: usize,
    pub survivors: usize,
    pub removed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    #[serde(flatten)]
    pub totals: StageCounts,
    pub by_category: BTreeMap<Category, StageCounts>,
}

impl StageReport {
    fn new(stage: &str) -> Self {
        Self {
            stage: stage.to_string(),
            totals: StageCounts::default(),
            by_category: Category::ALL.iter().map(|c| (*c, StageCounts::default())).collect(),
        }
    }

    fn record(&mut self, category: Category, survived: bool) {
        for counts in [&mut self.totals, self.by_category.get_mut(&category).expect("all categories present")] {
            counts.input += 1;
            if survived {
                counts.survivors += 1;
            } else {
                counts.removed += 1;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArbitrationCounts {
    /// Majority answer agreed with the label.
    pub kept: usize,
    /// Label replaced by the arbiter's answer (possibly the same label).
    pub corrected: usize,
    /// Corrections that changed the label.
    pub relabeled: usize,
    pub discarded: usize,
    pub arbiter_failures: usize,
    /// Corrected queries left without a verified or a failed candidate.
    pub reselection_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurationReport {
    pub input: usize,
    pub emitted: usize,
    pub stages: Vec<StageReport>,
    pub arbitration: ArbitrationCounts,
}

pub const STAGE_VERIFY: &str = "verify_score_filter";
pub const STAGE_SELECT: &str = "chosen_rejected_selection";
pub const STAGE_ARBITRATE: &str = "ground_truth_arbitration";
pub const STAGE_PASS_RATE: &str = "pass_rate_filter";

impl CurationReport {
    fn new() -> Self {
        Self {
            input: 0,
            emitted: 0,
            stages: [STAGE_VERIFY, STAGE_SELECT, STAGE_ARBITRATE, STAGE_PASS_RATE]
                .iter()
                .map(|s| StageReport::new(s))
                .collect(),
            arbitration: ArbitrationCounts::default(),
        }
    }

    pub fn stage(&self, name: &str) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.stage == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

impl fmt::Display for CurationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "curation report: {} queries in, {} pairs out", self.input, self.emitted)?;
        for s in &self.stages {
            writeln!(
                f,
                "  {:<28} in {:>6}  kept {:>6}  removed {:>6}",
                s.stage, s.totals.input, s.totals.survivors, s.totals.removed
            )?;
            for (cat, c) in &s.by_category {
                if c.input > 0 {
                    writeln!(
                        f,
                        "    {:<26} in {:>6}  kept {:>6}  removed {:>6}",
                        cat.as_str(),
                        c.input,
                        c.survivors,
                        c.removed
                    )?;
                }
            }
        }
        let a = &self.arbitration;
        writeln!(
            f,
            "  arbitration: kept {}, corrected {} (relabeled {}), discarded {} (arbiter failures {}), reselection failed {}",
            a.kept, a.corrected, a.relabeled, a.discarded, a.arbiter_failures, a.reselection_failed
        )
    }
}

fn select_in_rounds(q: &QueryRecord, rounds: &BTreeSet<i64>) -> Option<Selection> {
    select_among(q.candidates.iter().enumerate().filter(|(_, c)| rounds.contains(&c.source_round)))
}

/// Runs the full curation pipeline. Output pairs are ordered by query id.
pub fn curate(
    mut queries: Vec<QueryRecord>,
    config: &CurationConfig,
    arbiter: &dyn Arbiter,
) -> Result<(Vec<PreferencePairRecord>, CurationReport)> {
    let mut seen = BTreeSet::new();
    for q in &queries {
        if !seen.insert(q.id.as_str()) {
            return Err(Error::invalid(format!("duplicate query id '{}'", q.id)));
        }
        q.validate()?;
    }
    queries.sort_by(|a, b| a.id.cmp(&b.id));

    let mut report = CurationReport::new();
    report.input = queries.len();
    let mut pairs = Vec::new();

    for mut q in queries {
        let verify_score = compute_verify_score(&q);
        let ok = verify_score > 0.0 && verify_score < 1.0;
        report.stages[0].record(q.category, ok);
        if !ok {
            log::debug!("{}: verify_score {verify_score} outside (0, 1)", q.id);
            continue;
        }

        let selection = select_in_rounds(&q, &config.selection_rounds);
        report.stages[1].record(q.category, selection.is_some());
        let Some(mut selection) = selection else {
            log::debug!("{}: no verified or no failed candidate in selection rounds", q.id);
            continue;
        };

        let mut gt_corrected = false;
        let survived = match correct_ground_truth(&q, arbiter) {
            ArbitrationOutcome::Keep => {
                report.arbitration.kept += 1;
                true
            }
            ArbitrationOutcome::Discard(reason) => {
                report.arbitration.discarded += 1;
                if reason.starts_with("arbiter failure") {
                    report.arbitration.arbiter_failures += 1;
                    log::warn!("{}: discarded, {reason}", q.id);
                } else {
                    log::debug!("{}: discarded, {reason}", q.id);
                }
                false
            }
            ArbitrationOutcome::Corrected(label) => {
                report.arbitration.corrected += 1;
                gt_corrected = label != q.ground_truth;
                if gt_corrected {
                    report.arbitration.relabeled += 1;
                }
                apply_ground_truth(&mut q, &label);
                match select_in_rounds(&q, &config.selection_rounds) {
                    Some(s) => {
                        selection = s;
                        true
                    }
                    None => {
                        report.arbitration.reselection_failed += 1;
                        log::debug!("{}: relabeled to '{label}' leaves no valid pair", q.id);
                        false
                    }
                }
            }
        };
        report.stages[2].record(q.category, survived);
        if !survived {
            continue;
        }

        let pass_rate = compute_pass_rate(&q, &config.pass_rate_rounds);
        let ok = matches!(pass_rate, Ok(p) if p > 0.0 && p < 1.0);
        report.stages[3].record(q.category, ok);
        let pass_rate = match (ok, pass_rate) {
            (true, Ok(p)) => p,
            (_, Ok(p)) => {
                log::debug!("{}: pass_rate {p} is 0 or 1", q.id);
                continue;
            }
            (_, Err(e)) => {
                log::debug!("{}: {e}", q.id);
                continue;
            }
        };

        pairs.push(PreferencePairRecord {
            query_id: q.id.clone(),
            category: q.category,
            prompt: q.prompt.clone(),
            chosen: q.candidates[selection.chosen].tokens.clone(),
            rejected: q.candidates[selection.rejected].tokens.clone(),
            // Relabeling can move the score; a successful reselection keeps it inside (0, 1).
            verify_score: compute_verify_score(&q),
            pass_rate,
            gt_corrected,
        });
    }
    report.emitted = pairs.len();
    Ok((pairs, report))
}
