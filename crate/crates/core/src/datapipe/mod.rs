//! Preference-pair curation.
//!
//! Queries arrive with several candidate answers, each already checked by a
//! task verifier. The pipeline keeps queries that some but not all candidates
//! solve, pairs the best verified answer with the worst failed one, audits the
//! ground-truth label against the candidates' majority answer (with a
//! pluggable arbiter breaking disagreements), and finally drops queries whose
//! later-round pass rate is 0 or 1.

mod curate;
mod io;
mod ops;
mod stats;

use serde::{Deserialize, Serialize};

use crate::tinylm::TokenSeq;

pub use curate::{curate, ArbitrationCounts, CurationConfig, CurationReport, StageCounts, StageReport};
pub use io::{read_arbiter_table, read_pairs_jsonl, read_queries_jsonl, write_arbiter_table, write_jsonl};
pub use ops::{
    answer_mode, apply_ground_truth, compute_pass_rate, compute_verify_score, correct_ground_truth,
    filter_by_verify_score, select_among, select_chosen_rejected, Arbiter, ArbitrationOutcome, Selection, TableArbiter,
};
pub use stats::{length_histogram, length_statistics, LengthSide, LengthStats, LengthUnit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Math,
    Code,
    Science,
    InstructionFollow,
    Other,
}

impl Category {
    pub const ALL: [Category; 5] =
        [Category::Math, Category::Code, Category::Science, Category::InstructionFollow, Category::Other];

    pub fn as_str(&self) -> &'static str {
        match self {
            Category::Math => "math",
            Category::Code => "code",
            Category::Science => "science",
            Category::InstructionFollow => "instruction_follow",
            Category::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateAnswer {
    pub tokens: TokenSeq,
    pub final_answer: String,
    pub verified: bool,
    pub quality: f64,
    pub source_round: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRecord {
    pub id: String,
    pub category: Category,
    pub prompt: TokenSeq,
    pub ground_truth: String,
    pub candidates: Vec<CandidateAnswer>,
}

impl QueryRecord {
    pub fn validate(&self) -> crate::Result<()> {
        use crate::Error;
        if self.candidates.is_empty() {
            return Err(Error::invalid(format!("query '{}' has no candidates", self.id)));
        }
        for (i, c) in self.candidates.iter().enumerate() {
            if c.tokens.is_empty() {
                return Err(Error::invalid(format!("query '{}' candidate {i} has no tokens", self.id)));
            }
            if !c.quality.is_finite() {
                return Err(Error::invalid(format!("query '{}' candidate {i} has non-finite quality", self.id)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreferencePairRecord {
    pub query_id: String,
    pub category: Category,
    pub prompt: TokenSeq,
    pub chosen: TokenSeq,
    pub rejected: TokenSeq,
    pub verify_score: f64,
    pub pass_rate: f64,
    pub gt_corrected: bool,
}
