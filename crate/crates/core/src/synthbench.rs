//! Synthetic verifiable tasks over a symbolic vocabulary.
//!
//! Each task asks for `(x + shift) mod A` over an alphabet of `A` values.
//! Operands and results use separate token sets (`D_*` and `R_*`). A
//! well-formed response is a run of "thinking" filler followed by an answer
//! span that restates the operand and gives the result:
//!
//! ```text
//! prompt:   <bos> D_x <ask>
//! response: T_1 T_2 ... T_m <answer> D_x R_y <eos>
//! ```
//!
//! The filler length `m` varies independently of correctness, which is what
//! makes length effects of preference training observable at this scale.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datapipe::{CandidateAnswer, Category, QueryRecord, TableArbiter};
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};
use crate::tinylm::{sample, ModelParams, TokenSeq, Vocab};

/// Token id layout of the synthetic vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthLayout {
    pub num_digits: u32,
    pub num_think: u32,
}

impl Default for SynthLayout {
    /// 8 values and 11 filler tokens: a 32-token vocabulary.
    fn default() -> Self {
        Self { num_digits: 8, num_think: 11 }
    }
}

impl SynthLayout {
    pub const PAD: u32 = 0;
    pub const BOS: u32 = 1;
    pub const EOS: u32 = 2;
    pub const ANSWER: u32 = 3;
    pub const ASK: u32 = 4;
    const DIGIT_BASE: u32 = 5;

    pub fn new(num_digits: u32, num_think: u32) -> Result<Self> {
        if num_digits < 2 || num_think < 1 {
            return Err(Error::invalid("layout needs at least 2 digits and 1 filler token"));
        }
        Ok(Self { num_digits, num_think })
    }

    pub fn vocab(&self) -> Vocab {
        Vocab::new(self.vocab_size(), Self::BOS, Self::EOS, Self::PAD).expect("layout vocab is valid")
    }

    pub fn vocab_size(&self) -> usize {
        (Self::DIGIT_BASE + 2 * self.num_digits + self.num_think) as usize
    }

    pub fn digit(&self, value: u32) -> u32 {
        debug_assert!(value < self.num_digits);
        Self::DIGIT_BASE + value
    }

    pub fn digit_value(&self, token: u32) -> Option<u32> {
        (Self::DIGIT_BASE..Self::DIGIT_BASE + self.num_digits).contains(&token).then(|| token - Self::DIGIT_BASE)
    }

    pub fn result(&self, value: u32) -> u32 {
        debug_assert!(value < self.num_digits);
        Self::DIGIT_BASE + self.num_digits + value
    }

    pub fn result_value(&self, token: u32) -> Option<u32> {
        let base = Self::DIGIT_BASE + self.num_digits;
        (base..base + self.num_digits).contains(&token).then(|| token - base)
    }

    /// Filler token `T_{step}`, 1-based.
    pub fn think(&self, step: u32) -> u32 {
        debug_assert!(step >= 1 && step <= self.num_think);
        Self::DIGIT_BASE + 2 * self.num_digits + step - 1
    }

    pub fn is_think(&self, token: u32) -> bool {
        let base = Self::DIGIT_BASE + 2 * self.num_digits;
        (base..base + self.num_think).contains(&token)
    }

    /// `T_1..T_m <answer> D_operand R_answer <eos>`.
    pub fn render_response(&self, operand: u32, answer: u32, think_len: u32) -> TokenSeq {
        let mut ids: Vec<u32> = (1..=think_len).map(|s| self.think(s)).collect();
        ids.extend([Self::ANSWER, self.digit(operand), self.result(answer), Self::EOS]);
        TokenSeq(ids)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskInstance {
    pub id: String,
    pub prompt: TokenSeq,
    pub answer: String,
    /// Canonical answer-span subsequence: operand token then result token.
    pub rendering: TokenSeq,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskLine {
    id: String,
    prompt: TokenSeq,
    answer: String,
}

impl TaskInstance {
    /// Rebuilds a task from its file form; the prompt must end in `D_x <ask>`.
    pub fn from_parts(layout: &SynthLayout, id: String, prompt: TokenSeq, answer: String) -> Result<Self> {
        if !matches!(prompt.ids(), [.., d, SynthLayout::ASK] if layout.digit_value(*d).is_some()) {
            return Err(Error::invalid(format!("task '{id}': prompt must end with an operand digit and <ask>")));
        }
        let value: u32 = answer
            .parse()
            .ok()
            .filter(|v| *v < layout.num_digits)
            .ok_or_else(|| Error::invalid(format!("task '{id}': answer '{answer}' is not a digit label")))?;
        prompt.validate(&layout.vocab())?;
        let operand = prompt.ids()[prompt.len() - 2];
        let rendering = TokenSeq(vec![operand, layout.result(value)]);
        Ok(Self { id, prompt, answer, rendering })
    }

    pub fn operand(&self, layout: &SynthLayout) -> u32 {
        layout.digit_value(self.rendering.ids()[0]).expect("rendering starts with an operand")
    }

    pub fn answer_value(&self, layout: &SynthLayout) -> u32 {
        layout.result_value(self.rendering.ids()[1]).expect("rendering ends with a result")
    }
}

/// `n` tasks with operands drawn uniformly; answers are `(x + difficulty) mod A`.
pub fn generate_tasks(seed: u64, n: usize, difficulty: u32) -> Result<Vec<TaskInstance>> {
    generate_tasks_with(&SynthLayout::default(), seed, n, difficulty)
}

pub fn generate_tasks_with(layout: &SynthLayout, seed: u64, n: usize, difficulty: u32) -> Result<Vec<TaskInstance>> {
    if n == 0 {
        return Err(Error::invalid("task count must be >= 1"));
    }
    let mut rng = rng::stream(seed, rng::STREAM_TASKS);
    let a = layout.num_digits;
    Ok((0..n)
        .map(|i| {
            let x = rng.gen_range(0..a);
            let y = (x + difficulty) % a;
            let prompt = TokenSeq(vec![SynthLayout::BOS, layout.digit(x), SynthLayout::ASK]);
            TaskInstance {
                id: format!("t{i:06}"),
                prompt,
                answer: y.to_string(),
                rendering: TokenSeq(vec![layout.digit(x), layout.result(y)]),
            }
        })
        .collect())
}

/// True iff the task's canonical rendering occurs inside the terminal answer
/// span: the tokens after the last `<answer>` and before the first `<eos>`
/// that follows it. Output without that closing `<eos>` is unterminated and
/// fails.
pub fn verify(task: &TaskInstance, output: &TokenSeq) -> bool {
    let ids = output.ids();
    let Some(start) = ids.iter().rposition(|&t| t == SynthLayout::ANSWER) else {
        return false;
    };
    let Some(len) = ids[start + 1..].iter().position(|&t| t == SynthLayout::EOS) else {
        return false;
    };
    let span = &ids[start + 1..start + 1 + len];
    let needle = task.rendering.ids();
    !needle.is_empty() && span.windows(needle.len()).any(|w| w == needle)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decode {
    Greedy,
    Sampled { temperature: f64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskOutcome {
    pub id: String,
    pub passed: bool,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub pass_at_1: f64,
    pub mean_generation_length: f64,
    pub outcomes: Vec<TaskOutcome>,
}

impl EvalReport {
    pub fn summary(&self) -> String {
        let passed = self.outcomes.iter().filter(|o| o.passed).count();
        format!(
            "pass@1 {:.4} ({passed}/{}), mean generation length {:.3} tokens",
            self.pass_at_1,
            self.outcomes.len(),
            self.mean_generation_length
        )
    }
}

fn id_hash(id: &str) -> u64 {
    let digest = Sha256::digest(id.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// One generation per task. Sampled decoding seeds each task from its id,
/// so results do not depend on task order.
pub fn evaluate_model(
    params: &ModelParams,
    tasks: &[TaskInstance],
    decode: Decode,
    max_len: usize,
) -> Result<EvalReport> {
    if tasks.is_empty() {
        return Err(Error::invalid("evaluation needs at least one task"));
    }
    let outcomes = tasks
        .iter()
        .map(|t| {
            let out = match decode {
                Decode::Greedy => sample(params, &t.prompt, max_len, 0.0, 0)?,
                Decode::Sampled { temperature, seed } => {
                    sample(params, &t.prompt, max_len, temperature, seed ^ id_hash(&t.id))?
                }
            };
            Ok(TaskOutcome { id: t.id.clone(), passed: verify(t, &out), length: out.len() })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = outcomes.len() as f64;
    let passed = outcomes.iter().filter(|o| o.passed).count() as f64;
    let total_len: usize = outcomes.iter().map(|o| o.length).sum();
    Ok(EvalReport { pass_at_1: passed / n, mean_generation_length: total_len as f64 / n, outcomes })
}

/// A noisy reference solver used to manufacture candidate answers.
///
/// Filler length is uniform on `think_min..=think_max`; the result digit is
/// correct with probability `1 - error_rate`, otherwise uniform over the wrong
/// digits. A candidate's quality is its mean per-token log-probability under
/// this distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisedOracle {
    pub think_min: u32,
    pub think_max: u32,
    pub error_rate: f64,
}

impl Default for NoisedOracle {
    fn default() -> Self {
        Self { think_min: 1, think_max: 8, error_rate: 0.4 }
    }
}

impl NoisedOracle {
    pub fn validate(&self, layout: &SynthLayout) -> Result<()> {
        if self.think_min > self.think_max || self.think_max > layout.num_think {
            return Err(Error::invalid(format!(
                "filler range {}..={} must fit in 0..={}",
                self.think_min, self.think_max, layout.num_think
            )));
        }
        if !(0.0..=1.0).contains(&self.error_rate) {
            return Err(Error::invalid("error rate must lie in [0, 1]"));
        }
        Ok(())
    }

    fn quality(&self, layout: &SynthLayout, correct: bool, len: usize) -> f64 {
        let think_choices = (self.think_max - self.think_min + 1) as f64;
        let answer_p = if correct { 1.0 - self.error_rate } else { self.error_rate / (layout.num_digits - 1) as f64 };
        (answer_p.ln() - think_choices.ln()) / len as f64
    }

    pub fn sample_candidate(
        &self,
        layout: &SynthLayout,
        task: &TaskInstance,
        round: i64,
        rng: &mut StreamRng,
    ) -> CandidateAnswer {
        let y = task.answer_value(layout);
        let m = rng.gen_range(self.think_min..=self.think_max);
        let correct = !rng.gen_bool(self.error_rate);
        let out = if correct {
            y
        } else {
            let k = rng.gen_range(0..layout.num_digits - 1);
            if k >= y {
                k + 1
            } else {
                k
            }
        };
        let tokens = layout.render_response(task.operand(layout), out, m);
        let quality = self.quality(layout, correct, tokens.len());
        CandidateAnswer {
            final_answer: out.to_string(),
            verified: verify(task, &tokens),
            quality,
            source_round: round,
            tokens,
        }
    }
}

/// Candidate counts per distillation round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidatePlan {
    pub per_round: Vec<(i64, usize)>,
}

impl Default for CandidatePlan {
    /// Four candidates in round 0, then one in each of rounds 1..=4.
    fn default() -> Self {
        Self { per_round: vec![(0, 4), (1, 1), (2, 1), (3, 1), (4, 1)] }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub tasks: Vec<TaskInstance>,
    pub queries: Vec<QueryRecord>,
    pub arbiter: TableArbiter,
}

/// Tasks plus curation inputs. With probability `label_noise` a query's
/// stated ground truth is a wrong digit and its candidates are verified
/// against that wrong label; the arbiter table always holds the true answer.
pub fn synthesize_corpus(
    layout: &SynthLayout,
    seed: u64,
    n: usize,
    difficulty: u32,
    oracle: &NoisedOracle,
    plan: &CandidatePlan,
    label_noise: f64,
) -> Result<SyntheticCorpus> {
    oracle.validate(layout)?;
    if !(0.0..=1.0).contains(&label_noise) {
        return Err(Error::invalid("label noise must lie in [0, 1]"));
    }
    let tasks = generate_tasks_with(layout, seed, n, difficulty)?;
    let mut rng = rng::stream(seed, rng::STREAM_CANDIDATES);
    let mut queries = Vec::with_capacity(n);
    let mut answers = BTreeMap::new();
    for task in &tasks {
        let y = task.answer_value(layout);
        let stated = if rng.gen_bool(label_noise) {
            let k = rng.gen_range(0..layout.num_digits - 1);
            if k >= y {
                k + 1
            } else {
                k
            }
        } else {
            y
        };
        let audited = TaskInstance::from_parts(layout, task.id.clone(), task.prompt.clone(), stated.to_string())?;
        let mut candidates = Vec::new();
        for &(round, count) in &plan.per_round {
            for _ in 0..count {
                let mut c = oracle.sample_candidate(layout, task, round, &mut rng);
                c.verified = verify(&audited, &c.tokens);
                candidates.push(c);
            }
        }
        answers.insert(task.id.clone(), task.answer.clone());
        queries.push(QueryRecord {
            id: task.id.clone(),
            category: Category::Math,
            prompt: task.prompt.clone(),
            ground_truth: stated.to_string(),
            candidates,
        });
    }
    Ok(SyntheticCorpus { tasks, queries, arbiter: TableArbiter::new(answers) })
}

/// Filler-length weights whose stop hazard rises logistically: the chance
/// of stopping right after `T_k`, given `T_k` was reached, is
/// `sigmoid(slope * (k - center))`, and `T_{num_think}` always stops.
pub fn logistic_stop_weights(layout: &SynthLayout, center: f64, slope: f64) -> Vec<f64> {
    let n = layout.num_think as usize;
    let mut weights = vec![0.0; n + 1];
    let mut reach = 1.0;
    for (k, w) in weights.iter_mut().enumerate().skip(1) {
        let hazard = if k == n { 1.0 } else { 1.0 / (1.0 + (-slope * (k as f64 - center)).exp()) };
        *w = reach * hazard;
        reach *= 1.0 - hazard;
    }
    weights
}

/// Correct oracle renderings; `length_weights[m]` is the relative weight of
/// filler length `m`.
pub fn demonstrations(
    layout: &SynthLayout,
    tasks: &[TaskInstance],
    length_weights: &[f64],
    seed: u64,
) -> Result<Vec<(TokenSeq, TokenSeq)>> {
    if length_weights.len() > layout.num_think as usize + 1 {
        return Err(Error::invalid(format!("length weights extend past {} filler tokens", layout.num_think)));
    }
    let dist = WeightedIndex::new(length_weights).map_err(|e| Error::invalid(format!("length weights: {e}")))?;
    let mut rng = rng::stream(seed, rng::STREAM_DEMOS);
    Ok(tasks
        .iter()
        .map(|t| {
            let m = dist.sample(&mut rng) as u32;
            (t.prompt.clone(), layout.render_response(t.operand(layout), t.answer_value(layout), m))
        })
        .collect())
}

pub fn read_tasks_jsonl(layout: &SynthLayout, input: impl BufRead) -> Result<Vec<TaskInstance>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::BadLine { line: i + 1, message };
        let t: TaskLine = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        out.push(TaskInstance::from_parts(layout, t.id, t.prompt, t.answer).map_err(|e| bad(e.to_string()))?);
    }
    Ok(out)
}

pub fn write_tasks_jsonl(mut out: impl Write, tasks: &[TaskInstance]) -> Result<()> {
    for t in tasks {
        let line = TaskLine { id: t.id.clone(), prompt: t.prompt.clone(), answer: t.answer.clone() };
        serde_json::to_writer(&mut out, &line).map_err(|e| Error::Io(e.into()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tinylm::transition_table_params;

    fn layout() -> SynthLayout {
        SynthLayout::default()
    }

    #[test]
    fn default_layout_has_32_tokens() {
        let l = layout();
        assert_eq!(l.vocab_size(), 32);
        assert_eq!(l.digit(7), 12);
        assert_eq!(l.digit_value(12), Some(7));
        assert_eq!(l.result(0), 13);
        assert_eq!(l.result_value(20), Some(7));
        assert_eq!(l.think(1), 21);
        assert_eq!(l.think(11), 31);
        assert!(l.is_think(21) && !l.is_think(20));
    }

    #[test]
    fn tasks_are_deterministic_with_distinct_ids() {
        let a = generate_tasks(5, 100, 3).unwrap();
        assert_eq!(a, generate_tasks(5, 100, 3).unwrap());
        assert_ne!(a, generate_tasks(6, 100, 3).unwrap());
        let ids: std::collections::BTreeSet<_> = a.iter().map(|t| &t.id).collect();
        assert_eq!(ids.len(), 100);
        assert!(generate_tasks(5, 0, 3).is_err());
    }

    #[test]
    fn answers_are_uniform_within_three_sigma() {
        let tasks = generate_tasks(2024, 10_000, 3).unwrap();
        let a = layout().num_digits as usize;
        let mut counts = vec![0usize; a];
        for t in &tasks {
            counts[t.answer.parse::<usize>().unwrap()] += 1;
        }
        // Multinomial: mean n/A, variance n (1/A)(1 - 1/A).
        let n = tasks.len() as f64;
        let p = 1.0 / a as f64;
        let (mean, sigma) = (n * p, (n * p * (1.0 - p)).sqrt());
        for c in counts {
            assert!((c as f64 - mean).abs() <= 3.0 * sigma, "count {c} vs {mean} ± {}", 3.0 * sigma);
        }
    }

    #[test]
    fn verify_rules() {
        let l = layout();
        let t = &generate_tasks(1, 1, 3).unwrap()[0];
        let (x, y) = (t.operand(&l), t.answer_value(&l));
        let (dx, ry) = (l.digit(x), l.result(y));
        assert!(verify(t, &l.render_response(x, y, 4)));
        assert!(verify(t, &l.render_response(x, y, 0)));
        assert!(!verify(t, &TokenSeq(vec![])));
        assert!(!verify(t, &l.render_response(x, (y + 1) % l.num_digits, 2)));
        // Correct tokens present only before the delimiter.
        let early = TokenSeq(vec![dx, ry, SynthLayout::ANSWER, dx, SynthLayout::EOS]);
        assert!(!verify(t, &early));
        // Only the last delimiter opens the span.
        let twice = TokenSeq(vec![SynthLayout::ANSWER, dx, ry, SynthLayout::ANSWER, SynthLayout::EOS]);
        assert!(!verify(t, &twice));
        // Unterminated span.
        let open = TokenSeq(vec![SynthLayout::ANSWER, dx, ry]);
        assert!(!verify(t, &open));
        // The span may hold more than the rendering.
        let padded = TokenSeq(vec![SynthLayout::ANSWER, l.result(0), dx, ry, SynthLayout::EOS]);
        assert!(verify(t, &padded));
    }

    #[test]
    fn task_file_round_trip() {
        let l = layout();
        let tasks = generate_tasks(3, 5, 2).unwrap();
        let mut buf = Vec::new();
        write_tasks_jsonl(&mut buf, &tasks).unwrap();
        assert_eq!(read_tasks_jsonl(&l, buf.as_slice()).unwrap(), tasks);
        let bad = r#"{"id":"x","prompt":[1,5],"answer":"2"}"#;
        assert!(matches!(read_tasks_jsonl(&l, bad.as_bytes()), Err(Error::BadLine { line: 1, .. })));
        let bad_answer = r#"{"id":"x","prompt":[1,5,4],"answer":"9"}"#;
        assert!(read_tasks_jsonl(&l, bad_answer.as_bytes()).is_err());
    }

    /// Greedy chain `<ask> -> <answer> -> D_x -> R_y -> <eos>`.
    fn hard_wired(l: &SynthLayout, x: u32, y: u32) -> ModelParams {
        let v = l.vocab_size();
        let mut table = vec![vec![0.0; v]; v];
        table[SynthLayout::ASK as usize][SynthLayout::ANSWER as usize] = 5.0;
        table[SynthLayout::ANSWER as usize][l.digit(x) as usize] = 5.0;
        table[l.digit(x) as usize][l.result(y) as usize] = 5.0;
        table[l.result(y) as usize][SynthLayout::EOS as usize] = 5.0;
        transition_table_params(l.vocab(), &table).unwrap()
    }

    #[test]
    fn hard_wired_policy_solves_its_tasks() {
        let l = layout();
        let tasks = generate_tasks(9, 200, 3).unwrap();
        // A single-token context cannot route different prompts to different
        // answers, so each operand group gets its own hard-wired table.
        for x in 0..l.num_digits {
            let group: Vec<TaskInstance> = tasks.iter().filter(|t| t.operand(&l) == x).cloned().collect();
            if group.is_empty() {
                continue;
            }
            let y = group[0].answer_value(&l);
            let report = evaluate_model(&hard_wired(&l, x, y), &group, Decode::Greedy, 16).unwrap();
            assert_eq!(report.pass_at_1, 1.0);
            assert_eq!(report.mean_generation_length, 4.0);
        }
    }

    #[test]
    fn uniform_params_greedy_pass_rate_matches_enumeration() {
        let l = SynthLayout::new(3, 2).unwrap();
        let tasks = generate_tasks_with(&l, 4, 300, 1).unwrap();
        let params = ModelParams::zeros(l.vocab(), 2).unwrap();
        // Enumeration oracle: with all logits tied, greedy emits the lowest id
        // (pad) every step, so the output is `max_len` pads for every task.
        let max_len = 6;
        let expected_output = TokenSeq(vec![SynthLayout::PAD; max_len]);
        let expected_pass = tasks.iter().filter(|t| verify(t, &expected_output)).count() as f64 / tasks.len() as f64;
        let report = evaluate_model(&params, &tasks, Decode::Greedy, max_len).unwrap();
        assert_eq!(report.pass_at_1, expected_pass);
        assert_eq!(report.pass_at_1, 0.0);
        assert_eq!(report.mean_generation_length, max_len as f64);
    }

    #[test]
    fn evaluation_cap_and_order_invariance() {
        let l = layout();
        let tasks = generate_tasks(11, 60, 3).unwrap();
        let params = crate::tinylm::init_params(3, l.vocab(), 8, 1.5).unwrap();
        let decode = Decode::Sampled { temperature: 1.0, seed: 77 };
        let a = evaluate_model(&params, &tasks, decode, 8).unwrap();
        assert!(a.mean_generation_length <= 8.0);
        let mut rev = tasks.clone();
        rev.reverse();
        let b = evaluate_model(&params, &rev, decode, 8).unwrap();
        assert_eq!(a.pass_at_1, b.pass_at_1);
        let g1 = evaluate_model(&params, &tasks, Decode::Greedy, 8).unwrap();
        let g2 = evaluate_model(&params, &tasks, Decode::Greedy, 8).unwrap();
        assert_eq!(g1, g2);
        assert!(evaluate_model(&params, &[], Decode::Greedy, 8).is_err());
    }

    #[test]
    fn corpus_candidates_and_quality() {
        let l = layout();
        let oracle = NoisedOracle::default();
        let corpus = synthesize_corpus(&l, 8, 50, 3, &oracle, &CandidatePlan::default(), 0.0).unwrap();
        assert_eq!(corpus.queries.len(), 50);
        for (q, t) in corpus.queries.iter().zip(&corpus.tasks) {
            assert_eq!(q.candidates.len(), 8);
            assert_eq!(q.ground_truth, t.answer);
            for c in &q.candidates {
                assert_eq!(c.verified, c.final_answer == t.answer);
                assert!(c.quality < 0.0);
                let m = c.tokens.ids().iter().filter(|&&tok| l.is_think(tok)).count() as u32;
                assert!((oracle.think_min..=oracle.think_max).contains(&m));
            }
        }
        // Among verified candidates, longer ones score higher.
        let v: Vec<&CandidateAnswer> =
            corpus.queries.iter().flat_map(|q| &q.candidates).filter(|c| c.verified).collect();
        for a in &v {
            for b in &v {
                if a.tokens.len() > b.tokens.len() {
                    assert!(a.quality > b.quality);
                }
            }
        }
    }

    #[test]
    fn label_noise_is_resolved_by_arbiter_table() {
        let l = layout();
        let corpus =
            synthesize_corpus(&l, 8, 200, 3, &NoisedOracle::default(), &CandidatePlan::default(), 0.3).unwrap();
        let noisy = corpus.queries.iter().zip(&corpus.tasks).filter(|(q, t)| q.ground_truth != t.answer).count();
        assert!(noisy > 20 && noisy < 100, "{noisy}");
        for t in &corpus.tasks {
            assert_eq!(corpus.arbiter.answers[&t.id], t.answer);
        }
    }
}
