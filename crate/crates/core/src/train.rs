//! Preference-optimization training loop, metrics log, supervised warm start
//! and the two-variant comparison.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::datapipe::{read_pairs_jsonl, PreferencePairRecord};
use crate::error::{Error, Result};
use crate::optim::{adamw_step, lr_at_step, AdamWConfig, AdamWState, ScheduleConfig};
use crate::prefloss::{batch_loss, BatchLoss, LossConfig, PreferenceItem, TokenLogProbs, Variant};
use crate::rng;
use crate::synthbench::{evaluate_model, read_tasks_jsonl, Decode, EvalReport, SynthLayout, TaskInstance};
use crate::tinylm::{backward_into, forward_logprobs, init_params, ModelGradients, ModelParams, TokenSeq, Vocab};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub variant: Variant,
    pub beta: f64,
    pub alpha: f64,
    pub damp_reference: bool,
    pub peak_lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub warmup_frac: f64,
    pub eval_every_frac: f64,
    pub seed: u64,
    pub max_seq_len: usize,
    pub vocab_size: usize,
    pub dim: usize,
    pub init_scale: f64,
    pub adam: AdamWConfig,
    pub eval_max_len: usize,
    /// Fill the `wall_ms` column. Off by default so logs are reproducible.
    pub record_wall_time: bool,
    pub pairs: Option<PathBuf>,
    pub tasks: Option<PathBuf>,
    pub init_checkpoint: Option<PathBuf>,
    pub checkpoint_out: Option<PathBuf>,
    pub metrics_out: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Lddpo,
            beta: 0.1,
            alpha: 0.3,
            damp_reference: true,
            peak_lr: 1e-2,
            batch_size: 32,
            epochs: 1,
            warmup_frac: 0.10,
            eval_every_frac: 0.10,
            seed: 0,
            max_seq_len: 64,
            vocab_size: 32,
            dim: 16,
            init_scale: 0.1,
            adam: AdamWConfig::default(),
            eval_max_len: 32,
            record_wall_time: false,
            pairs: None,
            tasks: None,
            init_checkpoint: None,
            checkpoint_out: None,
            metrics_out: None,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::invalid(format!("bad value '{value}' for '{key}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::invalid(format!("bad boolean '{value}' for '{key}'"))),
    }
}

/// Parses a flat `key = value` file body. `#` starts a comment line.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::BadLine { line: i + 1, message: format!("expected key = value, got '{line}'") })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl TrainConfig {
    /// Sets one field by its kebab-case (or snake_case) name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let k = key.trim().replace('_', "-");
        match k.as_str() {
            "variant" => self.variant = value.parse()?,
            "beta" => self.beta = parse(&k, value)?,
            "alpha" => self.alpha = parse(&k, value)?,
            "damp-reference" => self.damp_reference = parse_bool(&k, value)?,
            "peak-lr" | "lr" => self.peak_lr = parse(&k, value)?,
            "batch-size" => self.batch_size = parse(&k, value)?,
            "epochs" => self.epochs = parse(&k, value)?,
            "warmup-frac" => self.warmup_frac = parse(&k, value)?,
            "eval-every-frac" => self.eval_every_frac = parse(&k, value)?,
            "seed" => self.seed = parse(&k, value)?,
            "max-seq-len" => self.max_seq_len = parse(&k, value)?,
            "vocab-size" => self.vocab_size = parse(&k, value)?,
            "dim" => self.dim = parse(&k, value)?,
            "init-scale" => self.init_scale = parse(&k, value)?,
            "adam-beta1" => self.adam.beta1 = parse(&k, value)?,
            "adam-beta2" => self.adam.beta2 = parse(&k, value)?,
            "adam-eps" => self.adam.eps = parse(&k, value)?,
            "weight-decay" => self.adam.weight_decay = parse(&k, value)?,
            "eval-max-len" => self.eval_max_len = parse(&k, value)?,
            "record-wall-time" => self.record_wall_time = parse_bool(&k, value)?,
            "pairs" => self.pairs = Some(value.into()),
            "tasks" => self.tasks = Some(value.into()),
            "init-checkpoint" => self.init_checkpoint = Some(value.into()),
            "checkpoint-out" => self.checkpoint_out = Some(value.into()),
            "metrics-out" => self.metrics_out = Some(value.into()),
            _ => return Err(Error::invalid(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    pub fn apply(&mut self, entries: &[(String, String)]) -> Result<()> {
        entries.iter().try_for_each(|(k, v)| self.set(k, v))
    }

    pub fn validate(&self) -> Result<()> {
        self.loss_config()?;
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::invalid("batch-size and epochs must be >= 1"));
        }
        if !(self.eval_every_frac > 0.0 && self.eval_every_frac <= 1.0) {
            return Err(Error::invalid(format!("eval-every-frac must lie in (0, 1], got {}", self.eval_every_frac)));
        }
        if !(self.peak_lr.is_finite() && self.peak_lr >= 0.0) {
            return Err(Error::invalid(format!("peak-lr must be finite and >= 0, got {}", self.peak_lr)));
        }
        if !(0.0..1.0).contains(&self.warmup_frac) {
            return Err(Error::invalid(format!("warmup-frac must lie in [0, 1), got {}", self.warmup_frac)));
        }
        if self.max_seq_len == 0 || self.dim == 0 || self.eval_max_len == 0 {
            return Err(Error::invalid("max-seq-len, dim and eval-max-len must be >= 1"));
        }
        Vocab::with_size(self.vocab_size)?;
        self.adam.validate()
    }

    pub fn loss_config(&self) -> Result<LossConfig> {
        LossConfig::new(self.beta, self.alpha, self.damp_reference)
    }

    pub fn vocab(&self) -> Result<Vocab> {
        Vocab::with_size(self.vocab_size)
    }
}

/// A preference pair ready for training.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairExample {
    pub prompt: TokenSeq,
    pub chosen: TokenSeq,
    pub rejected: TokenSeq,
}

impl PairExample {
    fn max_len(&self) -> usize {
        self.prompt.len() + self.chosen.len().max(self.rejected.len())
    }
}

impl From<&PreferencePairRecord> for PairExample {
    fn from(r: &PreferencePairRecord) -> Self {
        Self { prompt: r.prompt.clone(), chosen: r.chosen.clone(), rejected: r.rejected.clone() }
    }
}

/// Validates tokens and drops pairs longer than `max_seq_len` (prompt plus
/// the longer response). Returns the kept pairs and the dropped count.
pub fn prepare_pairs(
    records: &[PreferencePairRecord],
    vocab: &Vocab,
    max_seq_len: usize,
) -> Result<(Vec<PairExample>, usize)> {
    let mut kept = Vec::with_capacity(records.len());
    let mut dropped = 0;
    for r in records {
        for seq in [&r.prompt, &r.chosen, &r.rejected] {
            seq.validate(vocab).map_err(|e| Error::invalid(format!("pair '{}': {e}", r.query_id)))?;
        }
        if r.chosen.is_empty() || r.rejected.is_empty() {
            return Err(Error::invalid(format!("pair '{}': empty response", r.query_id)));
        }
        let ex = PairExample::from(r);
        if ex.max_len() > max_seq_len {
            dropped += 1;
            continue;
        }
        if ex.chosen == ex.rejected {
            log::warn!("pair '{}': chosen and rejected are identical", r.query_id);
        }
        kept.push(ex);
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} pairs longer than {max_seq_len} tokens");
    }
    Ok((kept, dropped))
}

/// One optimizer step in the metrics log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub step: usize,
    pub lr: f64,
    pub loss: f64,
    pub rewards_accuracy: f64,
    pub wall_ms: Option<u64>,
    pub pass_at_1: Option<f64>,
    pub mean_gen_len: Option<f64>,
}

pub fn write_metrics_csv(out: impl std::io::Write, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    if rows.is_empty() {
        w.write_record(["step", "lr", "loss", "rewards_accuracy", "wall_ms", "pass_at_1", "mean_gen_len"])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics_csv(input: impl std::io::Read) -> Result<Vec<MetricsRow>> {
    csv::Reader::from_reader(input).deserialize().map(|r| r.map_err(csv_err)).collect()
}

fn csv_err(e: csv::Error) -> Error {
    Error::invalid(format!("metrics csv: {e}"))
}

/// Optimizer steps for `n` pairs, keeping the final short batch.
pub fn total_steps(n: usize, batch_size: usize, epochs: usize) -> usize {
    epochs * n.div_ceil(batch_size)
}

/// 0-based steps after which evaluation runs: every `floor(frac * total)`
/// steps (step 0 excluded) plus the final step.
pub fn eval_steps(total: usize, frac: f64) -> BTreeSet<usize> {
    let every = (frac * total as f64).floor() as usize;
    let mut steps: BTreeSet<usize> =
        if every == 0 { BTreeSet::new() } else { (1..total).filter(|s| s % every == 0).collect() };
    if total > 0 {
        steps.insert(total - 1);
    }
    steps
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub policy: ModelParams,
    pub optimizer: AdamWState,
    pub metrics: Vec<MetricsRow>,
    pub total_steps: usize,
    pub reference_fingerprint: String,
    pub final_eval: Option<EvalReport>,
}

struct CachedRef {
    chosen: TokenLogProbs,
    rejected: TokenLogProbs,
}

fn score_pair(policy: &ModelParams, ex: &PairExample, reference: &CachedRef) -> Result<PreferenceItem> {
    PreferenceItem::new(
        forward_logprobs(policy, &ex.prompt, &ex.chosen)?,
        forward_logprobs(policy, &ex.prompt, &ex.rejected)?,
        reference.chosen.clone(),
        reference.rejected.clone(),
    )
}

fn cache_reference(reference: &ModelParams, pairs: &[PairExample]) -> Result<Vec<CachedRef>> {
    pairs
        .iter()
        .map(|ex| {
            Ok(CachedRef {
                chosen: forward_logprobs(reference, &ex.prompt, &ex.chosen)?,
                rejected: forward_logprobs(reference, &ex.prompt, &ex.rejected)?,
            })
        })
        .collect()
}

/// Loss and rewards accuracy of `policy` against `reference` on `pairs`.
pub fn preference_metrics(
    policy: &ModelParams,
    reference: &ModelParams,
    pairs: &[PairExample],
    loss: &LossConfig,
    variant: Variant,
) -> Result<BatchLoss> {
    let refs = cache_reference(reference, pairs)?;
    let items = pairs.iter().zip(&refs).map(|(ex, r)| score_pair(policy, ex, r)).collect::<Result<Vec<_>>>()?;
    batch_loss(&items, loss, variant)
}

/// Trains a policy initialized at `init` against a frozen copy of `init`.
pub fn train_pairs(
    cfg: &TrainConfig,
    init: &ModelParams,
    pairs: &[PairExample],
    tasks: &[TaskInstance],
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(Error::invalid("no training pairs"));
    }
    if init.vocab.size != cfg.vocab_size || init.dim != cfg.dim {
        return Err(Error::invalid(format!(
            "model is V={} d={} but config asks for V={} d={}",
            init.vocab.size, init.dim, cfg.vocab_size, cfg.dim
        )));
    }
    let loss_cfg = cfg.loss_config()?;
    let reference = init.clone();
    let reference_fingerprint = reference.fingerprint();
    let refs = cache_reference(&reference, pairs)?;

    let total = total_steps(pairs.len(), cfg.batch_size, cfg.epochs);
    let schedule = ScheduleConfig::new(cfg.peak_lr, total, cfg.warmup_frac)?;
    let evals = eval_steps(total, cfg.eval_every_frac);

    let mut policy = init.clone();
    let mut optimizer = AdamWState::new(&policy, cfg.adam)?;
    let mut grads = ModelGradients::zeros_like(&policy);
    let mut metrics = Vec::with_capacity(total);
    let mut final_eval = None;
    let started = Instant::now();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut step = 0;

    for epoch in 0..cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng::stream(cfg.seed, rng::STREAM_SHUFFLE + epoch as u64));
        for batch in order.chunks(cfg.batch_size) {
            let items = batch.iter().map(|&i| score_pair(&policy, &pairs[i], &refs[i])).collect::<Result<Vec<_>>>()?;
            let result = batch_loss(&items, &loss_cfg, cfg.variant)?;
            if !result.loss.is_finite() {
                return Err(Error::Numeric(format!("non-finite loss {} at step {step}", result.loss)));
            }

            grads.scale(0.0);
            let scale = 1.0 / batch.len() as f64;
            for (&i, r) in batch.iter().zip(&result.items) {
                let ex = &pairs[i];
                let gc: Vec<f64> = r.grad_chosen.iter().map(|g| g * scale).collect();
                let gr: Vec<f64> = r.grad_rejected.iter().map(|g| g * scale).collect();
                backward_into(&policy, &ex.prompt, &ex.chosen, &gc, &mut grads)?;
                backward_into(&policy, &ex.prompt, &ex.rejected, &gr, &mut grads)?;
            }
            let lr = lr_at_step(&schedule, step)?;
            adamw_step(&mut policy, &grads, &mut optimizer, lr)?;
            if !policy.is_finite() {
                return Err(Error::Numeric(format!("non-finite parameters after step {step}")));
            }

            let mut row = MetricsRow {
                step,
                lr,
                loss: result.loss,
                rewards_accuracy: result.rewards_accuracy,
                wall_ms: cfg.record_wall_time.then(|| started.elapsed().as_millis() as u64),
                pass_at_1: None,
                mean_gen_len: None,
            };
            if evals.contains(&step) && !tasks.is_empty() {
                let report = evaluate_model(&policy, tasks, Decode::Greedy, cfg.eval_max_len)?;
                log::info!("step {step}: {}", report.summary());
                row.pass_at_1 = Some(report.pass_at_1);
                row.mean_gen_len = Some(report.mean_generation_length);
                final_eval = Some(report);
            }
            log::debug!("step {step}: lr {lr:.3e} loss {:.5} acc {:.3}", row.loss, row.rewards_accuracy);
            metrics.push(row);
            step += 1;
        }
    }

    if reference.fingerprint() != reference_fingerprint {
        return Err(Error::Numeric("reference model changed during training".into()));
    }
    Ok(TrainOutcome { policy, optimizer, metrics, total_steps: total, reference_fingerprint, final_eval })
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Initial parameters: the configured checkpoint, else a seeded draw.
pub fn initial_params(cfg: &TrainConfig) -> Result<ModelParams> {
    match &cfg.init_checkpoint {
        Some(path) => {
            let params = Checkpoint::load(path)?.params;
            if params.vocab.size != cfg.vocab_size || params.dim != cfg.dim {
                return Err(Error::Format(format!(
                    "checkpoint {} is V={} d={}, config expects V={} d={}",
                    path.display(),
                    params.vocab.size,
                    params.dim,
                    cfg.vocab_size,
                    cfg.dim
                )));
            }
            Ok(params)
        }
        None => init_params(cfg.seed, cfg.vocab()?, cfg.dim, cfg.init_scale),
    }
}

pub fn load_pairs(cfg: &TrainConfig) -> Result<(Vec<PairExample>, usize)> {
    let path = cfg.pairs.as_deref().ok_or_else(|| Error::invalid("no pairs file configured"))?;
    let records = read_pairs_jsonl(open(path)?)?;
    if records.is_empty() {
        return Err(Error::invalid(format!("{}: pair file is empty", path.display())));
    }
    prepare_pairs(&records, &cfg.vocab()?, cfg.max_seq_len)
}

/// Tasks are read with the default synthetic layout and must fit the model vocabulary.
pub fn load_tasks(path: &Path, vocab: &Vocab) -> Result<Vec<TaskInstance>> {
    let layout = SynthLayout::default();
    if layout.vocab_size() > vocab.size {
        return Err(Error::invalid(format!(
            "task vocabulary needs {} tokens, model has {}",
            layout.vocab_size(),
            vocab.size
        )));
    }
    read_tasks_jsonl(&layout, open(path)?)
}

/// File-driven training: reads pairs (and optional tasks), trains, then
/// writes the checkpoint and metrics CSV if configured.
pub fn run_training(cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let (pairs, dropped) = load_pairs(cfg)?;
    log::info!("loaded {} pairs ({dropped} dropped as over-length)", pairs.len());
    let tasks = match &cfg.tasks {
        Some(p) => load_tasks(p, &cfg.vocab()?)?,
        None => Vec::new(),
    };
    let init = initial_params(cfg)?;
    let outcome = train_pairs(cfg, &init, &pairs, &tasks)?;
    if let Some(path) = &cfg.checkpoint_out {
        Checkpoint { params: outcome.policy.clone(), optimizer: Some(outcome.optimizer.clone()) }.save(path)?;
    }
    if let Some(path) = &cfg.metrics_out {
        write_metrics_csv(BufWriter::new(File::create(path)?), &outcome.metrics)?;
    }
    Ok(outcome)
}

/// Supervised fine-tuning on (prompt, response) demonstrations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SftConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for SftConfig {
    fn default() -> Self {
        Self { steps: 300, batch_size: 32, lr: 5e-2, seed: 0 }
    }
}

/// Minimizes mean sequence negative log-likelihood with AdamW (no weight
/// decay) at a constant learning rate. Batches are drawn with replacement.
pub fn supervised_finetune(
    init: &ModelParams,
    examples: &[(TokenSeq, TokenSeq)],
    cfg: &SftConfig,
) -> Result<ModelParams> {
    if examples.is_empty() || cfg.batch_size == 0 {
        return Err(Error::invalid("supervised fine-tuning needs examples and batch size >= 1"));
    }
    let mut params = init.clone();
    let mut opt = AdamWState::new(&params, AdamWConfig { weight_decay: 0.0, ..Default::default() })?;
    let mut grads = ModelGradients::zeros_like(&params);
    let mut rng = rng::stream(cfg.seed, rng::STREAM_SHUFFLE);
    let upstream = -1.0 / cfg.batch_size as f64;
    for step in 0..cfg.steps {
        grads.scale(0.0);
        let mut nll = 0.0;
        for _ in 0..cfg.batch_size {
            let (prompt, response) = &examples[rng.gen_range(0..examples.len())];
            nll -= forward_logprobs(&params, prompt, response)?.sum();
            backward_into(&params, prompt, response, &vec![upstream; response.len()], &mut grads)?;
        }
        if !nll.is_finite() {
            return Err(Error::Numeric(format!("non-finite supervised loss at step {step}")));
        }
        adamw_step(&mut params, &grads, &mut opt, cfg.lr)?;
        if step % 50 == 0 {
            log::debug!("sft step {step}: nll {:.4}", nll / cfg.batch_size as f64);
        }
    }
    Ok(params)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub label: String,
    pub pass_at_1: f64,
    pub mean_generation_length: f64,
    pub delta_pass_at_1: f64,
    pub delta_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
}

impl CompareReport {
    pub fn row(&self, label: &str) -> Option<&CompareRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<24} {:>9} {:>9} {:>10} {:>9}", "run", "pass@1", "Δpass@1", "mean_len", "Δlen")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<24} {:>9.4} {:>+9.4} {:>10.3} {:>+9.3}",
                r.label, r.pass_at_1, r.delta_pass_at_1, r.mean_generation_length, r.delta_length
            )?;
        }
        Ok(())
    }
}

fn describe(cfg: &TrainConfig) -> String {
    match cfg.variant {
        Variant::Dpo => "dpo".to_string(),
        Variant::Lddpo => format!("lddpo(alpha={})", cfg.alpha),
    }
}

/// Trains `cfg_a` and `cfg_b` from the same initialization and tabulates
/// greedy pass@1 and generation length against the untrained baseline.
pub fn compare_runs(
    cfg_a: &TrainConfig,
    cfg_b: &TrainConfig,
    init: &ModelParams,
    pairs: &[PairExample],
    tasks: &[TaskInstance],
) -> Result<CompareReport> {
    if cfg_a.seed != cfg_b.seed {
        return Err(Error::invalid("compared runs must share the seed"));
    }
    if tasks.is_empty() {
        return Err(Error::invalid("comparison needs evaluation tasks"));
    }
    let eval = |p: &ModelParams, max_len| evaluate_model(p, tasks, Decode::Greedy, max_len);
    let base = eval(init, cfg_a.eval_max_len)?;
    let mut rows = vec![CompareRow {
        label: "baseline".into(),
        pass_at_1: base.pass_at_1,
        mean_generation_length: base.mean_generation_length,
        delta_pass_at_1: 0.0,
        delta_length: 0.0,
    }];
    for (tag, cfg) in [("A", cfg_a), ("B", cfg_b)] {
        let outcome = train_pairs(cfg, init, pairs, &[])?;
        let r = eval(&outcome.policy, cfg.eval_max_len)?;
        rows.push(CompareRow {
            label: format!("{tag}: {}", describe(cfg)),
            pass_at_1: r.pass_at_1,
            mean_generation_length: r.mean_generation_length,
            delta_pass_at_1: r.pass_at_1 - base.pass_at_1,
            delta_length: r.mean_generation_length - base.mean_generation_length,
        });
    }
    Ok(CompareReport { rows })
}

/// File-driven comparison; both configs must name the same pairs file.
pub fn run_compare(cfg_a: &TrainConfig, cfg_b: &TrainConfig) -> Result<CompareReport> {
    cfg_a.validate()?;
    cfg_b.validate()?;
    if cfg_a.pairs != cfg_b.pairs || cfg_a.init_checkpoint != cfg_b.init_checkpoint {
        return Err(Error::invalid("compared runs must share pairs and initialization"));
    }
    let (pairs, _) = load_pairs(cfg_a)?;
    let tasks_path = cfg_a.tasks.as_deref().ok_or_else(|| Error::invalid("comparison needs a tasks file"))?;
    let tasks = load_tasks(tasks_path, &cfg_a.vocab()?)?;
    let init = initial_params(cfg_a)?;
    compare_runs(cfg_a, cfg_b, &init, &pairs, &tasks)
}
