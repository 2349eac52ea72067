//! The two toy experiments: rewards-accuracy lift on held-out pairs, and the
//! generation-length comparison of DPO and LD-DPO against a warm start.

use serde::Serialize;

use crate::datapipe::{curate, length_statistics, CurationConfig, LengthSide, LengthUnit, PreferencePairRecord};
use crate::error::{Error, Result};
use crate::prefloss::Variant;
use crate::synthbench::{
    demonstrations, evaluate_model, generate_tasks_with, logistic_stop_weights, synthesize_corpus, CandidatePlan,
    Decode, NoisedOracle, SynthLayout,
};
use crate::tinylm::{init_params, ModelParams};
use crate::train::{preference_metrics, supervised_finetune, train_pairs, PairExample, SftConfig, TrainConfig};

/// Synthetic pair corpus shared by both experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSetup {
    pub layout: SynthLayout,
    pub queries: usize,
    pub difficulty: u32,
    pub oracle: NoisedOracle,
    pub plan: CandidatePlan,
}

impl Default for CorpusSetup {
    fn default() -> Self {
        Self {
            layout: SynthLayout::default(),
            queries: 6000,
            difficulty: 3,
            oracle: NoisedOracle::default(),
            plan: CandidatePlan::default(),
        }
    }
}

impl CorpusSetup {
    pub fn pairs(&self, seed: u64) -> Result<Vec<PreferencePairRecord>> {
        let corpus =
            synthesize_corpus(&self.layout, seed, self.queries, self.difficulty, &self.oracle, &self.plan, 0.0)?;
        let (pairs, _) = curate(corpus.queries, &CurationConfig::default(), &corpus.arbiter)?;
        Ok(pairs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftSetup {
    pub corpus: CorpusSetup,
    pub train_pairs: usize,
    pub held_out_pairs: usize,
    pub train: TrainConfig,
}

impl Default for LiftSetup {
    fn default() -> Self {
        Self {
            corpus: CorpusSetup::default(),
            train_pairs: 3000,
            held_out_pairs: 300,
            train: TrainConfig { peak_lr: 5e-2, ..Default::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftResult {
    pub train_pairs: usize,
    pub held_out_pairs: usize,
    pub untrained_accuracy: f64,
    pub trained_accuracy: f64,
    pub first_loss: f64,
    pub final_loss: f64,
    pub steps: usize,
}

/// Trains on the first `train_pairs` curated pairs and scores rewards
/// accuracy on the next `held_out_pairs`, before and after training.
pub fn run_lift(setup: &LiftSetup) -> Result<LiftResult> {
    let cfg = &setup.train;
    let pairs: Vec<PairExample> = setup.corpus.pairs(cfg.seed)?.iter().map(PairExample::from).collect();
    let needed = setup.train_pairs + setup.held_out_pairs;
    if pairs.len() < needed {
        return Err(Error::invalid(format!("corpus yielded {} pairs, need {needed}", pairs.len())));
    }
    let (train, held) = pairs[..needed].split_at(setup.train_pairs);
    let init = init_params(cfg.seed, setup.corpus.layout.vocab(), cfg.dim, cfg.init_scale)?;
    let loss = cfg.loss_config()?;
    let before = preference_metrics(&init, &init, held, &loss, cfg.variant)?;
    let outcome = train_pairs(cfg, &init, train, &[])?;
    let after = preference_metrics(&outcome.policy, &init, held, &loss, cfg.variant)?;
    Ok(LiftResult {
        train_pairs: train.len(),
        held_out_pairs: held.len(),
        untrained_accuracy: before.rewards_accuracy,
        trained_accuracy: after.rewards_accuracy,
        first_loss: outcome.metrics[0].loss,
        final_loss: outcome.metrics.last().map(|m| m.loss).unwrap_or(f64::NAN),
        steps: outcome.total_steps,
    })
}

/// Length experiment settings. The warm start is fitted to demonstrations
/// whose filler length follows a logistic stopping hazard.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthSetup {
    pub corpus: CorpusSetup,
    pub eval_tasks: usize,
    pub stop_center: f64,
    pub stop_slope: f64,
    pub sft: SftConfig,
    pub train: TrainConfig,
}

impl Default for LengthSetup {
    fn default() -> Self {
        Self {
            corpus: CorpusSetup {
                queries: 3000,
                oracle: NoisedOracle { think_min: 1, think_max: 11, error_rate: 0.4 },
                ..Default::default()
            },
            eval_tasks: 200,
            stop_center: 4.0,
            stop_slope: 0.6,
            sft: SftConfig::default(),
            train: TrainConfig { peak_lr: 2e-2, damp_reference: false, ..Default::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthResult {
    pub seed: u64,
    pub pairs: usize,
    pub chosen_mean_tokens: f64,
    pub rejected_mean_tokens: f64,
    pub baseline: f64,
    pub dpo: f64,
    pub lddpo: f64,
}

impl LengthResult {
    /// `len(DPO) > len(LD-DPO) > len(baseline)`.
    pub fn ordered(&self) -> bool {
        self.dpo > self.lddpo && self.lddpo > self.baseline
    }
}

/// Fits the warm start, trains DPO and LD-DPO from it on the same pairs, and
/// measures greedy mean generation length on held-out tasks.
pub fn run_length(setup: &LengthSetup, seed: u64) -> Result<LengthResult> {
    let layout = &setup.corpus.layout;
    let corpus = synthesize_corpus(
        layout,
        seed,
        setup.corpus.queries,
        setup.corpus.difficulty,
        &setup.corpus.oracle,
        &setup.corpus.plan,
        0.0,
    )?;
    let (records, _) = curate(corpus.queries, &CurationConfig::default(), &corpus.arbiter)?;
    let chosen = length_statistics(&records, LengthSide::Chosen, LengthUnit::Tokens)?;
    let rejected = length_statistics(&records, LengthSide::Rejected, LengthUnit::Tokens)?;
    let pairs: Vec<PairExample> = records.iter().map(PairExample::from).collect();

    let tasks = generate_tasks_with(layout, seed + 100, setup.eval_tasks, setup.corpus.difficulty)?;
    let weights = logistic_stop_weights(layout, setup.stop_center, setup.stop_slope);
    let demos = demonstrations(layout, &corpus.tasks, &weights, seed)?;
    let init = init_params(seed, layout.vocab(), setup.train.dim, setup.train.init_scale)?;
    let base = supervised_finetune(&init, &demos, &SftConfig { seed, ..setup.sft })?;
    let max_len = setup.train.eval_max_len;
    let mean_len = |p: &ModelParams| -> Result<f64> {
        Ok(evaluate_model(p, &tasks, Decode::Greedy, max_len)?.mean_generation_length)
    };

    let mut lengths = [0.0; 2];
    for (slot, variant) in lengths.iter_mut().zip([Variant::Dpo, Variant::Lddpo]) {
        let cfg = TrainConfig { seed, variant, ..setup.train.clone() };
        *slot = mean_len(&train_pairs(&cfg, &base, &pairs, &[])?.policy)?;
    }
    Ok(LengthResult {
        seed,
        pairs: pairs.len(),
        chosen_mean_tokens: chosen.mean,
        rejected_mean_tokens: rejected.mean,
        baseline: mean_len(&base)?,
        dpo: lengths[0],
        lddpo: lengths[1],
    })
}
