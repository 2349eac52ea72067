//! Preference losses over per-token log-probabilities.
//!
//! Both losses reduce a preference pair to a reward margin
//!
//! ```text
//! margin = beta * (log pi(y_w|x) - log ref(y_w|x)) - beta * (log pi(y_l|x) - log ref(y_l|x))
//! loss   = -log sigmoid(margin) = softplus(-margin)
//! ```
//!
//! The length-desensitized variant swaps the plain sequence log-likelihood for
//! one where tokens past the pair's common length `l_p` (the shorter response's
//! token count) are scaled by `alpha`:
//!
//! ```text
//! log pi_hat(y|x) = sum_{i <= l_p} log p(y_i | x, y_<i) + alpha * sum_{i > l_p} log p(y_i | x, y_<i)
//! ```
//!
//! `alpha = 1` recovers the plain loss exactly; `alpha = 0` scores only the
//! first `l_p` tokens of each response.
//!
//! Gradients are returned with respect to the policy's per-token
//! log-probabilities; the model layer turns them into parameter gradients.

use crate::error::{Error, Result};

/// Natural-log conditional probabilities of each token of one response.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenLogProbs(Vec<f64>);

impl TokenLogProbs {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("token log-probs must cover at least one token"));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite() || **v > 0.0) {
            return Err(Error::invalid(format!("token log-prob at position {i} must be finite and <= 0, got {v}")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Plain sequence log-likelihood, summed left to right.
    pub fn sum(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, v| acc + v)
    }
}

/// One preference pair scored under policy and reference.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceItem {
    pub policy_chosen: TokenLogProbs,
    pub policy_rejected: TokenLogProbs,
    pub ref_chosen: TokenLogProbs,
    pub ref_rejected: TokenLogProbs,
}

impl PreferenceItem {
    pub fn new(
        policy_chosen: TokenLogProbs,
        policy_rejected: TokenLogProbs,
        ref_chosen: TokenLogProbs,
        ref_rejected: TokenLogProbs,
    ) -> Result<Self> {
        if policy_chosen.len() != ref_chosen.len() {
            return Err(Error::invalid(format!(
                "chosen length mismatch: policy {} vs reference {}",
                policy_chosen.len(),
                ref_chosen.len()
            )));
        }
        if policy_rejected.len() != ref_rejected.len() {
            return Err(Error::invalid(format!(
                "rejected length mismatch: policy {} vs reference {}",
                policy_rejected.len(),
                ref_rejected.len()
            )));
        }
        Ok(Self { policy_chosen, policy_rejected, ref_chosen, ref_rejected })
    }

    /// The same pair with chosen and rejected swapped.
    pub fn swapped(&self) -> Self {
        Self {
            policy_chosen: self.policy_rejected.clone(),
            policy_rejected: self.policy_chosen.clone(),
            ref_chosen: self.ref_rejected.clone(),
            ref_rejected: self.ref_chosen.clone(),
        }
    }

    pub fn common_length(&self) -> usize {
        self.policy_chosen.len().min(self.policy_rejected.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub beta: f64,
    pub alpha: f64,
    /// Apply the length-decoupled likelihood to the reference as well.
    pub damp_reference: bool,
}

impl LossConfig {
    pub fn new(beta: f64, alpha: f64, damp_reference: bool) -> Result<Self> {
        let cfg = Self { beta, alpha, damp_reference };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_beta(self.beta)?;
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        Ok(())
    }
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { beta: 0.1, alpha: 0.3, damp_reference: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossResult {
    pub loss: f64,
    pub chosen_reward: f64,
    pub rejected_reward: f64,
    pub margin: f64,
    pub correct: bool,
    /// d loss / d policy_chosen[i]
    pub grad_chosen: Vec<f64>,
    /// d loss / d policy_rejected[i]
    pub grad_rejected: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Dpo,
    Lddpo,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dpo" => Ok(Variant::Dpo),
            "lddpo" | "ld-dpo" | "ld_dpo" => Ok(Variant::Lddpo),
            other => Err(Error::invalid(format!("unknown loss variant '{other}' (expected dpo or lddpo)"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Dpo => "dpo",
            Variant::Lddpo => "lddpo",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchLoss {
    pub loss: f64,
    pub rewards_accuracy: f64,
    pub items: Vec<LossResult>,
}

/// Token count of the shorter response.
pub fn common_length(len_w: usize, len_l: usize) -> Result<usize> {
    if len_w == 0 || len_l == 0 {
        return Err(Error::invalid(format!("response lengths must be positive, got ({len_w}, {len_l})")));
    }
    Ok(len_w.min(len_l))
}

/// Length-decoupled sequence log-likelihood: full weight on the first `l_p`
/// tokens, `alpha` on the rest.
pub fn ld_sequence_logprob(seq: &TokenLogProbs, l_p: usize, alpha: f64) -> Result<f64> {
    if l_p == 0 || l_p > seq.len() {
        return Err(Error::invalid(format!("common length {l_p} out of range 1..={}", seq.len())));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    Ok(weighted_sum(seq.values(), l_p, alpha))
}

/// Numerically stable softplus: log(1 + e^z).
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// -log sigmoid(z), computed as softplus(-z).
pub fn neg_log_sigmoid(z: f64) -> f64 {
    softplus(-z)
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Plain DPO loss on one pair.
pub fn dpo_item_loss(item: &PreferenceItem, beta: f64) -> Result<LossResult> {
    check_beta(beta)?;
    let weights = Weights { l_p: usize::MAX, alpha: 1.0, damp_reference: false };
    Ok(pair_loss(item, beta, weights))
}

/// Length-desensitized DPO loss on one pair.
pub fn lddpo_item_loss(item: &PreferenceItem, cfg: &LossConfig) -> Result<LossResult> {
    cfg.validate()?;
    let weights = Weights { l_p: item.common_length(), alpha: cfg.alpha, damp_reference: cfg.damp_reference };
    Ok(pair_loss(item, cfg.beta, weights))
}

pub fn item_loss(item: &PreferenceItem, cfg: &LossConfig, variant: Variant) -> Result<LossResult> {
    match variant {
        Variant::Dpo => dpo_item_loss(item, cfg.beta),
        Variant::Lddpo => lddpo_item_loss(item, cfg),
    }
}

/// Mean loss and rewards accuracy over a batch. Zero margins count as incorrect.
pub fn batch_loss(items: &[PreferenceItem], cfg: &LossConfig, variant: Variant) -> Result<BatchLoss> {
    if items.is_empty() {
        return Err(Error::invalid("batch must contain at least one item"));
    }
    let results = items.iter().map(|item| item_loss(item, cfg, variant)).collect::<Result<Vec<_>>>()?;
    let n = results.len() as f64;
    let loss = results.iter().map(|r| r.loss).sum::<f64>() / n;
    let correct = results.iter().filter(|r| r.correct).count() as f64;
    Ok(BatchLoss { loss, rewards_accuracy: correct / n, items: results })
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::invalid(format!("beta must be a positive finite number, got {beta}")));
    }
    Ok(())
}

#[derive(Clone, Copy)]
struct Weights {
    l_p: usize,
    alpha: f64,
    damp_reference: bool,
}

impl Weights {
    fn at(&self, i: usize) -> f64 {
        if i < self.l_p {
            1.0
        } else {
            self.alpha
        }
    }
}

// A single left fold so that alpha = 1 reproduces the plain sum bit-for-bit.
fn weighted_sum(values: &[f64], l_p: usize, alpha: f64) -> f64 {
    values.iter().enumerate().fold(0.0, |acc, (i, v)| acc + if i < l_p { *v } else { alpha * v })
}

fn pair_loss(item: &PreferenceItem, beta: f64, w: Weights) -> LossResult {
    let policy_w = weighted_sum(item.policy_chosen.values(), w.l_p, w.alpha);
    let policy_l = weighted_sum(item.policy_rejected.values(), w.l_p, w.alpha);
    let (ref_w, ref_l) = if w.damp_reference {
        (
            weighted_sum(item.ref_chosen.values(), w.l_p, w.alpha),
            weighted_sum(item.ref_rejected.values(), w.l_p, w.alpha),
        )
    } else {
        (item.ref_chosen.sum(), item.ref_rejected.sum())
    };

    let chosen_reward = beta * (policy_w - ref_w);
    let rejected_reward = beta * (policy_l - ref_l);
    let margin = chosen_reward - rejected_reward;
    let loss = neg_log_sigmoid(margin);

    // d(-log sigmoid(m))/dm = -sigmoid(-m)
    let coeff = beta * sigmoid(-margin);
    let grad_chosen = (0..item.policy_chosen.len()).map(|i| -coeff * w.at(i)).collect();
    let grad_rejected = (0..item.policy_rejected.len()).map(|i| coeff * w.at(i)).collect();

    LossResult { loss, chosen_reward, rejected_reward, margin, correct: margin > 0.0, grad_chosen, grad_rejected }
}
