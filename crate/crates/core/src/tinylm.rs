//! A factored bigram language model with hand-written backward pass.
//!
//! The next-token distribution after token `c` is `softmax(E[c] · W + b)`.
//! A response is scored token by token; the first response token is
//! conditioned on the last prompt token (or `bos` for an empty prompt), and
//! prompt tokens are never scored.

use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::prefloss::TokenLogProbs;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    pub size: usize,
    pub bos: u32,
    pub eos: u32,
    pub pad: u32,
}

impl Vocab {
    pub fn new(size: usize, bos: u32, eos: u32, pad: u32) -> Result<Self> {
        let v = Self { size, bos, eos, pad };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        if self.size < 4 {
            return Err(Error::invalid(format!("vocabulary size must be >= 4, got {}", self.size)));
        }
        for (name, id) in [("bos", self.bos), ("eos", self.eos), ("pad", self.pad)] {
            if id as usize >= self.size {
                return Err(Error::invalid(format!("{name} id {id} outside vocabulary of size {}", self.size)));
            }
        }
        if self.bos == self.eos || self.bos == self.pad || self.eos == self.pad {
            return Err(Error::invalid("bos, eos and pad ids must be pairwise distinct"));
        }
        Ok(())
    }

    /// Layout used by the synthetic task suite: pad 0, bos 1, eos 2.
    pub fn with_size(size: usize) -> Result<Self> {
        Self::new(size, 1, 2, 0)
    }
}

/// A sequence of token ids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSeq(pub Vec<u32>);

impl TokenSeq {
    pub fn new(ids: Vec<u32>) -> Self {
        Self(ids)
    }

    pub fn ids(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn validate(&self, vocab: &Vocab) -> Result<()> {
        match self.0.iter().find(|&&id| id as usize >= vocab.size) {
            Some(id) => Err(Error::invalid(format!("token id {id} outside vocabulary of size {}", vocab.size))),
            None => Ok(()),
        }
    }

    /// Character count of the space-separated decimal rendering ("5 13 3").
    pub fn char_len(&self) -> usize {
        let digits: usize = self.0.iter().map(|id| id.to_string().len()).sum();
        digits + self.0.len().saturating_sub(1)
    }
}

impl From<Vec<u32>> for TokenSeq {
    fn from(ids: Vec<u32>) -> Self {
        Self(ids)
    }
}

/// Row-major parameter arrays: `embedding` is V×d, `output` is d×V.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub vocab: Vocab,
    pub dim: usize,
    pub embedding: Vec<f64>,
    pub output: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Gradients with the shapes of a [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGradients {
    pub embedding: Vec<f64>,
    pub output: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(vocab: Vocab, dim: usize) -> Result<Self> {
        vocab.validate()?;
        if dim == 0 {
            return Err(Error::invalid("embedding width must be >= 1"));
        }
        let v = vocab.size;
        Ok(Self { vocab, dim, embedding: vec![0.0; v * dim], output: vec![0.0; dim * v], bias: vec![0.0; v] })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.size
    }

    pub fn validate(&self) -> Result<()> {
        self.vocab.validate()?;
        let (v, d) = (self.vocab.size, self.dim);
        if d == 0 || self.embedding.len() != v * d || self.output.len() != d * v || self.bias.len() != v {
            return Err(Error::invalid(format!("parameter shapes inconsistent with V={v}, d={d}")));
        }
        if !self.is_finite() {
            return Err(Error::invalid("parameters contain non-finite entries"));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|x| x.is_finite()))
    }

    pub fn slices(&self) -> [&[f64]; 3] {
        [&self.embedding, &self.output, &self.bias]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 3] {
        [&mut self.embedding, &mut self.output, &mut self.bias]
    }

    pub fn num_params(&self) -> usize {
        self.embedding.len() + self.output.len() + self.bias.len()
    }

    /// SHA-256 over the shape header and little-endian parameter bytes.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for x in [
            self.vocab.size as u64,
            self.dim as u64,
            self.vocab.bos as u64,
            self.vocab.eos as u64,
            self.vocab.pad as u64,
        ] {
            h.update(x.to_le_bytes());
        }
        for s in self.slices() {
            for x in s {
                h.update(x.to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Raw next-token logits after context token `ctx`.
    pub fn logits(&self, ctx: u32) -> Vec<f64> {
        let (v, d) = (self.vocab.size, self.dim);
        let row = &self.embedding[ctx as usize * d..(ctx as usize + 1) * d];
        let mut out = self.bias.clone();
        for (k, e) in row.iter().enumerate() {
            let w = &self.output[k * v..(k + 1) * v];
            for (o, wk) in out.iter_mut().zip(w) {
                *o += e * wk;
            }
        }
        out
    }

    /// Full next-token log-distribution after context token `ctx`.
    pub fn next_token_logprobs(&self, ctx: u32) -> Vec<f64> {
        let mut z = self.logits(ctx);
        let lse = log_sum_exp(&z);
        z.iter_mut().for_each(|x| *x -= lse);
        z
    }
}

impl ModelGradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        Self {
            embedding: vec![0.0; params.embedding.len()],
            output: vec![0.0; params.output.len()],
            bias: vec![0.0; params.bias.len()],
        }
    }

    pub fn slices(&self) -> [&[f64]; 3] {
        [&self.embedding, &self.output, &self.bias]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 3] {
        [&mut self.embedding, &mut self.output, &mut self.bias]
    }

    pub fn matches(&self, params: &ModelParams) -> bool {
        self.embedding.len() == params.embedding.len()
            && self.output.len() == params.output.len()
            && self.bias.len() == params.bias.len()
    }

    /// Elementwise `self += other`.
    pub fn accumulate(&mut self, other: &ModelGradients) -> Result<()> {
        let shapes_match = self.embedding.len() == other.embedding.len()
            && self.output.len() == other.output.len()
            && self.bias.len() == other.bias.len();
        if !shapes_match {
            return Err(Error::invalid("gradient shapes differ"));
        }
        for (dst, src) in self.slices_mut().into_iter().zip(other.slices()) {
            dst.iter_mut().zip(src).for_each(|(a, b)| *a += b);
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(|x| *x *= factor);
        }
    }
}

pub(crate) fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + z.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Parameters drawn i.i.d. from U[-scale, scale] on the init stream of `seed`.
pub fn init_params(seed: u64, vocab: Vocab, dim: usize, scale: f64) -> Result<ModelParams> {
    if !(scale.is_finite() && scale >= 0.0) {
        return Err(Error::invalid(format!("init scale must be finite and >= 0, got {scale}")));
    }
    let mut params = ModelParams::zeros(vocab, dim)?;
    if scale == 0.0 {
        return Ok(params);
    }
    let mut rng = rng::stream(seed, rng::STREAM_INIT);
    let dist = Uniform::new_inclusive(-scale, scale);
    for s in params.slices_mut() {
        s.iter_mut().for_each(|x| *x = dist.sample(&mut rng));
    }
    Ok(params)
}

/// One-hot embeddings (`dim == V`) so that `logits(c) == table[c]`; hand-built models for tests.
pub fn transition_table_params(vocab: Vocab, table: &[Vec<f64>]) -> Result<ModelParams> {
    let v = vocab.size;
    if table.len() != v || table.iter().any(|row| row.len() != v) {
        return Err(Error::invalid(format!("transition table must be {v} x {v}")));
    }
    let mut params = ModelParams::zeros(vocab, v)?;
    for i in 0..v {
        params.embedding[i * v + i] = 1.0;
    }
    for (c, row) in table.iter().enumerate() {
        params.output[c * v..(c + 1) * v].copy_from_slice(row);
    }
    params.validate()?;
    Ok(params)
}

fn check_tokens(params: &ModelParams, prompt: &TokenSeq, response: &TokenSeq) -> Result<()> {
    if response.is_empty() {
        return Err(Error::invalid("response must contain at least one token"));
    }
    prompt.validate(&params.vocab)?;
    response.validate(&params.vocab)
}

/// (context, target) pairs for every response token.
fn scored_positions<'a>(
    params: &ModelParams,
    prompt: &'a TokenSeq,
    response: &'a TokenSeq,
) -> impl Iterator<Item = (u32, u32)> + 'a {
    let first_ctx = prompt.ids().last().copied().unwrap_or(params.vocab.bos);
    std::iter::once(first_ctx).chain(response.ids().iter().copied()).zip(response.ids().iter().copied())
}

/// Per-token log-probabilities of `response` given `prompt`.
pub fn forward_logprobs(params: &ModelParams, prompt: &TokenSeq, response: &TokenSeq) -> Result<TokenLogProbs> {
    check_tokens(params, prompt, response)?;
    let values = scored_positions(params, prompt, response)
        .map(|(ctx, tok)| {
            let z = params.logits(ctx);
            // min(0) absorbs a rounding excess when one logit dominates.
            (z[tok as usize] - log_sum_exp(&z)).min(0.0)
        })
        .collect();
    TokenLogProbs::new(values)
}

/// Gradient of `sum_i upstream[i] * logprob_i` with respect to every parameter.
pub fn backward(
    params: &ModelParams,
    prompt: &TokenSeq,
    response: &TokenSeq,
    upstream: &[f64],
) -> Result<ModelGradients> {
    let mut grads = ModelGradients::zeros_like(params);
    backward_into(params, prompt, response, upstream, &mut grads)?;
    Ok(grads)
}

/// Like [`backward`] but accumulates into an existing gradient buffer.
pub fn backward_into(
    params: &ModelParams,
    prompt: &TokenSeq,
    response: &TokenSeq,
    upstream: &[f64],
    grads: &mut ModelGradients,
) -> Result<()> {
    check_tokens(params, prompt, response)?;
    if upstream.len() != response.len() {
        return Err(Error::invalid(format!(
            "upstream length {} does not match response length {}",
            upstream.len(),
            response.len()
        )));
    }
    if !grads.matches(params) {
        return Err(Error::invalid("gradient buffer shape does not match parameters"));
    }
    let (v, d) = (params.vocab.size, params.dim);
    let mut dlogits = vec![0.0; v];
    for ((ctx, tok), &u) in scored_positions(params, prompt, response).zip(upstream) {
        if u == 0.0 {
            continue;
        }
        // d logp[tok] / d z = onehot(tok) - softmax(z)
        let z = params.logits(ctx);
        let lse = log_sum_exp(&z);
        for (g, zj) in dlogits.iter_mut().zip(&z) {
            *g = -u * (zj - lse).exp();
        }
        dlogits[tok as usize] += u;

        let c = ctx as usize;
        let e_row = &params.embedding[c * d..(c + 1) * d];
        for (gb, g) in grads.bias.iter_mut().zip(&dlogits) {
            *gb += g;
        }
        for (k, &e) in e_row.iter().enumerate() {
            let w_row = &params.output[k * v..(k + 1) * v];
            let gw_row = &mut grads.output[k * v..(k + 1) * v];
            let mut ge = 0.0;
            for j in 0..v {
                gw_row[j] += e * dlogits[j];
                ge += w_row[j] * dlogits[j];
            }
            grads.embedding[c * d + k] += ge;
        }
    }
    Ok(())
}

/// Autoregressive generation until `eos` or `max_len` tokens.
///
/// Temperature 0 decodes greedily, breaking ties toward the lowest token id.
pub fn sample(
    params: &ModelParams,
    prompt: &TokenSeq,
    max_len: usize,
    temperature: f64,
    seed: u64,
) -> Result<TokenSeq> {
    if max_len == 0 {
        return Err(Error::invalid("max_len must be >= 1"));
    }
    if !(temperature.is_finite() && temperature >= 0.0) {
        return Err(Error::invalid(format!("temperature must be finite and >= 0, got {temperature}")));
    }
    prompt.validate(&params.vocab)?;
    let mut rng = rng::stream(seed, rng::STREAM_SAMPLE);
    let mut ctx = prompt.ids().last().copied().unwrap_or(params.vocab.bos);
    let mut out = Vec::with_capacity(max_len);
    while out.len() < max_len {
        let logits = params.logits(ctx);
        let next = if temperature == 0.0 {
            argmax_lowest(&logits)
        } else {
            let scaled: Vec<f64> = logits.iter().map(|z| z / temperature).collect();
            let lse = log_sum_exp(&scaled);
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut pick = scaled.len() - 1;
            for (j, z) in scaled.iter().enumerate() {
                acc += (z - lse).exp();
                if u < acc {
                    pick = j;
                    break;
                }
            }
            pick as u32
        };
        out.push(next);
        if next == params.vocab.eos {
            break;
        }
        ctx = next;
    }
    Ok(TokenSeq(out))
}

fn argmax_lowest(z: &[f64]) -> u32 {
    let mut best = 0;
    for (j, x) in z.iter().enumerate().skip(1) {
        if *x > z[best] {
            best = j;
        }
    }
    best as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn vocab(v: usize) -> Vocab {
        Vocab::with_size(v).unwrap()
    }

    fn seq(ids: &[u32]) -> TokenSeq {
        TokenSeq(ids.to_vec())
    }

    #[test]
    fn vocab_validation() {
        assert!(Vocab::new(3, 0, 1, 2).is_err());
        assert!(Vocab::new(4, 1, 1, 0).is_err());
        assert!(Vocab::new(4, 1, 2, 4).is_err());
        assert!(Vocab::new(4, 1, 2, 0).is_ok());
    }

    #[test]
    fn zero_scale_init_is_uniform() {
        let p = init_params(3, vocab(32), 4, 0.0).unwrap();
        let lp = forward_logprobs(&p, &seq(&[1, 7]), &seq(&[3, 4, 5, 6, 9])).unwrap();
        assert_eq!(lp.len(), 5);
        for v in lp.values() {
            assert!((v - -3.465_735_902_799_726_5).abs() < 1e-12);
        }
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let a = init_params(11, vocab(10), 3, 0.5).unwrap();
        let b = init_params(11, vocab(10), 3, 0.5).unwrap();
        let c = init_params(12, vocab(10), 3, 0.5).unwrap();
        assert_eq!(a, b);
        let differs = a.slices().iter().zip(c.slices()).any(|(x, y)| x.iter().zip(y).any(|(p, q)| p != q));
        assert!(differs);
        assert!(a.slices().iter().all(|s| s.iter().all(|x| x.abs() <= 0.5)));
    }

    #[test]
    fn distributions_are_normalized() {
        let p = init_params(5, vocab(12), 4, 2.0).unwrap();
        for ctx in 0..12 {
            let total: f64 = p.next_token_logprobs(ctx).iter().map(|x| x.exp()).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_way_softmax_closed_form() {
        // Hand-built: logits after any context are [0, ln 3].
        let mut p = ModelParams::zeros(vocab(4), 1).unwrap();
        p.bias = vec![0.0, 3f64.ln(), f64::NEG_INFINITY, f64::NEG_INFINITY];
        let lp = forward_logprobs(&p, &seq(&[0]), &seq(&[1])).unwrap();
        assert!((lp.values()[0] - (0.75f64).ln()).abs() < 1e-12);
        assert!((lp.values()[0] - -0.287_682_072_451_780_9).abs() < 1e-12);
    }

    #[test]
    fn empty_response_and_bad_ids_rejected() {
        let p = init_params(1, vocab(8), 2, 0.1).unwrap();
        assert!(forward_logprobs(&p, &seq(&[1]), &seq(&[])).is_err());
        assert!(forward_logprobs(&p, &seq(&[1]), &seq(&[8])).is_err());
        assert!(forward_logprobs(&p, &seq(&[9]), &seq(&[3])).is_err());
    }

    #[test]
    fn prompt_only_contributes_its_last_token() {
        let p = init_params(2, vocab(10), 3, 1.0).unwrap();
        let r = seq(&[4, 5, 6]);
        let a = forward_logprobs(&p, &seq(&[1, 7, 8, 3]), &r).unwrap();
        let b = forward_logprobs(&p, &seq(&[9, 9, 3]), &r).unwrap();
        let c = forward_logprobs(&p, &seq(&[3]), &r).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        let d = forward_logprobs(&p, &seq(&[1, 7, 8, 4]), &r).unwrap();
        assert_ne!(a, d);
        // Empty prompt conditions on bos.
        assert_eq!(forward_logprobs(&p, &seq(&[]), &r).unwrap(), forward_logprobs(&p, &seq(&[1]), &r).unwrap());
    }

    #[test]
    fn backward_linearity_and_zero_upstream() {
        let p = init_params(4, vocab(6), 3, 0.8).unwrap();
        let (x, y) = (seq(&[1, 2]), seq(&[3, 4, 3, 5]));
        let zero = backward(&p, &x, &y, &[0.0; 4]).unwrap();
        assert!(zero.slices().iter().all(|s| s.iter().all(|g| *g == 0.0)));

        let u = [0.3, -1.2, 0.7, 2.0];
        let g1 = backward(&p, &x, &y, &u).unwrap();
        let u2: Vec<f64> = u.iter().map(|v| 2.0 * v).collect();
        let g2 = backward(&p, &x, &y, &u2).unwrap();
        for (a, b) in g1.slices().iter().zip(g2.slices()) {
            for (p, q) in a.iter().zip(b) {
                assert!((2.0 * p - q).abs() <= 1e-14 * q.abs().max(1.0));
            }
        }
        assert!(backward(&p, &x, &y, &[1.0; 3]).is_err());
    }

    // Central differences of f(params) = sum_i u_i * logprob_i.
    fn fd_gradient(p: &ModelParams, x: &TokenSeq, y: &TokenSeq, u: &[f64], h: f64) -> ModelGradients {
        let f = |q: &ModelParams| -> f64 {
            forward_logprobs(q, x, y).unwrap().values().iter().zip(u).map(|(a, b)| a * b).sum()
        };
        let mut out = ModelGradients::zeros_like(p);
        let mut q = p.clone();
        for s in 0..3 {
            for i in 0..q.slices()[s].len() {
                let orig = q.slices()[s][i];
                q.slices_mut()[s][i] = orig + h;
                let fp = f(&q);
                q.slices_mut()[s][i] = orig - h;
                let fm = f(&q);
                q.slices_mut()[s][i] = orig;
                out.slices_mut()[s][i] = (fp - fm) / (2.0 * h);
            }
        }
        out
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = crate::rng::stream(99, 0);
        for trial in 0..20 {
            let p = init_params(trial, vocab(6), 3, 1.0).unwrap();
            let x = seq(&[rng.gen_range(0..6)]);
            let len = rng.gen_range(1..=8);
            let y = TokenSeq((0..len).map(|_| rng.gen_range(0..6)).collect());
            let u: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let analytic = backward(&p, &x, &y, &u).unwrap();
            let numeric = fd_gradient(&p, &x, &y, &u, 1e-5);
            for (a, n) in analytic.slices().iter().zip(numeric.slices()) {
                for (ga, gn) in a.iter().zip(n) {
                    let denom = ga.abs().max(gn.abs());
                    let rel = if denom == 0.0 { 0.0 } else { (ga - gn).abs() / denom };
                    assert!(rel < 1e-6, "trial {trial}: analytic {ga} vs fd {gn} (rel {rel})");
                }
            }
        }
    }

    #[test]
    fn greedy_stops_on_immediate_eos() {
        let mut p = ModelParams::zeros(vocab(6), 2).unwrap();
        p.bias[2] = 1.0; // eos
        let out = sample(&p, &seq(&[1, 4]), 10, 0.0, 0).unwrap();
        assert_eq!(out.ids(), &[2]);
    }

    #[test]
    fn greedy_ties_pick_lowest_id() {
        let p = ModelParams::zeros(vocab(6), 2).unwrap();
        let out = sample(&p, &seq(&[3]), 4, 0.0, 0).unwrap();
        assert_eq!(out.ids(), &[0, 0, 0, 0]);
    }

    #[test]
    fn sampling_respects_cap_and_seed() {
        let p = init_params(8, vocab(16), 4, 1.0).unwrap();
        for seed in 0..20 {
            let a = sample(&p, &seq(&[1]), 7, 1.0, seed).unwrap();
            let b = sample(&p, &seq(&[1]), 7, 1.0, seed).unwrap();
            assert!(a.len() <= 7 && !a.is_empty());
            assert_eq!(a, b);
        }
        assert!(sample(&p, &seq(&[1]), 0, 1.0, 0).is_err());
    }

    #[test]
    fn fingerprint_tracks_parameters() {
        let a = init_params(1, vocab(8), 2, 0.3).unwrap();
        let mut b = a.clone();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.bias[0] += 1e-12;
        assert_ne!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn char_len_of_rendering() {
        assert_eq!(seq(&[5, 13, 3]).char_len(), "5 13 3".len());
        assert_eq!(seq(&[]).char_len(), 0);
    }
}
