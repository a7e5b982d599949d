//! The policy model: parameters, forward pass, and log-probability gradients.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::vocab::{TokenSequence, Vocabulary};

/// Architecture descriptor: context window (tokens), embedding width, and
/// hidden width. The parameter vector layout is fixed by these three numbers
/// plus the vocabulary size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelArch {
    pub context_window: usize,
    pub embedding_width: usize,
    pub hidden_width: usize,
}

impl ModelArch {
    pub fn new(context_window: usize, embedding_width: usize, hidden_width: usize) -> Result<Self> {
        if context_window == 0 || embedding_width == 0 || hidden_width == 0 {
            return Err(Error::InvalidArgument(
                "architecture widths must be positive".to_string(),
            ));
        }
        Ok(Self {
            context_window,
            embedding_width,
            hidden_width,
        })
    }

    /// Total parameter count for a vocabulary of `vocab_size` tokens.
    pub fn param_count(&self, vocab_size: usize) -> usize {
        let (c, e, h, v) = (
            self.context_window,
            self.embedding_width,
            self.hidden_width,
            vocab_size,
        );
        v * e + c * e * h + h + h * v + v
    }
}

/// Flat-parameter offsets. Layout: embeddings, W1, b1, W2, b2; all matrices
/// row-major.
#[derive(Debug, Clone, Copy)]
struct Layout {
    e: usize,
    h: usize,
    v: usize,
    c: usize,
    emb: usize,
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    total: usize,
}

impl Layout {
    fn new(arch: &ModelArch, vocab_size: usize) -> Self {
        let (c, e, h, v) = (
            arch.context_window,
            arch.embedding_width,
            arch.hidden_width,
            vocab_size,
        );
        let emb = 0;
        let w1 = emb + v * e;
        let b1 = w1 + c * e * h;
        let w2 = b1 + h;
        let b2 = w2 + h * v;
        Self {
            e,
            h,
            v,
            c,
            emb,
            w1,
            b1,
            w2,
            b2,
            total: b2 + v,
        }
    }
}

/// A token sequence together with the per-token conditional log-probabilities
/// of its scored suffix. The first `conditioning_prefix_length` tokens are
/// prompt context and carry no score.
#[derive(Debug, Clone, PartialEq)]
pub struct LogProbTrace<R: Real> {
    sequence: TokenSequence,
    per_token_logprob: Vec<R>,
    conditioning_prefix_length: usize,
}

impl<R: Real> LogProbTrace<R> {
    pub fn new(
        sequence: TokenSequence,
        per_token_logprob: Vec<R>,
        conditioning_prefix_length: usize,
    ) -> Result<Self> {
        if sequence.len() < conditioning_prefix_length
            || per_token_logprob.len() != sequence.len() - conditioning_prefix_length
        {
            return Err(Error::InvalidArgument(format!(
                "trace length mismatch: {} log-probs for sequence of {} with prefix {}",
                per_token_logprob.len(),
                sequence.len(),
                conditioning_prefix_length
            )));
        }
        if per_token_logprob.iter().any(|&lp| lp > R::zero()) {
            return Err(Error::InvalidArgument(
                "log-probabilities must be <= 0".to_string(),
            ));
        }
        Ok(Self {
            sequence,
            per_token_logprob,
            conditioning_prefix_length,
        })
    }

    pub fn sequence(&self) -> &TokenSequence {
        &self.sequence
    }

    pub fn per_token_logprob(&self) -> &[R] {
        &self.per_token_logprob
    }

    pub fn conditioning_prefix_length(&self) -> usize {
        self.conditioning_prefix_length
    }

    /// Number of scored tokens.
    pub fn scored_len(&self) -> usize {
        self.per_token_logprob.len()
    }

    /// Sum of scored log-probabilities (0 for an empty trace).
    pub fn total(&self) -> R {
        self.per_token_logprob.iter().copied().sum()
    }

    /// Ids of the scored suffix.
    pub fn continuation_ids(&self) -> &[usize] {
        &self.sequence.ids()[self.conditioning_prefix_length..]
    }
}

/// Feed-forward next-token model over a fixed context window.
///
/// Immutable during inference; training mutates `params_mut()` under a single
/// writer. Cloning snapshots the parameters (used for reference models).
#[derive(Debug, Clone)]
pub struct PolicyModel<R: Real> {
    vocab: Arc<Vocabulary>,
    arch: ModelArch,
    params: Vec<R>,
}

impl<R: Real> PolicyModel<R> {
    /// All-zero parameters: every conditional distribution is uniform.
    pub fn zeroed(vocab: Arc<Vocabulary>, arch: ModelArch) -> Self {
        let n = arch.param_count(vocab.size());
        Self {
            vocab,
            arch,
            params: vec![R::zero(); n],
        }
    }

    /// Gaussian initialization with per-block scales chosen so pre-activations
    /// start near unit magnitude.
    pub fn init_random(vocab: Arc<Vocabulary>, arch: ModelArch, seed: u64) -> Self {
        let mut model = Self::zeroed(vocab, arch);
        let lay = Layout::new(&model.arch, model.vocab.size());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normal = move || -> f64 {
            // Box-Muller; u1 in (0,1] to avoid ln(0).
            let u1: f64 = 1.0 - rng.gen::<f64>();
            let u2: f64 = rng.gen();
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        };
        let emb_sigma = 0.5;
        let w1_sigma = 1.0 / ((lay.c * lay.e) as f64).sqrt();
        let w2_sigma = 1.0 / (lay.h as f64).sqrt();
        for i in lay.emb..lay.w1 {
            model.params[i] = R::from_f64_c(normal() * emb_sigma);
        }
        for i in lay.w1..lay.b1 {
            model.params[i] = R::from_f64_c(normal() * w1_sigma);
        }
        for i in lay.w2..lay.b2 {
            model.params[i] = R::from_f64_c(normal() * w2_sigma);
        }
        model
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn arch(&self) -> &ModelArch {
        &self.arch
    }

    pub fn params(&self) -> &[R] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [R] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Replace the full parameter vector (checkpoint loading).
    pub fn set_params(&mut self, params: Vec<R>) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::Checkpoint(format!(
                "parameter count mismatch: got {}, architecture needs {}",
                params.len(),
                self.params.len()
            )));
        }
        self.params = params;
        Ok(())
    }

    /// True when `other` shares this model's architecture and vocabulary.
    pub fn same_architecture(&self, other: &Self) -> bool {
        self.arch == other.arch && self.vocab.tokens() == other.vocab.tokens()
    }

    fn layout(&self) -> Layout {
        Layout::new(&self.arch, self.vocab.size())
    }

    fn check_ids(&self, ids: &[usize]) -> Result<()> {
        for &id in ids {
            if id >= self.vocab.size() {
                return Err(Error::Vocabulary(format!(
                    "token id {id} out of range for vocabulary of size {}",
                    self.vocab.size()
                )));
            }
        }
        Ok(())
    }

    /// Hidden activations and raw logits for a context of at most
    /// `context_window` tokens (right-aligned in the window).
    fn hidden_and_logits(&self, context: &[usize]) -> (Vec<R>, Vec<R>) {
        let lay = self.layout();
        debug_assert!(context.len() <= lay.c);
        let p = &self.params;
        // Pre-activations: b1 + sum over occupied slots of emb(token) . W1-block.
        let mut act: Vec<R> = p[lay.b1..lay.b1 + lay.h].to_vec();
        let first_slot = lay.c - context.len();
        for (i, &tok) in context.iter().enumerate() {
            let slot = first_slot + i;
            let emb_off = lay.emb + tok * lay.e;
            for e in 0..lay.e {
                let x = p[emb_off + e];
                if x == R::zero() {
                    continue;
                }
                let w1_row = lay.w1 + (slot * lay.e + e) * lay.h;
                for j in 0..lay.h {
                    act[j] += x * p[w1_row + j];
                }
            }
        }
        let hidden: Vec<R> = act.iter().map(|&a| a.tanh()).collect();
        let mut logits: Vec<R> = p[lay.b2..lay.b2 + lay.v].to_vec();
        for (j, &hj) in hidden.iter().enumerate() {
            if hj == R::zero() {
                continue;
            }
            let w2_row = lay.w2 + j * lay.v;
            for v in 0..lay.v {
                logits[v] += hj * p[w2_row + v];
            }
        }
        (hidden, logits)
    }

    /// Raw next-token logits for a context (used by sampling).
    pub(super) fn next_logits(&self, context: &[usize]) -> Result<Vec<R>> {
        self.check_ids(context)?;
        if context.len() > self.arch.context_window {
            return Err(Error::ContextExceeded {
                length: context.len(),
                window: self.arch.context_window,
            });
        }
        Ok(self.hidden_and_logits(context).1)
    }

    /// Next-token probability distribution over the vocabulary.
    pub fn next_token_distribution(&self, context: &[usize]) -> Result<Vec<R>> {
        let logits = self.next_logits(context)?;
        Ok(softmax(&logits))
    }

    /// Exact log-probability of each continuation token conditioned on all
    /// preceding tokens (prefix plus earlier continuation tokens).
    ///
    /// The combined sequence must fit in the context window.
    pub fn forward_logprobs(
        &self,
        prefix: &TokenSequence,
        continuation: &TokenSequence,
    ) -> Result<LogProbTrace<R>> {
        self.check_ids(prefix.ids())?;
        self.check_ids(continuation.ids())?;
        let total_len = prefix.len() + continuation.len();
        if total_len > self.arch.context_window {
            return Err(Error::ContextExceeded {
                length: total_len,
                window: self.arch.context_window,
            });
        }
        let mut ids = Vec::with_capacity(total_len);
        ids.extend_from_slice(prefix.ids());
        ids.extend_from_slice(continuation.ids());
        let mut logprobs = Vec::with_capacity(continuation.len());
        for pos in prefix.len()..total_len {
            let (_, logits) = self.hidden_and_logits(&ids[..pos]);
            let lp = log_softmax(&logits);
            logprobs.push(lp[ids[pos]]);
        }
        let sequence = TokenSequence::new(ids, &self.vocab)?;
        LogProbTrace::new(sequence, logprobs, prefix.len())
    }

    /// `sum_t log pi(a_t | context)` over the continuation, forward only.
    pub fn logprob_sum(&self, prefix: &TokenSequence, continuation: &TokenSequence) -> Result<R> {
        Ok(self.forward_logprobs(prefix, continuation)?.total())
    }

    /// `sum_t log pi(a_t | context)` and its exact gradient with respect to
    /// the flat parameter vector.
    pub fn logprob_sum_and_grad(
        &self,
        prefix: &TokenSequence,
        continuation: &TokenSequence,
    ) -> Result<(R, Vec<R>)> {
        let mut grad = vec![R::zero(); self.params.len()];
        let total = self.accumulate_logprob_grad(prefix, continuation, R::one(), &mut grad)?;
        Ok((total, grad))
    }

    /// Add `scale * d(sum_t log pi(a_t))/d theta` into `grad`; returns the
    /// unscaled log-probability sum. Shared by the SFT and DPO-family losses.
    pub(crate) fn accumulate_logprob_grad(
        &self,
        prefix: &TokenSequence,
        continuation: &TokenSequence,
        scale: R,
        grad: &mut [R],
    ) -> Result<R> {
        self.check_ids(prefix.ids())?;
        self.check_ids(continuation.ids())?;
        let total_len = prefix.len() + continuation.len();
        if total_len > self.arch.context_window {
            return Err(Error::ContextExceeded {
                length: total_len,
                window: self.arch.context_window,
            });
        }
        debug_assert_eq!(grad.len(), self.params.len());
        let lay = self.layout();
        let p = &self.params;
        let mut ids = Vec::with_capacity(total_len);
        ids.extend_from_slice(prefix.ids());
        ids.extend_from_slice(continuation.ids());

        let mut total = R::zero();
        for pos in prefix.len()..total_len {
            let context = &ids[..pos];
            let target = ids[pos];
            let (hidden, logits) = self.hidden_and_logits(context);
            let lp = log_softmax(&logits);
            total += lp[target];

            // d logp(target) / d logits = onehot(target) - softmax(logits)
            let mut dz: Vec<R> = lp.iter().map(|&l| -l.exp()).collect();
            dz[target] += R::one();

            // Output layer.
            let mut dh = vec![R::zero(); lay.h];
            for (v, &dzv) in dz.iter().enumerate() {
                if dzv == R::zero() {
                    continue;
                }
                grad[lay.b2 + v] += scale * dzv;
                for (j, &hj) in hidden.iter().enumerate() {
                    grad[lay.w2 + j * lay.v + v] += scale * hj * dzv;
                    dh[j] += p[lay.w2 + j * lay.v + v] * dzv;
                }
            }

            // Through tanh.
            let da: Vec<R> = dh
                .iter()
                .zip(hidden.iter())
                .map(|(&dhj, &hj)| dhj * (R::one() - hj * hj))
                .collect();
            for (j, &daj) in da.iter().enumerate() {
                grad[lay.b1 + j] += scale * daj;
            }

            // Input layer and embeddings, active slots only.
            let first_slot = lay.c - context.len();
            for (i, &tok) in context.iter().enumerate() {
                let slot = first_slot + i;
                let emb_off = lay.emb + tok * lay.e;
                for e in 0..lay.e {
                    let x = p[emb_off + e];
                    let row = lay.w1 + (slot * lay.e + e) * lay.h;
                    let mut dx = R::zero();
                    for (j, &daj) in da.iter().enumerate() {
                        grad[row + j] += scale * x * daj;
                        dx += p[row + j] * daj;
                    }
                    grad[emb_off + e] += scale * dx;
                }
            }
        }
        Ok(total)
    }
}

/// Numerically stable softmax.
pub(super) fn softmax<R: Real>(logits: &[R]) -> Vec<R> {
    let m = logits.iter().copied().fold(R::neg_infinity(), R::max);
    let exps: Vec<R> = logits.iter().map(|&z| (z - m).exp()).collect();
    let sum: R = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Numerically stable log-softmax; entries are guaranteed `<= 0`.
pub(super) fn log_softmax<R: Real>(logits: &[R]) -> Vec<R> {
    let m = logits.iter().copied().fold(R::neg_infinity(), R::max);
    let lse: R = logits.iter().map(|&z| (z - m).exp()).sum::<R>().ln() + m;
    logits.iter().map(|&z| z - lse).collect()
}
