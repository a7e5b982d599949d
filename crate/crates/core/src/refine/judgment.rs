//! Judgment sampling: k blinded CoT verdicts per triple.

use serde::{Deserialize, Serialize};

use crate::error::{Error, ParseError, Result};
use crate::lm::{PolicyModel, SamplingConfig};
use crate::scalar::Real;
use crate::scoring::{perplexity_of_logprobs, ppl_score, PplScoreConfig};
use crate::seeds;

use super::levels::{classify, PreferenceLevel};
use super::parse::parse_judgment;
use super::prompt::{build_judgment_prompt, AnswerSlot};
use super::triple::LabeledTriple;

/// Parse failures are retried this many times with derived seeds before the
/// slot is dropped.
pub const DEFAULT_PARSE_RETRIES: u32 = 2;

/// Who produced a judgment's text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Internal,
    External,
}

/// Raw provider output: generation text plus, when available, the per-token
/// log-probabilities of the generated continuation.
#[derive(Debug, Clone)]
pub struct ProviderOutput {
    pub text: String,
    pub token_logprobs: Option<Vec<f64>>,
}

/// A judgment generator: from prompt text and a sampling config to raw text
/// (with optional per-token log-probs).
pub trait JudgmentProvider {
    fn generate(&self, prompt: &str, cfg: &SamplingConfig) -> Result<ProviderOutput>;
    fn kind(&self) -> ProviderKind;
}

impl<F> JudgmentProvider for F
where
    F: Fn(&str, &SamplingConfig) -> Result<ProviderOutput>,
{
    fn generate(&self, prompt: &str, cfg: &SamplingConfig) -> Result<ProviderOutput> {
        self(prompt, cfg)
    }

    fn kind(&self) -> ProviderKind {
        ProviderKind::Internal
    }
}

/// The internal provider: sample from a policy model. Prompts are tokenized
/// against the model's vocabulary; the returned log-probs are the post-filter
/// probabilities recorded during sampling (including the `<eos>` step).
pub struct ToyLmProvider<'a, R: Real> {
    model: &'a PolicyModel<R>,
}

impl<'a, R: Real> ToyLmProvider<'a, R> {
    pub fn new(model: &'a PolicyModel<R>) -> Self {
        Self { model }
    }

    pub fn model(&self) -> &PolicyModel<R> {
        self.model
    }
}

impl<R: Real> JudgmentProvider for ToyLmProvider<'_, R> {
    fn generate(&self, prompt: &str, cfg: &SamplingConfig) -> Result<ProviderOutput> {
        let ids = self.model.vocab().tokenize(prompt)?;
        let prefix = self.model.vocab().sequence(ids)?;
        let trace = crate::lm::sample::<R>(self.model, &prefix, cfg)?;
        let text = self.model.vocab().detokenize(trace.continuation_ids())?;
        let logprobs = trace
            .per_token_logprob()
            .iter()
            .map(|&lp| lp.to_f64_c())
            .collect();
        Ok(ProviderOutput {
            text,
            token_logprobs: Some(logprobs),
        })
    }

    fn kind(&self) -> ProviderKind {
        ProviderKind::Internal
    }
}

/// One sampled CoT verdict, scored and classified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Judgment {
    pub triple_id: String,
    pub cot: String,
    pub chosen: AnswerSlot,
    pub ppl: f64,
    pub score: f64,
    pub correct: bool,
    pub level: PreferenceLevel,
    pub provider: ProviderKind,
    pub seed: u64,
}

impl Judgment {
    /// Canonical JSON rendering of this judgment, used as the answer text in
    /// preference-pair training. For well-formed internal generations this is
    /// token-identical to the raw generation.
    pub fn canonical_text(&self) -> String {
        format!(
            "{{\"CoT\": \" {} \" , \"Chosen answer\": \"Answer {}\" }}",
            self.cot.split_whitespace().collect::<Vec<_>>().join(" "),
            self.chosen.number()
        )
    }

    /// The prompt this judgment was sampled under (reconstructed from its
    /// slot seed).
    pub fn prompt_for(&self, triple: &LabeledTriple) -> (String, AnswerSlot) {
        build_judgment_prompt(triple, seeds::derive(self.seed, "order", 0))
    }
}

/// A judgment slot whose every parse attempt failed.
#[derive(Debug, Clone)]
pub struct ParseFailure {
    pub triple_id: String,
    pub seed: u64,
    pub attempts: u32,
    pub last_error: ParseError,
}

/// Score, check, and classify one parsed generation.
pub fn score_and_classify(
    triple_id: &str,
    cot: String,
    chosen: AnswerSlot,
    token_logprobs: &[f64],
    a_plus_position: AnswerSlot,
    scoring_cfg: &PplScoreConfig,
    threshold_p: f64,
    provider: ProviderKind,
    seed: u64,
) -> Result<Judgment> {
    let ppl = perplexity_of_logprobs(token_logprobs)?;
    let score = ppl_score(ppl, scoring_cfg)?;
    let correct = chosen == a_plus_position;
    let level = classify(score, correct, threshold_p)?;
    Ok(Judgment {
        triple_id: triple_id.to_string(),
        cot,
        chosen,
        ppl,
        score,
        correct,
        level,
        provider: provider,
        seed,
    })
}

/// Temperature for sample `i` of `k`: the base temperature spread
/// deterministically over `[0.8, 1.2] x base`.
pub(crate) fn jittered_temperature(base: f64, i: usize, k: usize) -> f64 {
    if k <= 1 {
        base
    } else {
        base * (0.8 + 0.4 * i as f64 / (k - 1) as f64)
    }
}

/// Sample `k` judgments for a triple with the default parse-retry budget.
pub fn sample_judgments(
    triple: &LabeledTriple,
    k: usize,
    provider: &dyn JudgmentProvider,
    base_cfg: &SamplingConfig,
    scoring_cfg: &PplScoreConfig,
    threshold_p: f64,
) -> Result<(Vec<Judgment>, Vec<ParseFailure>)> {
    sample_judgments_with_retries(
        triple,
        k,
        provider,
        base_cfg,
        scoring_cfg,
        threshold_p,
        DEFAULT_PARSE_RETRIES,
    )
}

/// Sample `k` judgments for a triple.
///
/// Sample `i` uses seed `base_cfg.seed + i`, a temperature jittered from `i`,
/// and its own answer presentation order. Unparseable generations are retried
/// `retries` times under derived seeds, then recorded as failures and
/// excluded from pairing. Provider failures abort with triple context.
pub fn sample_judgments_with_retries(
    triple: &LabeledTriple,
    k: usize,
    provider: &dyn JudgmentProvider,
    base_cfg: &SamplingConfig,
    scoring_cfg: &PplScoreConfig,
    threshold_p: f64,
    retries: u32,
) -> Result<(Vec<Judgment>, Vec<ParseFailure>)> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".to_string()));
    }
    triple.validate()?;
    base_cfg.validate()?;
    scoring_cfg.validate()?;

    let mut judgments = Vec::with_capacity(k);
    let mut failures = Vec::new();
    for i in 0..k {
        let slot_seed = base_cfg.seed.wrapping_add(i as u64);
        let order_seed = seeds::derive(slot_seed, "order", 0);
        let (prompt, a_plus_position) = build_judgment_prompt(triple, order_seed);
        let temperature = jittered_temperature(base_cfg.temperature, i, k);

        let mut last_error: Option<ParseError> = None;
        let mut attempts = 0u32;
        for attempt in 0..=retries {
            let gen_seed = if attempt == 0 {
                slot_seed
            } else {
                seeds::derive(slot_seed, "retry", u64::from(attempt))
            };
            let cfg = SamplingConfig {
                temperature,
                seed: gen_seed,
                ..base_cfg.clone()
            };
            let output = provider
                .generate(&prompt, &cfg)
                .map_err(|e| Error::Provider {
                    triple_id: triple.id.clone(),
                    message: e.to_string(),
                })?;
            attempts += 1;
            match parse_judgment(&output.text) {
                Ok((cot, chosen)) => {
                    let logprobs = output.token_logprobs.ok_or_else(|| Error::Provider {
                        triple_id: triple.id.clone(),
                        message: "provider returned no token log-probabilities".to_string(),
                    })?;
                    judgments.push(score_and_classify(
                        &triple.id,
                        cot,
                        chosen,
                        &logprobs,
                        a_plus_position,
                        scoring_cfg,
                        threshold_p,
                        provider.kind(),
                        slot_seed,
                    )?);
                    last_error = None;
                    break;
                }
                Err(e) => last_error = Some(e),
            }
        }
        if let Some(err) = last_error {
            failures.push(ParseFailure {
                triple_id: triple.id.clone(),
                seed: slot_seed,
                attempts,
                last_error: err,
            });
        }
    }
    Ok((judgments, failures))
}
