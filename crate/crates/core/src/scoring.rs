//! Perplexity and the normalized preference score.
//!
//! Perplexity is the exponential of the mean negative log-likelihood over a
//! trace's scored tokens (natural logarithms throughout). The preference
//! score maps it into (0, 1) via `exp(-PPL / tau)`: lower perplexity, higher
//! score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lm::LogProbTrace;
use crate::scalar::Real;

/// Normalization temperature for the preference score.
///
/// The default of 20 maps the toy-model perplexity range [1, 50] onto scores
/// spanning roughly (0.08, 0.95].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PplScoreConfig {
    pub tau: f64,
}

impl Default for PplScoreConfig {
    fn default() -> Self {
        Self { tau: 20.0 }
    }
}

impl PplScoreConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        Ok(())
    }
}

/// Perplexity of a trace: `exp(-(1/T) * sum log p_t)` over the T scored
/// tokens. At least one scored token is required; the result is always >= 1.
pub fn perplexity<R: Real>(trace: &LogProbTrace<R>) -> Result<R> {
    perplexity_of_logprobs(trace.per_token_logprob())
}

/// Perplexity from a bare list of per-token log-probabilities.
pub fn perplexity_of_logprobs<R: Real>(logprobs: &[R]) -> Result<R> {
    if logprobs.is_empty() {
        return Err(Error::InvalidArgument(
            "perplexity needs at least one scored token".to_string(),
        ));
    }
    let total: R = logprobs.iter().copied().sum();
    let mean = total / R::from_f64_c(logprobs.len() as f64);
    Ok((-mean).exp())
}

/// Normalized preference score `exp(-ppl / tau)`, strictly decreasing in the
/// perplexity. Rejects `ppl < 1`, which no valid probability trace can
/// produce.
pub fn ppl_score<R: Real>(ppl: R, cfg: &PplScoreConfig) -> Result<R> {
    cfg.validate()?;
    if ppl < R::one() {
        return Err(Error::InvalidArgument(format!(
            "perplexity must be >= 1, got {:?}",
            ppl
        )));
    }
    Ok((-ppl / R::from_f64_c(cfg.tau)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::{ModelArch, PolicyModel, TokenSequence, Vocabulary};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn uniform_model_ppl_equals_vocab_size() {
        let tokens: Vec<String> = (0..16).map(|i| format!("t{i}")).collect();
        let vocab = Vocabulary::new(tokens, 0).unwrap();
        let model = PolicyModel::<f64>::zeroed(vocab.clone(), ModelArch::new(8, 2, 3).unwrap());
        let cont = vocab.sequence(vec![3, 7, 11]).unwrap();
        let trace = model
            .forward_logprobs(&TokenSequence::empty(), &cont)
            .unwrap();
        assert_abs_diff_eq!(perplexity(&trace).unwrap(), 16.0, epsilon = 1e-9);
    }

    #[test]
    fn half_and_eighth_probabilities_give_ppl_four() {
        let logprobs = [0.5f64.ln(), 0.125f64.ln()];
        assert_abs_diff_eq!(
            perplexity_of_logprobs(&logprobs).unwrap(),
            4.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn certain_tokens_give_ppl_one() {
        assert_abs_diff_eq!(
            perplexity_of_logprobs(&[0.0f64, 0.0, 0.0]).unwrap(),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn empty_trace_is_an_error() {
        assert!(perplexity_of_logprobs::<f64>(&[]).is_err());
    }

    #[test]
    fn score_fixtures() {
        let cfg = PplScoreConfig { tau: 20.0 };
        assert_abs_diff_eq!(
            ppl_score(20.0, &cfg).unwrap(),
            (-1.0f64).exp(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            ppl_score(1.0, &cfg).unwrap(),
            (-0.05f64).exp(),
            epsilon = 1e-12
        );
        // Limit: enormous perplexity scores to ~0.
        assert!(ppl_score(1e9, &cfg).unwrap() < 1e-300);
        assert!(ppl_score(0.5, &cfg).is_err());
        assert!(ppl_score(2.0, &PplScoreConfig { tau: 0.0 }).is_err());
    }

    #[test]
    fn streaming_mean_matches_batch_formula() {
        let logprobs: Vec<f64> = (1..=9).map(|i| -(i as f64) / 7.0).collect();
        let mut running = 0.0;
        for (n, &lp) in logprobs.iter().enumerate() {
            running += (-lp - running) / (n as f64 + 1.0);
        }
        let streaming = running.exp();
        let batch = perplexity_of_logprobs(&logprobs).unwrap();
        assert_abs_diff_eq!(streaming, batch, epsilon = 1e-12);
    }

    proptest! {
        /// Monotonicity: lower perplexity always scores higher, for any tau.
        #[test]
        fn score_is_strictly_decreasing(
            a in 1.0f64..500.0,
            delta in 1e-6f64..100.0,
            tau in 0.1f64..100.0,
        ) {
            let cfg = PplScoreConfig { tau };
            let low = ppl_score(a, &cfg).unwrap();
            let high = ppl_score(a + delta, &cfg).unwrap();
            prop_assert!(low > high);
        }

        /// Perplexity depends only on the multiset of log-probs and the count:
        /// permuting the trace leaves it unchanged.
        #[test]
        fn rechunking_invariance(
            mut logprobs in proptest::collection::vec(-8.0f64..=0.0, 1..20),
            rot in 0usize..20,
        ) {
            let base = perplexity_of_logprobs(&logprobs).unwrap();
            let r = rot % logprobs.len();
            logprobs.rotate_left(r);
            let rotated = perplexity_of_logprobs(&logprobs).unwrap();
            prop_assert!((base - rotated).abs() <= 1e-9 * base.abs().max(1.0));
        }

        /// Any valid trace has perplexity >= 1 and score in (0, 1).
        #[test]
        fn ranges_hold(logprobs in proptest::collection::vec(-12.0f64..=0.0, 1..20)) {
            let ppl = perplexity_of_logprobs(&logprobs).unwrap();
            prop_assert!(ppl >= 1.0 - 1e-12);
            let score = ppl_score(ppl.max(1.0), &PplScoreConfig::default()).unwrap();
            prop_assert!(score > 0.0 && score < 1.0);
        }
    }
}
