//! The loss layer: grade values, pair weights, implicit rewards, and the
//! DPO / multi-level DPO losses with exact gradients.
//!
//! The reward of an answer is the implicit DPO reward
//! `beta * (log pi_policy(a|q) - log pi_ref(a|q))`. The multi-level loss
//! weights each pair by `w = ln(1 + exp(alpha * |g+ - g-|))`; at `alpha = 0`
//! every weight collapses to `ln 2` and the loss reduces to `ln 2` times the
//! plain DPO loss, gradient included.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lm::{PolicyModel, TokenSequence};
use crate::refine::PreferenceLevel;
use crate::scalar::{sigmoid, softplus, Real};

/// Grade values per level plus the weight sensitivity `alpha` and the
/// implicit-reward scale `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradeConfig {
    pub strong_accept: i32,
    pub weak_accept: i32,
    pub weak_reject: i32,
    pub strong_reject: i32,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for GradeConfig {
    fn default() -> Self {
        Self {
            strong_accept: 2,
            weak_accept: 1,
            weak_reject: -1,
            strong_reject: -2,
            alpha: 1.0,
            beta: 0.1,
        }
    }
}

impl GradeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.strong_accept > self.weak_accept
            && self.weak_accept > 0
            && 0 > self.weak_reject
            && self.weak_reject > self.strong_reject)
        {
            return Err(Error::InvalidArgument(format!(
                "grades must satisfy strong_accept > weak_accept > 0 > weak_reject > strong_reject, got ({}, {}, {}, {})",
                self.strong_accept, self.weak_accept, self.weak_reject, self.strong_reject
            )));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if !(self.beta >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "beta must be >= 0, got {}",
                self.beta
            )));
        }
        Ok(())
    }

    /// Largest possible grade gap, the bound in `w <= ln(1 + e^(alpha*gap))`.
    pub fn max_gap(&self) -> i32 {
        self.strong_accept - self.strong_reject
    }
}

/// Integer grade of a preference level.
pub fn grade_value(level: PreferenceLevel, cfg: &GradeConfig) -> i32 {
    match level {
        PreferenceLevel::StrongAccept => cfg.strong_accept,
        PreferenceLevel::WeakAccept => cfg.weak_accept,
        PreferenceLevel::WeakReject => cfg.weak_reject,
        PreferenceLevel::StrongReject => cfg.strong_reject,
    }
}

/// Pair weight `ln(1 + exp(alpha * |g_plus - g_minus|))`; strictly increasing
/// in the gap for positive `alpha`, and `ln 2` for any grades at `alpha = 0`.
pub fn weight<R: Real>(g_plus: R, g_minus: R, alpha: R) -> R {
    softplus(alpha * (g_plus - g_minus).abs())
}

/// One preference pair at the token level. Each side carries its own query
/// tokens because answer order is randomized per sample, so the two
/// judgments of a pair may have been generated under differently ordered
/// prompts.
#[derive(Debug, Clone, PartialEq)]
pub struct PairExample {
    pub pos_query: TokenSequence,
    pub pos_answer: TokenSequence,
    pub neg_query: TokenSequence,
    pub neg_answer: TokenSequence,
    pub g_plus: i32,
    pub g_minus: i32,
}

/// Implicit DPO reward of `answer` given `query`:
/// `beta * (log pi_policy(answer|query) - log pi_ref(answer|query))`.
pub fn implicit_reward<R: Real>(
    policy: &PolicyModel<R>,
    reference: &PolicyModel<R>,
    query: &TokenSequence,
    answer: &TokenSequence,
    beta: f64,
) -> Result<R> {
    check_reference(policy, reference)?;
    let lp_policy = policy.logprob_sum(query, answer)?;
    let lp_reference = reference.logprob_sum(query, answer)?;
    Ok(R::from_f64_c(beta) * (lp_policy - lp_reference))
}

fn check_reference<R: Real>(policy: &PolicyModel<R>, reference: &PolicyModel<R>) -> Result<()> {
    if !policy.same_architecture(reference) {
        return Err(Error::ArchitectureMismatch(
            "policy and reference must share architecture and vocabulary".to_string(),
        ));
    }
    Ok(())
}

/// Reward margin `r(q, a+) - r(q, a-)` of one pair.
fn pair_margin<R: Real>(
    policy: &PolicyModel<R>,
    reference: &PolicyModel<R>,
    pair: &PairExample,
    beta: R,
) -> Result<R> {
    let pos = policy.logprob_sum(&pair.pos_query, &pair.pos_answer)?
        - reference.logprob_sum(&pair.pos_query, &pair.pos_answer)?;
    let neg = policy.logprob_sum(&pair.neg_query, &pair.neg_answer)?
        - reference.logprob_sum(&pair.neg_query, &pair.neg_answer)?;
    Ok(beta * (pos - neg))
}

fn weighted_loss<R: Real>(
    policy: &PolicyModel<R>,
    reference: &PolicyModel<R>,
    batch: &[PairExample],
    cfg: &GradeConfig,
    weighted: bool,
) -> Result<R> {
    check_reference(policy, reference)?;
    cfg.validate()?;
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty pair batch".to_string()));
    }
    let beta = R::from_f64_c(cfg.beta);
    let mut total = R::zero();
    for pair in batch {
        let margin = pair_margin(policy, reference, pair, beta)?;
        let w = if weighted {
            weight(
                R::from_f64_c(f64::from(pair.g_plus)),
                R::from_f64_c(f64::from(pair.g_minus)),
                R::from_f64_c(cfg.alpha),
            )
        } else {
            R::one()
        };
        // -log sigmoid(margin) = softplus(-margin), strictly positive.
        total += w * softplus(-margin);
    }
    Ok(total / R::from_f64_c(batch.len() as f64))
}

fn weighted_loss_and_grad<R: Real>(
    policy: &PolicyModel<R>,
    reference: &PolicyModel<R>,
    batch: &[PairExample],
    cfg: &GradeConfig,
    weighted: bool,
) -> Result<(R, Vec<R>)> {
    check_reference(policy, reference)?;
    cfg.validate()?;
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty pair batch".to_string()));
    }
    let beta = R::from_f64_c(cfg.beta);
    let n = R::from_f64_c(batch.len() as f64);
    let mut total = R::zero();
    let mut grad = vec![R::zero(); policy.param_count()];
    let mut pos_grad = vec![R::zero(); policy.param_count()];
    let mut neg_grad = vec![R::zero(); policy.param_count()];
    for pair in batch {
        for g in pos_grad.iter_mut() {
            *g = R::zero();
        }
        for g in neg_grad.iter_mut() {
            *g = R::zero();
        }
        let lp_pos =
            policy.accumulate_logprob_grad(&pair.pos_query, &pair.pos_answer, R::one(), &mut pos_grad)?;
        let lp_neg =
            policy.accumulate_logprob_grad(&pair.neg_query, &pair.neg_answer, R::one(), &mut neg_grad)?;
        let ref_pos = reference.logprob_sum(&pair.pos_query, &pair.pos_answer)?;
        let ref_neg = reference.logprob_sum(&pair.neg_query, &pair.neg_answer)?;
        let margin = beta * ((lp_pos - ref_pos) - (lp_neg - ref_neg));
        let w = if weighted {
            weight(
                R::from_f64_c(f64::from(pair.g_plus)),
                R::from_f64_c(f64::from(pair.g_minus)),
                R::from_f64_c(cfg.alpha),
            )
        } else {
            R::one()
        };
        total += w * softplus(-margin);
        // d/d theta [w * softplus(-margin)] = -w * sigmoid(-margin) * beta
        //   * (d lp_pos/d theta - d lp_neg/d theta)
        let coeff = -w * sigmoid(-margin) * beta / n;
        for ((g, &gp), &gn) in grad.iter_mut().zip(pos_grad.iter()).zip(neg_grad.iter()) {
            *g += coeff * (gp - gn);
        }
    }
    Ok((total / n, grad))
}

/// Multi-level DPO loss: mean over pairs of
/// `-w(g+, g-) * log sigmoid(r(q,a+) - r(q,a-))`, forward only.
pub fn mdpo_loss<R: Real>(
    policy: &PolicyModel<R>,
    reference: &PolicyModel<R>,
    batch: &[PairExample],
    cfg: &GradeConfig,
) -> Result<R> {
    weighted_loss(policy, reference, batch, cfg, true)
}

/// Multi-level DPO loss and its exact gradient over policy parameters.
pub fn mdpo_loss_and_grad<R: Real>(
    policy: &PolicyModel<R>,
    reference: &PolicyModel<R>,
    batch: &[PairExample],
    cfg: &GradeConfig,
) -> Result<(R, Vec<R>)> {
    weighted_loss_and_grad(policy, reference, batch, cfg, true)
}

/// Plain DPO loss (weight identically 1), forward only.
pub fn dpo_loss<R: Real>(
    policy: &PolicyModel<R>,
    reference: &PolicyModel<R>,
    batch: &[PairExample],
    cfg: &GradeConfig,
) -> Result<R> {
    weighted_loss(policy, reference, batch, cfg, false)
}

/// Plain DPO loss and gradient.
pub fn dpo_loss_and_grad<R: Real>(
    policy: &PolicyModel<R>,
    reference: &PolicyModel<R>,
    batch: &[PairExample],
    cfg: &GradeConfig,
) -> Result<(R, Vec<R>)> {
    weighted_loss_and_grad(policy, reference, batch, cfg, false)
}
