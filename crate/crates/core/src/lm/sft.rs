//! Supervised fine-tuning loss: mean over the batch of the per-sequence sum
//! of `-log pi(a_t | s_t)`, scored over continuation tokens only (prompt
//! tokens condition but do not contribute loss).

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::model::PolicyModel;
use super::vocab::TokenSequence;

/// Forward-only SFT loss over a batch of `(prefix, continuation)` pairs.
pub fn sft_loss<R: Real>(
    model: &PolicyModel<R>,
    batch: &[(TokenSequence, TokenSequence)],
) -> Result<R> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty SFT batch".to_string()));
    }
    let mut total = R::zero();
    for (prefix, continuation) in batch {
        total -= model.logprob_sum(prefix, continuation)?;
    }
    Ok(total / R::from_f64_c(batch.len() as f64))
}

/// SFT loss and its exact gradient with respect to the flat parameters.
pub fn sft_loss_and_grad<R: Real>(
    model: &PolicyModel<R>,
    batch: &[(TokenSequence, TokenSequence)],
) -> Result<(R, Vec<R>)> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty SFT batch".to_string()));
    }
    let scale = -R::one() / R::from_f64_c(batch.len() as f64);
    let mut grad = vec![R::zero(); model.param_count()];
    let mut total = R::zero();
    for (prefix, continuation) in batch {
        total -= model.accumulate_logprob_grad(prefix, continuation, scale, &mut grad)?;
    }
    Ok((total / R::from_f64_c(batch.len() as f64), grad))
}
