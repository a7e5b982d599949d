//! Tiny autoregressive language model with exact log-probability accounting.
//!
//! The architecture is deliberately small: token embeddings are concatenated
//! over a fixed context window (right-aligned, zero-padded on the left), fed
//! through one tanh hidden layer, and projected to vocabulary logits. That is
//! the smallest shape with trainable conditional structure and cheap exact
//! gradients; every gradient in this module is hand-derived and checked
//! against central finite differences in the tests.

mod checkpoint;
mod model;
mod sample;
mod sft;
mod vocab;

pub use model::{LogProbTrace, ModelArch, PolicyModel};
pub use sample::SamplingConfig;
pub use sft::{sft_loss, sft_loss_and_grad};
pub use vocab::{TokenSequence, Vocabulary};
