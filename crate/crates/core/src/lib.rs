//! Desk-scale training stack for a generative preference judge.
//!
//! The crate covers the full loop:
//!
//! 1. [`lm`] — a tiny fixed-context feed-forward language model with exact
//!    log-probability accounting, seeded top-k/top-p sampling, and hand-derived
//!    gradients (verified against finite differences).
//! 2. [`scoring`] — perplexity over a generated continuation and its
//!    normalized preference score `exp(-PPL/tau)`.
//! 3. [`refine`] — judgment prompt templating, multi-sample CoT judgment
//!    generation, JSON verdict parsing, four-level classification, and
//!    Cartesian preference-pair construction.
//! 4. [`mdpo`] — grade values, the pair weight `ln(1 + exp(alpha*|g+ - g-|))`,
//!    implicit rewards, and the DPO / multi-level DPO losses with exact
//!    gradients.
//! 5. [`train`] — AdamW, warmup + cosine schedules, the two-stage training
//!    loops, judge evaluation, and the ablation matrix.
//! 6. [`consistency`] — a synthetic Bradley-Terry world that empirically
//!    checks weighted maximum-likelihood consistency.
//!
//! All numeric kernels are generic over the scalar type via [`scalar::Real`];
//! the aliases below pin the `f64` instantiation used by the CLI pipeline.

pub mod consistency;
pub mod error;
pub mod lm;
pub mod mdpo;
pub mod refine;
pub mod scalar;
pub mod scoring;
pub mod seeds;
pub mod train;

pub use error::{Error, ParseError, Result};
pub use scalar::Real;

/// Scalar type used by the CLI pipeline.
pub type Scalar = f64;

/// `f64` policy model, the pipeline default.
pub type Model = lm::PolicyModel<Scalar>;

/// `f64` log-probability trace.
pub type Trace = lm::LogProbTrace<Scalar>;

/// `f64` preference-pair example consumed by the loss layer.
pub type Pair = mdpo::PairExample;
