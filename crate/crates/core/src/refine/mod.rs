//! Preference refinement: turn one labeled triple into many graded judgment
//! pairs.
//!
//! For each labeled `(question, accepted, rejected)` triple the engine builds
//! blinded judgment prompts (answer order randomized per sample, the label
//! never shown), samples k CoT judgments under jittered temperatures and
//! derived seeds, parses the JSON verdicts, scores each judgment's
//! perplexity, classifies the four preference levels against a score
//! threshold, and takes the Cartesian product of accepted and rejected
//! judgments to form weighted training pairs.

mod judgment;
mod levels;
mod pairs;
mod parse;
mod prompt;
mod triple;

pub use judgment::{
    sample_judgments, sample_judgments_with_retries, score_and_classify, Judgment,
    JudgmentProvider, ParseFailure, ProviderKind, ProviderOutput, ToyLmProvider,
    DEFAULT_PARSE_RETRIES,
};
pub use levels::{classify, PreferenceLevel};
pub use pairs::{build_pairs, GradedPair};
pub use parse::parse_judgment;
pub use prompt::{build_judgment_prompt, AnswerSlot};
pub use triple::LabeledTriple;
