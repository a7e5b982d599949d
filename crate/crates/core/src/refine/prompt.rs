//! Blinded judgment prompt templating.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::triple::LabeledTriple;

/// Which presentation slot an answer occupies (or which one a judge chose).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnswerSlot {
    Answer1,
    Answer2,
}

impl AnswerSlot {
    pub fn number(self) -> u8 {
        match self {
            Self::Answer1 => 1,
            Self::Answer2 => 2,
        }
    }
}

impl std::fmt::Display for AnswerSlot {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Answer {}", self.number())
    }
}

/// Instantiate the judgment template for a triple.
///
/// The accepted answer lands in slot 1 or slot 2 with equal probability under
/// `order_seed`; the returned slot says where it went so the verdict can be
/// checked later. The prompt itself carries no trace of the label.
pub fn build_judgment_prompt(triple: &LabeledTriple, order_seed: u64) -> (String, AnswerSlot) {
    let mut rng = ChaCha8Rng::seed_from_u64(order_seed);
    let accepted_first: bool = rng.gen();
    let (first, second, a_plus_position) = if accepted_first {
        (&triple.accepted, &triple.rejected, AnswerSlot::Answer1)
    } else {
        (&triple.rejected, &triple.accepted, AnswerSlot::Answer2)
    };
    let prompt = format!(
        "Question: {} Answer 1: {} Answer 2: {} Which is better?",
        triple.question, first, second
    );
    (prompt, a_plus_position)
}
