//! Labeled preference triples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One record of the preference dataset: a question plus a preferred and a
/// dispreferred answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledTriple {
    pub id: String,
    pub question: String,
    pub accepted: String,
    pub rejected: String,
}

impl LabeledTriple {
    pub fn new(
        id: impl Into<String>,
        question: impl Into<String>,
        accepted: impl Into<String>,
        rejected: impl Into<String>,
    ) -> Result<Self> {
        let t = Self {
            id: id.into(),
            question: question.into(),
            accepted: accepted.into(),
            rejected: rejected.into(),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty()
            || self.question.is_empty()
            || self.accepted.is_empty()
            || self.rejected.is_empty()
        {
            return Err(Error::InvalidArgument(
                "triple fields must be non-empty".to_string(),
            ));
        }
        if self.accepted == self.rejected {
            return Err(Error::InvalidArgument(format!(
                "triple {}: accepted and rejected answers are identical",
                self.id
            )));
        }
        Ok(())
    }
}
