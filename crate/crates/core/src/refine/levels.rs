//! Four-level judgment classification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Preference level of a judgment: the cross of verdict correctness with the
/// preference score versus the threshold. Ordered `StrongReject < WeakReject
/// < WeakAccept < StrongAccept`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum PreferenceLevel {
    StrongReject,
    WeakReject,
    WeakAccept,
    StrongAccept,
}

impl PreferenceLevel {
    /// Accepted judgments feed the positive side of pair construction.
    pub fn is_accept(self) -> bool {
        matches!(self, Self::WeakAccept | Self::StrongAccept)
    }

    pub const ALL: [Self; 4] = [
        Self::StrongReject,
        Self::WeakReject,
        Self::WeakAccept,
        Self::StrongAccept,
    ];
}

impl std::fmt::Display for PreferenceLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::StrongAccept => "strong_accept",
            Self::WeakAccept => "weak_accept",
            Self::WeakReject => "weak_reject",
            Self::StrongReject => "strong_reject",
        };
        f.write_str(s)
    }
}

/// Classify a scored judgment. A score strictly above the threshold is
/// "strong"; the boundary `score == threshold_p` classifies as weak.
pub fn classify(score: f64, correct: bool, threshold_p: f64) -> Result<PreferenceLevel> {
    if !(score > 0.0 && score < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "score must be in (0, 1), got {score}"
        )));
    }
    if !(threshold_p > 0.0 && threshold_p < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold_p must be in (0, 1), got {threshold_p}"
        )));
    }
    Ok(match (score > threshold_p, correct) {
        (true, true) => PreferenceLevel::StrongAccept,
        (false, true) => PreferenceLevel::WeakAccept,
        (false, false) => PreferenceLevel::WeakReject,
        (true, false) => PreferenceLevel::StrongReject,
    })
}
