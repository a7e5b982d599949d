//! Cartesian preference-pair construction.

use serde::{Deserialize, Serialize};

use crate::mdpo::{grade_value, weight, GradeConfig};

use super::judgment::Judgment;

/// An (accepted, rejected) judgment pair with grades and its loss weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradedPair {
    pub positive: Judgment,
    pub negative: Judgment,
    pub g_plus: i32,
    pub g_minus: i32,
    pub weight: f64,
}

/// Build all pairs from the Cartesian product of accepted and rejected
/// judgments, grouped by triple (a pair never crosses triples).
///
/// Order is deterministic: triples in first-appearance order, then positive
/// index major, negative index minor. An empty side yields no pairs.
pub fn build_pairs(judgments: &[Judgment], cfg: &GradeConfig) -> Vec<GradedPair> {
    let mut triple_order: Vec<&str> = Vec::new();
    for j in judgments {
        if !triple_order.contains(&j.triple_id.as_str()) {
            triple_order.push(&j.triple_id);
        }
    }
    let mut pairs = Vec::new();
    for tid in triple_order {
        let positives: Vec<&Judgment> = judgments
            .iter()
            .filter(|j| j.triple_id == tid && j.level.is_accept())
            .collect();
        let negatives: Vec<&Judgment> = judgments
            .iter()
            .filter(|j| j.triple_id == tid && !j.level.is_accept())
            .collect();
        for pos in &positives {
            for neg in &negatives {
                let g_plus = grade_value(pos.level, cfg);
                let g_minus = grade_value(neg.level, cfg);
                pairs.push(GradedPair {
                    positive: (*pos).clone(),
                    negative: (*neg).clone(),
                    g_plus,
                    g_minus,
                    weight: weight(f64::from(g_plus), f64::from(g_minus), cfg.alpha),
                });
            }
        }
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refine::{AnswerSlot, PreferenceLevel, ProviderKind};
    use proptest::prelude::*;

    fn judgment(triple_id: &str, level: PreferenceLevel, seed: u64) -> Judgment {
        Judgment {
            triple_id: triple_id.to_string(),
            cot: "c".to_string(),
            chosen: AnswerSlot::Answer1,
            ppl: 2.0,
            score: if matches!(level, PreferenceLevel::StrongAccept | PreferenceLevel::StrongReject)
            {
                0.9
            } else {
                0.3
            },
            correct: level.is_accept(),
            level,
            provider: ProviderKind::Internal,
            seed,
        }
    }

    #[test]
    fn two_accepted_three_rejected_make_six_pairs() {
        use PreferenceLevel::*;
        let js = vec![
            judgment("t", StrongAccept, 0),
            judgment("t", WeakAccept, 1),
            judgment("t", WeakReject, 2),
            judgment("t", StrongReject, 3),
            judgment("t", WeakReject, 4),
        ];
        let pairs = build_pairs(&js, &GradeConfig::default());
        assert_eq!(pairs.len(), 6);
        // Positive-major order: first two pairs share the first positive.
        assert_eq!(pairs[0].positive.seed, 0);
        assert_eq!(pairs[1].positive.seed, 0);
        assert_eq!(pairs[0].negative.seed, 2);
        assert_eq!(pairs[1].negative.seed, 3);
        for p in &pairs {
            assert!(p.g_plus > 0 && p.g_minus < 0);
            assert!(p.weight > 0.0);
            assert_eq!(p.positive.triple_id, p.negative.triple_id);
        }
    }

    #[test]
    fn one_sided_sets_make_no_pairs() {
        use PreferenceLevel::*;
        let all_rejected: Vec<Judgment> = (0..4)
            .map(|i| judgment("t", if i % 2 == 0 { WeakReject } else { StrongReject }, i))
            .collect();
        assert!(build_pairs(&all_rejected, &GradeConfig::default()).is_empty());
        assert!(build_pairs(&[], &GradeConfig::default()).is_empty());
    }

    #[test]
    fn three_by_three_makes_nine() {
        use PreferenceLevel::*;
        let mut js = Vec::new();
        for i in 0..3 {
            js.push(judgment("t", StrongAccept, i));
        }
        for i in 3..6 {
            js.push(judgment("t", StrongReject, i));
        }
        assert_eq!(build_pairs(&js, &GradeConfig::default()).len(), 9);
    }

    #[test]
    fn pairs_never_cross_triples() {
        use PreferenceLevel::*;
        let js = vec![
            judgment("a", StrongAccept, 0),
            judgment("b", StrongReject, 1),
            judgment("a", WeakReject, 2),
            judgment("b", WeakAccept, 3),
        ];
        let pairs = build_pairs(&js, &GradeConfig::default());
        assert_eq!(pairs.len(), 2);
        for p in &pairs {
            assert_eq!(p.positive.triple_id, p.negative.triple_id);
        }
    }

    proptest! {
        /// |pairs| == |M+| * |M-| for any level multiset, and grades stay in
        /// the configured ranges.
        #[test]
        fn count_matches_product(levels in proptest::collection::vec(0usize..4, 0..12)) {
            use PreferenceLevel::*;
            let lv = [StrongReject, WeakReject, WeakAccept, StrongAccept];
            let js: Vec<Judgment> = levels
                .iter()
                .enumerate()
                .map(|(i, &l)| judgment("t", lv[l], i as u64))
                .collect();
            let pos = js.iter().filter(|j| j.level.is_accept()).count();
            let neg = js.len() - pos;
            let pairs = build_pairs(&js, &GradeConfig::default());
            prop_assert_eq!(pairs.len(), pos * neg);
            for p in &pairs {
                prop_assert!(p.g_plus == 1 || p.g_plus == 2);
                prop_assert!(p.g_minus == -1 || p.g_minus == -2);
                let gap = (p.g_plus - p.g_minus).unsigned_abs();
                prop_assert!((2..=4).contains(&gap));
            }
        }
    }
}
