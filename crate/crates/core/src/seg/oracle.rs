// SPDX-License-Identifier: MIT OR Apache-2.0

use super::{span_weight, DurationPenalty, SegmentCost, Segmentation, Span};
use crate::error::{Error, Result};

/// Largest sequence the exhaustive oracle accepts (2^15 covers).
pub const ORACLE_MAX_LEN: usize = 16;

/// Enumerates every exact cover and returns one of minimum cost.
///
/// Costs are accumulated left to right, the same order the recursion in
/// [`super::dpdp_segment`] uses, so the two minima agree exactly.
pub fn brute_force_segment<C: SegmentCost + ?Sized>(
    cost: &C,
    penalty: &DurationPenalty,
    max_seg_len: usize,
) -> Result<Segmentation> {
    let len = cost.seq_len();
    if len == 0 {
        return Err(Error::EmptyInput);
    }
    if len > ORACLE_MAX_LEN {
        return Err(Error::OracleSizeLimit {
            len,
            limit: ORACLE_MAX_LEN,
        });
    }

    let mut best: Option<(f64, Vec<Span>)> = None;
    let mut spans = Vec::with_capacity(len);
    // Bit i of `mask` set means a boundary after element i + 1.
    'masks: for mask in 0u32..(1u32 << (len - 1)) {
        spans.clear();
        let mut start = 1;
        for t in 1..=len {
            if t == len || mask & (1 << (t - 1)) != 0 {
                if t + 1 - start > max_seg_len {
                    continue 'masks;
                }
                spans.push(Span::new(start, t));
                start = t + 1;
            }
        }
        let total = spans
            .iter()
            .fold(0.0, |acc, s| acc + span_weight(cost, penalty, s.start, s.end));
        if total.is_nan() {
            return Err(Error::NonFinite("segment cost".into()));
        }
        if total < f64::INFINITY && best.as_ref().is_none_or(|(b, _)| total < *b) {
            best = Some((total, spans.clone()));
        }
    }

    best.map(|(total_cost, spans)| Segmentation { spans, total_cost })
        .ok_or(Error::NoFeasibleSegmentation { position: len })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seg::FnCost;

    #[test]
    fn cover_invariant_cost() {
        let cost = FnCost::new(3, |a, b| (b + 1 - a) as f64);
        let seg = brute_force_segment(&cost, &DurationPenalty::linear(0.0), 3).unwrap();
        assert_eq!(seg.total_cost, 3.0);
        assert!(seg.is_exact_cover(3));
    }

    #[test]
    fn constructed_minimum() {
        let cost = FnCost::new(4, |a, b| if (a, b) == (1, 4) { 0.0 } else { 1.0 });
        let seg = brute_force_segment(&cost, &DurationPenalty::linear(0.0), 4).unwrap();
        assert_eq!(seg.spans, vec![Span::new(1, 4)]);
        assert_eq!(seg.total_cost, 0.0);
    }

    #[test]
    fn size_limit() {
        let cost = FnCost::new(17, |_, _| 0.0);
        let err = brute_force_segment(&cost, &DurationPenalty::none(), 17).unwrap_err();
        assert!(err.to_string().starts_with("oracle size limit"));
    }

    #[test]
    fn respects_max_len() {
        let cost = FnCost::new(5, |_, _| 0.0);
        let seg = brute_force_segment(&cost, &DurationPenalty::linear(1.0), 2).unwrap();
        assert!(seg.spans.iter().all(|s| s.len() <= 2));
        assert_eq!(seg.total_cost, -2.0);
    }
}
