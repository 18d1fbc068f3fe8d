// SPDX-License-Identifier: MIT OR Apache-2.0

use super::{span_weight, DurationPenalty, SegmentCost, Segmentation, Span};
use crate::error::{Error, Result};

/// Minimum-cost exact cover of the provider's sequence.
///
/// Runs `α_0 = 0`, `α_t = min_j {α_j + w(j+1, t)}` over `t = 1..=T` with
/// `t - j <= max_seg_len`, then backtracks through the stored argmins. When
/// several `j` attain the minimum the smallest one (longest final span) wins.
pub fn dpdp_segment<C: SegmentCost + ?Sized>(
    cost: &C,
    penalty: &DurationPenalty,
    max_seg_len: usize,
) -> Result<Segmentation> {
    let len = cost.seq_len();
    if len == 0 {
        return Err(Error::EmptyInput);
    }
    if max_seg_len == 0 {
        return Err(Error::InvalidConfig("max_seg_len must be >= 1".into()));
    }

    let mut alpha = vec![f64::INFINITY; len + 1];
    let mut back = vec![usize::MAX; len + 1];
    alpha[0] = 0.0;

    for t in 1..=len {
        let mut best = f64::INFINITY;
        let mut arg = usize::MAX;
        for j in t.saturating_sub(max_seg_len)..t {
            if alpha[j] == f64::INFINITY {
                continue;
            }
            let w = span_weight(cost, penalty, j + 1, t);
            if w.is_nan() {
                return Err(Error::NonFinite(format!("segment cost of span ({}, {t})", j + 1)));
            }
            let candidate = alpha[j] + w;
            if candidate < best {
                best = candidate;
                arg = j;
            }
        }
        alpha[t] = best;
        back[t] = arg;
    }

    if alpha[len] == f64::INFINITY {
        return Err(Error::NoFeasibleSegmentation { position: len });
    }

    let mut spans = Vec::new();
    let mut t = len;
    while t > 0 {
        let j = back[t];
        spans.push(Span::new(j + 1, t));
        t = j;
    }
    spans.reverse();

    Ok(Segmentation {
        spans,
        total_cost: alpha[len],
    })
}
