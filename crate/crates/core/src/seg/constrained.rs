// SPDX-License-Identifier: MIT OR Apache-2.0

use super::{SegmentCost, Segmentation, Span};
use crate::error::{Error, Result};

/// Minimum `Σ w_seg` over covers with exactly `k` spans.
///
/// Fills `D[n][t]`, the best cost of covering `1..=t` with `n` spans, for
/// `n = 1..=k`. No duration penalty is applied: with the linear penalty the
/// penalty of any `k`-span cover is the constant `λ(k - T)`, so this is the
/// fixed-count problem the penalised search solves implicitly.
pub fn constrained_k_segment<C: SegmentCost + ?Sized>(
    cost: &C,
    k: usize,
    max_seg_len: usize,
) -> Result<Segmentation> {
    let len = cost.seq_len();
    if len == 0 {
        return Err(Error::EmptyInput);
    }
    if max_seg_len == 0 {
        return Err(Error::InvalidConfig("max_seg_len must be >= 1".into()));
    }
    if k == 0 || k > len || k.saturating_mul(max_seg_len) < len {
        return Err(Error::InfeasibleSegmentCount {
            k,
            len,
            max_seg_len,
        });
    }

    let width = len + 1;
    let mut table = vec![f64::INFINITY; (k + 1) * width];
    let mut back = vec![usize::MAX; (k + 1) * width];
    table[0] = 0.0;

    for n in 1..=k {
        // at least n elements are needed for n spans, and the remaining
        // k - n spans need at least one element each
        for t in n..=len - (k - n) {
            let mut best = f64::INFINITY;
            let mut arg = usize::MAX;
            for j in t.saturating_sub(max_seg_len).max(n - 1)..t {
                let prev = table[(n - 1) * width + j];
                if prev == f64::INFINITY {
                    continue;
                }
                let candidate = prev + cost.cost(j + 1, t);
                if candidate < best {
                    best = candidate;
                    arg = j;
                }
            }
            table[n * width + t] = best;
            back[n * width + t] = arg;
        }
    }

    let total_cost = table[k * width + len];
    if total_cost == f64::INFINITY {
        return Err(Error::NoFeasibleSegmentation { position: len });
    }

    let mut spans = Vec::with_capacity(k);
    let mut t = len;
    for n in (1..=k).rev() {
        let j = back[n * width + t];
        spans.push(Span::new(j + 1, t));
        t = j;
    }
    spans.reverse();
    Ok(Segmentation { spans, total_cost })
}
