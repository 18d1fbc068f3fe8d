// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exact-cover segmentation by dynamic programming.
//!
//! A sequence of length `T` is split into contiguous spans. Every span
//! `(a, b)` (1-based, inclusive) is charged `w_seg(a, b)` by a
//! [`SegmentCost`] provider plus a duration term from a
//! [`DurationPenalty`]. [`dpdp_segment`] finds the cheapest cover with the
//! forward recursion over prefix costs; [`brute_force_segment`] enumerates
//! every cover for small inputs and is used as a test oracle;
//! [`constrained_k_segment`] solves the fixed-segment-count problem.

mod check;
mod constrained;
mod dp;
mod oracle;
mod penalty;

pub use check::{oracle_check, OracleCheckConfig, OracleCheckReport};
pub use constrained::constrained_k_segment;
pub use dp::dpdp_segment;
pub use oracle::{brute_force_segment, ORACLE_MAX_LEN};
pub use penalty::{DurationKind, DurationPenalty};

/// Default maximum span length for continuous (frame) input.
pub const DEFAULT_MAX_FRAMES: usize = 100;
/// Default maximum span length for symbolic input.
pub const DEFAULT_MAX_SYMBOLS: usize = 50;

/// One segment, 1-based with an inclusive end.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start >= 1 && end >= start);
        Self { start, end }
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    /// Zero-based half-open index range, for slicing.
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start - 1..self.end
    }
}

/// Ordered exact cover of `1..=T` and the objective value it attains.
#[derive(Clone, Debug, PartialEq)]
pub struct Segmentation {
    pub spans: Vec<Span>,
    pub total_cost: f64,
}

impl Segmentation {
    pub fn num_spans(&self) -> usize {
        self.spans.len()
    }

    /// End index of every span; the last entry is `T`.
    pub fn ends(&self) -> Vec<usize> {
        self.spans.iter().map(|s| s.end).collect()
    }

    /// Builds spans from strictly increasing end indices (last = `T`).
    pub fn spans_from_ends(ends: &[usize]) -> Vec<Span> {
        let mut start = 1;
        ends.iter()
            .map(|&end| {
                let span = Span::new(start, end);
                start = end + 1;
                span
            })
            .collect()
    }

    /// True if the spans tile `1..=len` with no gaps or overlaps.
    pub fn is_exact_cover(&self, len: usize) -> bool {
        spans_cover(&self.spans, len)
    }

    /// Recomputes `Σ (w_seg + penalty)` from the providers, summing left to
    /// right exactly as the recursion does.
    pub fn recompute_cost<C: SegmentCost + ?Sized>(
        &self,
        cost: &C,
        penalty: &DurationPenalty,
    ) -> f64 {
        self.spans
            .iter()
            .fold(0.0, |acc, s| acc + span_weight(cost, penalty, s.start, s.end))
    }

    /// `Σ w_seg` alone, without duration terms.
    pub fn segment_cost_sum<C: SegmentCost + ?Sized>(&self, cost: &C) -> f64 {
        self.spans
            .iter()
            .fold(0.0, |acc, s| acc + cost.cost(s.start, s.end))
    }
}

pub(crate) fn spans_cover(spans: &[Span], len: usize) -> bool {
    let mut next = 1;
    for s in spans {
        if s.start != next || s.end < s.start {
            return false;
        }
        next = s.end + 1;
    }
    !spans.is_empty() && next == len + 1
}

/// A segment-cost provider bound to one sequence.
///
/// Implementations precompute whatever statistics they need when they are
/// constructed; `cost` must then be deterministic and free of side effects.
pub trait SegmentCost {
    /// Length `T` of the underlying sequence.
    fn seq_len(&self) -> usize;

    /// `w_seg` for elements `start..=end` (1-based, inclusive).
    fn cost(&self, start: usize, end: usize) -> f64;
}

impl<C: SegmentCost + ?Sized> SegmentCost for &C {
    fn seq_len(&self) -> usize {
        (**self).seq_len()
    }

    fn cost(&self, start: usize, end: usize) -> f64 {
        (**self).cost(start, end)
    }
}

/// Adapts a closure `(start, end) -> cost` into a provider.
pub struct FnCost<F> {
    len: usize,
    f: F,
}

impl<F: Fn(usize, usize) -> f64> FnCost<F> {
    pub fn new(len: usize, f: F) -> Self {
        Self { len, f }
    }
}

impl<F: Fn(usize, usize) -> f64> SegmentCost for FnCost<F> {
    fn seq_len(&self) -> usize {
        self.len
    }

    fn cost(&self, start: usize, end: usize) -> f64 {
        (self.f)(start, end)
    }
}

/// Dense table of span costs, indexed by start and length.
///
/// Spans longer than the table width cost `+∞`.
#[derive(Clone, Debug, PartialEq)]
pub struct CostTable {
    len: usize,
    max_len: usize,
    // row-major [start - 1][span_len - 1]
    values: Vec<f64>,
}

impl CostTable {
    pub fn new(len: usize, max_len: usize) -> Self {
        Self {
            len,
            max_len,
            values: vec![f64::INFINITY; len * max_len],
        }
    }

    pub fn from_fn(len: usize, max_len: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut table = Self::new(len, max_len);
        for a in 1..=len {
            for b in a..=(a + max_len - 1).min(len) {
                table.set(a, b, f(a, b));
            }
        }
        table
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn set(&mut self, start: usize, end: usize, value: f64) {
        let l = end + 1 - start;
        assert!(l <= self.max_len && end <= self.len);
        self.values[(start - 1) * self.max_len + l - 1] = value;
    }
}

impl SegmentCost for CostTable {
    fn seq_len(&self) -> usize {
        self.len
    }

    fn cost(&self, start: usize, end: usize) -> f64 {
        let l = end + 1 - start;
        if l > self.max_len {
            return f64::INFINITY;
        }
        self.values[(start - 1) * self.max_len + l - 1]
    }
}

/// Combined weight `w_seg + λ·w_dur(l) + c` of one span.
#[inline]
pub fn span_weight<C: SegmentCost + ?Sized>(
    cost: &C,
    penalty: &DurationPenalty,
    start: usize,
    end: usize,
) -> f64 {
    cost.cost(start, end) + penalty.weight(end + 1 - start)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spans_from_ends_builds_cover() {
        let spans = Segmentation::spans_from_ends(&[3, 5, 6]);
        assert_eq!(spans, vec![Span::new(1, 3), Span::new(4, 5), Span::new(6, 6)]);
        assert!(spans_cover(&spans, 6));
        assert!(!spans_cover(&spans, 7));
        assert!(!spans_cover(&[], 0));
    }

    #[test]
    fn cover_rejects_gaps_and_overlaps() {
        assert!(!spans_cover(&[Span::new(1, 2), Span::new(4, 5)], 5));
        assert!(!spans_cover(&[Span::new(1, 3), Span::new(3, 5)], 5));
    }

    #[test]
    fn table_out_of_width_is_infinite() {
        let t = CostTable::from_fn(5, 2, |a, b| (a + b) as f64);
        assert_eq!(t.cost(2, 3), 5.0);
        assert!(t.cost(1, 3).is_infinite());
    }
}
