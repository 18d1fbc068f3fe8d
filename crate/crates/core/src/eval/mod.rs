// SPDX-License-Identifier: MIT OR Apache-2.0

//! Segmentation metrics: boundary precision/recall/F1 with a time tolerance,
//! over-segmentation, R-value, word-token F1 and per-type token recall.
//!
//! All corpus-level figures are computed from summed counts, never by
//! averaging per-utterance percentages.

mod boundary;
mod report;
mod token;

pub use boundary::{boundary_counts, boundary_metrics, r_value, BoundaryCounts};
pub use report::{
    evaluate_corpus, evaluate_segment_ends, format_table, segment_end_alignment, CorpusEvaluation, MetricReport,
};
pub use token::{per_type_recall, token_counts, token_f1, PerTypeReport, TokenCounts, TypeRecall};

use crate::error::{Error, Result};

/// Slack added to every tolerance comparison so that boundaries computed as
/// `frame * period` compare equal to their decimal counterparts.
pub const TIME_EPSILON: f64 = 1e-9;

/// Default tolerance in seconds.
pub const DEFAULT_TOLERANCE_S: f64 = 0.02;

/// Boundary times for one utterance. Time 0 is never stored; the last
/// boundary may coincide with `terminal`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimedBoundarySet {
    pub utterance_id: String,
    pub boundaries: Vec<f64>,
    pub terminal: f64,
}

impl TimedBoundarySet {
    pub fn new(utterance_id: impl Into<String>, boundaries: Vec<f64>, terminal: f64) -> Result<Self> {
        let utterance_id = utterance_id.into();
        if !(terminal.is_finite() && terminal > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "{utterance_id}: terminal time must be positive, got {terminal}"
            )));
        }
        let mut prev = 0.0;
        for &b in &boundaries {
            if !(b.is_finite() && b > prev && b <= terminal + TIME_EPSILON) {
                return Err(Error::InvalidConfig(format!(
                    "{utterance_id}: boundaries must be strictly increasing within (0, {terminal}], got {b} after {prev}"
                )));
            }
            prev = b;
        }
        Ok(Self {
            utterance_id,
            boundaries,
            terminal,
        })
    }

    /// Boundaries at the ends of frame spans (1-based end indices).
    pub fn from_frame_ends(utterance_id: impl Into<String>, ends: &[usize], num_frames: usize, frame_period_s: f64) -> Result<Self> {
        let times = ends.iter().map(|&e| e as f64 * frame_period_s).collect();
        Self::new(utterance_id, times, num_frames as f64 * frame_period_s)
    }

    /// Boundaries excluding the one at the utterance end, if present and
    /// `exclude_final` is set.
    pub fn scored(&self, exclude_final: bool) -> &[f64] {
        match self.boundaries.last() {
            Some(&last) if exclude_final && (last - self.terminal).abs() <= TIME_EPSILON => {
                &self.boundaries[..self.boundaries.len() - 1]
            }
            _ => &self.boundaries,
        }
    }
}

/// One labelled reference token.
#[derive(Clone, Debug, PartialEq)]
pub struct RefToken {
    pub start: f64,
    pub end: f64,
    pub label: String,
}

/// Contiguous labelled reference tokens for one utterance.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceAlignment {
    pub utterance_id: String,
    pub tokens: Vec<RefToken>,
}

impl ReferenceAlignment {
    pub fn new(utterance_id: impl Into<String>, tokens: Vec<RefToken>) -> Result<Self> {
        let utterance_id = utterance_id.into();
        if tokens.is_empty() {
            return Err(Error::InvalidConfig(format!("{utterance_id}: alignment has no tokens")));
        }
        for (i, t) in tokens.iter().enumerate() {
            if !(t.start.is_finite() && t.end.is_finite() && t.start >= 0.0 && t.start < t.end) {
                return Err(Error::InvalidConfig(format!(
                    "{utterance_id}: token {i} has invalid interval [{}, {}]",
                    t.start, t.end
                )));
            }
            if i > 0 && (t.start - tokens[i - 1].end).abs() > TIME_EPSILON {
                return Err(Error::InvalidConfig(format!(
                    "{utterance_id}: token {i} starts at {} but the previous token ends at {}",
                    t.start,
                    tokens[i - 1].end
                )));
            }
        }
        Ok(Self { utterance_id, tokens })
    }

    pub fn terminal(&self) -> f64 {
        self.tokens.last().map_or(0.0, |t| t.end)
    }

    /// Token edges as a boundary set. A leading non-zero start counts as a
    /// boundary.
    pub fn boundaries(&self) -> TimedBoundarySet {
        let mut b = Vec::with_capacity(self.tokens.len() + 1);
        if self.tokens[0].start > TIME_EPSILON {
            b.push(self.tokens[0].start);
        }
        b.extend(self.tokens.iter().map(|t| t.end));
        TimedBoundarySet {
            utterance_id: self.utterance_id.clone(),
            boundaries: b,
            terminal: self.terminal(),
        }
    }
}

/// Checks that two sets describe the same utterance.
pub(crate) fn check_same_utterance(hyp_id: &str, ref_id: &str, hyp_terminal: f64, ref_terminal: f64, tol: f64) -> Result<()> {
    if hyp_id != ref_id {
        return Err(Error::UtteranceMismatch {
            hyp: hyp_id.to_string(),
            reference: ref_id.to_string(),
        });
    }
    if (hyp_terminal - ref_terminal).abs() > tol + TIME_EPSILON {
        return Err(Error::InvalidConfig(format!(
            "{hyp_id}: hypothesis ends at {hyp_terminal} s but reference ends at {ref_terminal} s"
        )));
    }
    Ok(())
}

pub(crate) fn percent(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

pub(crate) fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_set_validation() {
        assert!(TimedBoundarySet::new("u", vec![0.1, 0.2], 0.2).is_ok());
        assert!(TimedBoundarySet::new("u", vec![0.0, 0.2], 0.2).is_err());
        assert!(TimedBoundarySet::new("u", vec![0.2, 0.2], 0.3).is_err());
        assert!(TimedBoundarySet::new("u", vec![0.4], 0.3).is_err());
    }

    #[test]
    fn final_boundary_exclusion() {
        let b = TimedBoundarySet::from_frame_ends("u", &[3, 7], 7, 0.01).unwrap();
        assert_eq!(b.scored(true).len(), 1);
        assert_eq!(b.scored(false).len(), 2);
    }

    #[test]
    fn alignment_requires_contiguity() {
        let tok = |s, e| RefToken {
            start: s,
            end: e,
            label: "w".into(),
        };
        assert!(ReferenceAlignment::new("u", vec![tok(0.0, 0.1), tok(0.1, 0.3)]).is_ok());
        assert!(ReferenceAlignment::new("u", vec![tok(0.0, 0.1), tok(0.15, 0.3)]).is_err());
        assert!(ReferenceAlignment::new("u", vec![tok(0.2, 0.1)]).is_err());
        let a = ReferenceAlignment::new("u", vec![tok(0.05, 0.1), tok(0.1, 0.3)]).unwrap();
        assert_eq!(a.boundaries().boundaries, vec![0.05, 0.1, 0.3]);
    }
}
