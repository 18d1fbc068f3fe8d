// SPDX-License-Identifier: MIT OR Apache-2.0

use super::{Codebook, FeatureSequence, VqCost};
use crate::error::{Error, Result};
use crate::seg::{dpdp_segment, spans_cover, DurationPenalty, Segmentation, Span};

/// Variable-rate code sequence of one utterance.
///
/// Unit `i` carries code `codes[i]` (1-based) and covers the frames after
/// `boundaries[i-1]` up to and including `boundaries[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnitTokenization {
    pub utterance_id: String,
    pub codes: Vec<usize>,
    pub boundaries: Vec<usize>,
}

impl UnitTokenization {
    pub fn new(utterance_id: impl Into<String>, codes: Vec<usize>, boundaries: Vec<usize>) -> Result<Self> {
        let tok = Self {
            utterance_id: utterance_id.into(),
            codes,
            boundaries,
        };
        if tok.codes.is_empty() {
            return Err(Error::EmptyInput);
        }
        if tok.codes.len() != tok.boundaries.len()
            || tok.boundaries[0] == 0
            || tok.boundaries.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidConfig(format!(
                "unit boundaries of {} are not strictly increasing end frames",
                tok.utterance_id
            )));
        }
        Ok(tok)
    }

    pub fn num_units(&self) -> usize {
        self.codes.len()
    }

    pub fn num_frames(&self) -> usize {
        *self.boundaries.last().expect("non-empty tokenization")
    }

    pub fn spans(&self) -> Vec<Span> {
        Segmentation::spans_from_ends(&self.boundaries)
    }

    pub fn is_exact_cover(&self, num_frames: usize) -> bool {
        spans_cover(&self.spans(), num_frames)
    }

    /// Code of every frame, expanded back to frame rate.
    pub fn frame_codes(&self) -> Vec<usize> {
        self.spans()
            .iter()
            .zip(&self.codes)
            .flat_map(|(s, &c)| std::iter::repeat_n(c, s.len()))
            .collect()
    }
}

/// Jointly segments and quantizes an utterance.
///
/// Runs the DP with [`VqCost`] and the linear penalty at weight `lambda`;
/// every span gets the code that minimises its squared distance.
pub fn encode_utterance(
    features: &FeatureSequence,
    codebook: &Codebook,
    lambda: f64,
    max_seg_len: usize,
) -> Result<UnitTokenization> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidConfig(format!("lambda must be >= 0, got {lambda}")));
    }
    let cost = VqCost::new(features, codebook)?;
    let seg = dpdp_segment(&cost, &DurationPenalty::linear(lambda), max_seg_len)?;
    let codes = seg.spans.iter().map(|s| cost.best_code(s.start, s.end).0).collect();
    UnitTokenization::new(features.utterance_id.clone(), codes, seg.ends())
}

/// Nearest code (1-based) of every frame, chosen independently.
pub fn nearest_codes(features: &FeatureSequence, codebook: &Codebook) -> Result<Vec<usize>> {
    if features.dim() != codebook.dim() {
        return Err(Error::DimensionMismatch {
            expected: codebook.dim(),
            found: features.dim(),
        });
    }
    Ok(features
        .frames
        .outer_iter()
        .map(|x| codebook.nearest(x).0)
        .collect())
}

/// Run-length merges a frame-level code sequence.
pub fn merge_repeats(utterance_id: impl Into<String>, frame_codes: &[usize]) -> Result<UnitTokenization> {
    if frame_codes.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut codes = Vec::new();
    let mut boundaries = Vec::new();
    for (t, &c) in frame_codes.iter().enumerate() {
        if codes.last() == Some(&c) {
            *boundaries.last_mut().expect("paired with codes") = t + 1;
        } else {
            codes.push(c);
            boundaries.push(t + 1);
        }
    }
    UnitTokenization::new(utterance_id, codes, boundaries)
}

/// Frame-wise nearest-code assignment followed by [`merge_repeats`].
pub fn merge_repeats_features(features: &FeatureSequence, codebook: &Codebook) -> Result<UnitTokenization> {
    merge_repeats(features.utterance_id.clone(), &nearest_codes(features, codebook)?)
}
