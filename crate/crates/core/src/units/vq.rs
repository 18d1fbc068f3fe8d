// SPDX-License-Identifier: MIT OR Apache-2.0

use ndarray::Array2;

use super::{Codebook, FeatureSequence};
use crate::error::{Error, Result};
use crate::seg::SegmentCost;

/// Vector-quantization segment cost `min_k Σ_{t=a..b} ||x_t - e_k||²`.
///
/// Uses `Σ||x_t - e||² = Σ||x_t||² - 2·Σ(e·x_t) + n·||e||²` with prefix sums
/// of `||x_t||²` and of the projections `e_k·x_t`, so a query costs `O(K)`
/// after an `O(T·K·D)` setup.
pub struct VqCost<'a> {
    codebook: &'a Codebook,
    len: usize,
    // [t] = Σ_{s<=t} ||x_s||², t = 0..=T
    prefix_sq: Vec<f64>,
    // [t][k] = Σ_{s<=t} e_k·x_s
    prefix_proj: Array2<f64>,
    code_sq: Vec<f64>,
}

impl<'a> VqCost<'a> {
    pub fn new(features: &FeatureSequence, codebook: &'a Codebook) -> Result<Self> {
        if features.dim() != codebook.dim() {
            return Err(Error::DimensionMismatch {
                expected: codebook.dim(),
                found: features.dim(),
            });
        }
        let len = features.num_frames();
        let k = codebook.k();

        let mut prefix_sq = Vec::with_capacity(len + 1);
        prefix_sq.push(0.0);
        let mut acc = 0.0;
        for x in features.frames.outer_iter() {
            acc += x.dot(&x);
            prefix_sq.push(acc);
        }

        let proj = features.frames.dot(&codebook.codes.t());
        let mut prefix_proj = Array2::<f64>::zeros((len + 1, k));
        for t in 0..len {
            for c in 0..k {
                prefix_proj[[t + 1, c]] = prefix_proj[[t, c]] + proj[[t, c]];
            }
        }

        let code_sq = codebook.codes.outer_iter().map(|e| e.dot(&e)).collect();
        Ok(Self {
            codebook,
            len,
            prefix_sq,
            prefix_proj,
            code_sq,
        })
    }

    pub fn codebook(&self) -> &Codebook {
        self.codebook
    }

    /// Best code (1-based) for frames `start..=end` and its cost.
    pub fn best_code(&self, start: usize, end: usize) -> (usize, f64) {
        let n = (end + 1 - start) as f64;
        let sq = self.prefix_sq[end] - self.prefix_sq[start - 1];
        let hi = self.prefix_proj.row(end);
        let lo = self.prefix_proj.row(start - 1);
        let mut best = (0, f64::INFINITY);
        for c in 0..self.code_sq.len() {
            let d = sq - 2.0 * (hi[c] - lo[c]) + n * self.code_sq[c];
            if d < best.1 {
                best = (c, d);
            }
        }
        // cancellation can leave a tiny negative residue for exact matches
        (best.0 + 1, best.1.max(0.0))
    }

    /// Cost of assigning frames `start..=end` to one given code (1-based).
    pub fn cost_with_code(&self, start: usize, end: usize, code: usize) -> f64 {
        let c = code - 1;
        let n = (end + 1 - start) as f64;
        let sq = self.prefix_sq[end] - self.prefix_sq[start - 1];
        let proj = self.prefix_proj[[end, c]] - self.prefix_proj[[start - 1, c]];
        (sq - 2.0 * proj + n * self.code_sq[c]).max(0.0)
    }
}

impl SegmentCost for VqCost<'_> {
    fn seq_len(&self) -> usize {
        self.len
    }

    fn cost(&self, start: usize, end: usize) -> f64 {
        self.best_code(start, end).1
    }
}

/// One-off query of the VQ segment cost for frames `start..=end`.
pub fn vq_segment_cost(
    features: &FeatureSequence,
    start: usize,
    end: usize,
    codebook: &Codebook,
) -> Result<f64> {
    if start == 0 || end < start || end > features.num_frames() {
        return Err(Error::InvalidConfig(format!(
            "span ({start}, {end}) outside 1..={}",
            features.num_frames()
        )));
    }
    Ok(VqCost::new(features, codebook)?.cost(start, end))
}
