// SPDX-License-Identifier: MIT OR Apache-2.0

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};

/// `T × D` frame features of one utterance.
///
/// Frame `t` (1-based) covers `[(t-1)·period, t·period)` seconds.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSequence {
    pub utterance_id: String,
    pub frames: Array2<f64>,
    pub frame_period_s: f64,
}

impl FeatureSequence {
    pub fn new(
        utterance_id: impl Into<String>,
        frames: Array2<f64>,
        frame_period_s: f64,
    ) -> Result<Self> {
        let utterance_id = utterance_id.into();
        if frames.nrows() == 0 || frames.ncols() == 0 {
            return Err(Error::EmptyInput);
        }
        if !(frame_period_s > 0.0 && frame_period_s.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "frame period must be positive, got {frame_period_s}"
            )));
        }
        if frames.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("features of {utterance_id}")));
        }
        Ok(Self {
            utterance_id,
            frames,
            frame_period_s,
        })
    }

    pub fn num_frames(&self) -> usize {
        self.frames.nrows()
    }

    pub fn dim(&self) -> usize {
        self.frames.ncols()
    }

    /// Frame `t`, 1-based.
    pub fn frame(&self, t: usize) -> ArrayView1<'_, f64> {
        self.frames.row(t - 1)
    }

    /// End time in seconds of frame `t` (1-based).
    pub fn frame_end_time(&self, t: usize) -> f64 {
        t as f64 * self.frame_period_s
    }

    pub fn duration_s(&self) -> f64 {
        self.frame_end_time(self.num_frames())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(FeatureSequence::new("u", Array2::zeros((0, 3)), 0.01).is_err());
        assert!(FeatureSequence::new("u", array![[1.0, f64::NAN]], 0.01).is_err());
        assert!(FeatureSequence::new("u", array![[1.0]], 0.0).is_err());
    }

    #[test]
    fn frame_times() {
        let f = FeatureSequence::new("u", Array2::zeros((4, 2)), 0.02).unwrap();
        assert_eq!(f.frame_end_time(1), 0.02);
        assert!((f.duration_s() - 0.08).abs() < 1e-15);
    }
}
