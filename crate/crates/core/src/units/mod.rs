// SPDX-License-Identifier: MIT OR Apache-2.0

//! Acoustic unit discovery over continuous frame features.
//!
//! A K-means codebook is fit on pooled frames ([`kmeans_fit`]); each
//! utterance is then jointly segmented and quantized by running the DP with
//! the vector-quantization cost [`VqCost`] and a linear duration penalty
//! ([`encode_utterance`]). [`merge_repeats`] is the frame-wise baseline that
//! assigns every frame independently and merges runs.

mod encode;
mod features;
mod kmeans;
mod vq;

pub use encode::{encode_utterance, merge_repeats, merge_repeats_features, nearest_codes, UnitTokenization};
pub use features::FeatureSequence;
pub use kmeans::{kmeans_fit, Codebook, KMeansFit};
pub use vq::{vq_segment_cost, VqCost};

/// Default codebook size.
pub const DEFAULT_CODEBOOK_SIZE: usize = 50;
/// Default duration weight for K-means codebooks.
pub const DEFAULT_UNIT_LAMBDA: f64 = 2.0;
/// Default duration weight for codebooks learned inside a VQ-VAE style model.
pub const DEFAULT_VQVAE_LAMBDA: f64 = 3.0;
/// Frame period assumed when a feature file carries no metadata.
pub const DEFAULT_FRAME_PERIOD_S: f64 = 0.01;
