// SPDX-License-Identifier: MIT OR Apache-2.0

//! Duration-penalized dynamic programming (DPDP) for unsupervised speech
//! segmentation.
//!
//! The crate is organised bottom-up:
//!
//! * [`seg`]: the generic exact-cover segmentation engine, its brute-force
//!   oracle and the fixed-segment-count variant.
//! * [`units`]: K-means codebooks and vector-quantized segment costs for
//!   acoustic unit discovery over continuous features.
//! * [`symbolic`]: the autoencoding recurrent scorer and the word segmenters
//!   that run on discrete symbol sequences.
//! * [`eval`]: boundary, token and per-type metrics.
//! * [`io`], [`synth`] and [`pipeline`]: file formats, desk-scale synthetic
//!   data and the chained speech-to-words pipeline.

#![deny(unsafe_code)]

pub mod error;
pub mod eval;
pub mod io;
pub mod pipeline;
pub mod seg;
pub mod symbolic;
pub mod synth;
pub mod units;

pub use error::{Error, Result};
pub use seg::{
    brute_force_segment, constrained_k_segment, dpdp_segment, DurationKind, DurationPenalty,
    SegmentCost, Segmentation, Span,
};
