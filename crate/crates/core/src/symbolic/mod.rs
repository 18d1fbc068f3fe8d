// SPDX-License-Identifier: MIT OR Apache-2.0

//! Word segmentation of discrete symbol sequences.

mod aernn;
mod engine;
mod gru;
mod params;
mod segment;
mod train;
mod transition;

pub use aernn::{Aernn, AernnArch, AernnPreset, BatchLoss};
pub use params::{ParamEntry, ParamId, Params};
pub use segment::{aernn_segment_cost, segment_symbols, DurationVariant, SymbolicSegConfig};
pub use train::{train_aernn, AernnScorer, TrainConfig, TrainReport, TrainingMeta};
pub use transition::{transition_prob_segment, TransitionModel};

use crate::error::{Error, Result};

/// One utterance of symbols drawn from `1..=alphabet_size`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolSequence {
    pub utterance_id: String,
    pub symbols: Vec<usize>,
    pub alphabet_size: usize,
}

impl SymbolSequence {
    pub fn new(utterance_id: impl Into<String>, symbols: Vec<usize>, alphabet_size: usize) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(&symbol) = symbols.iter().find(|&&s| s == 0 || s > alphabet_size) {
            return Err(Error::SymbolOutOfRange { symbol, alphabet_size });
        }
        Ok(Self {
            utterance_id: utterance_id.into(),
            symbols,
            alphabet_size,
        })
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.symbols.len()
    }
}
