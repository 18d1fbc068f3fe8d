// SPDX-License-Identifier: MIT OR Apache-2.0

use super::SymbolSequence;
use crate::error::{Error, Result};
use crate::seg::{Segmentation, Span};

/// Bigram transition probabilities `P(next | current)` with add-one
/// smoothing.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionModel {
    alphabet_size: usize,
    probs: Vec<f64>,
}

impl TransitionModel {
    pub fn fit(corpus: &[SymbolSequence]) -> Result<Self> {
        let k = corpus.first().ok_or(Error::EmptyInput)?.alphabet_size;
        let mut counts = vec![0u64; k * k];
        for seq in corpus {
            if seq.alphabet_size != k {
                return Err(Error::AlphabetMismatch {
                    scorer: k,
                    input: seq.alphabet_size,
                });
            }
            for w in seq.symbols.windows(2) {
                counts[(w[0] - 1) * k + w[1] - 1] += 1;
            }
        }
        let mut probs = vec![0.0; k * k];
        for a in 0..k {
            let row = &counts[a * k..(a + 1) * k];
            let total: u64 = row.iter().sum();
            for b in 0..k {
                probs[a * k + b] = (row[b] + 1) as f64 / (total + k as u64) as f64;
            }
        }
        Ok(Self { alphabet_size: k, probs })
    }

    /// `P(to | from)` for 1-based symbols.
    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.probs[(from - 1) * self.alphabet_size + to - 1]
    }

    /// Places a boundary after position `t` when the transition `t → t+1`
    /// is strictly less probable than each neighbouring transition that
    /// exists. A lone transition has no neighbours and never dips.
    pub fn segment(&self, seq: &SymbolSequence) -> Result<Segmentation> {
        if seq.alphabet_size != self.alphabet_size {
            return Err(Error::AlphabetMismatch {
                scorer: self.alphabet_size,
                input: seq.alphabet_size,
            });
        }
        let tp: Vec<f64> = seq.symbols.windows(2).map(|w| self.prob(w[0], w[1])).collect();
        let mut ends = Vec::new();
        for i in 0..tp.len() {
            let left = i.checked_sub(1).map(|j| tp[j]);
            let right = tp.get(i + 1).copied();
            if left.is_none() && right.is_none() {
                continue;
            }
            if left.is_none_or(|l| tp[i] < l) && right.is_none_or(|r| tp[i] < r) {
                ends.push(i + 1);
            }
        }
        ends.push(seq.len());
        let spans: Vec<Span> = Segmentation::spans_from_ends(&ends);
        Ok(Segmentation { spans, total_cost: 0.0 })
    }
}

/// Fits bigram statistics on `corpus` and segments `seq` with the
/// local-minimum rule.
pub fn transition_prob_segment(corpus: &[SymbolSequence], seq: &SymbolSequence) -> Result<Segmentation> {
    TransitionModel::fit(corpus)?.segment(seq)
}
