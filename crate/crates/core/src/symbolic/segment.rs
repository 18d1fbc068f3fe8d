// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use super::train::AernnScorer;
use super::SymbolSequence;
use crate::error::{Error, Result};
use crate::seg::{dpdp_segment, DurationPenalty, Segmentation, DEFAULT_MAX_SYMBOLS};

/// Duration model for symbolic segmentation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum DurationVariant {
    /// `λ·(1 - l)`.
    Linear { lambda: f64 },
    /// Truncated gamma duration pmf with λ fixed at 1, plus a geometric
    /// prior on the number of segments; the resulting DP is a hidden
    /// semi-Markov model whose emissions come from the AE-RNN.
    Hsmm {
        shape: f64,
        scale: f64,
        truncation: usize,
        continue_prob: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolicSegConfig {
    #[serde(flatten)]
    pub duration: DurationVariant,
    pub max_seg_len: usize,
}

impl SymbolicSegConfig {
    pub fn linear(lambda: f64) -> Self {
        Self {
            duration: DurationVariant::Linear { lambda },
            max_seg_len: DEFAULT_MAX_SYMBOLS,
        }
    }

    /// Gamma(7, 1) durations truncated at 50 symbols, geometric continue
    /// probability 0.5.
    pub fn hsmm() -> Self {
        Self {
            duration: DurationVariant::Hsmm {
                shape: 7.0,
                scale: 1.0,
                truncation: 50,
                continue_prob: 0.5,
            },
            max_seg_len: DEFAULT_MAX_SYMBOLS,
        }
    }

    pub fn penalty(&self) -> Result<DurationPenalty> {
        match self.duration {
            DurationVariant::Linear { lambda } => {
                if !(lambda >= 0.0 && lambda.is_finite()) {
                    return Err(Error::InvalidConfig(format!("lambda must be >= 0, got {lambda}")));
                }
                Ok(DurationPenalty::linear(lambda))
            }
            DurationVariant::Hsmm {
                shape,
                scale,
                truncation,
                continue_prob,
            } => Ok(DurationPenalty::gamma(1.0, shape, scale, truncation)?
                .with_segment_constant(DurationPenalty::geometric_segment_constant(continue_prob)?)),
        }
    }

    /// Longest span the DP considers.
    pub fn effective_max_len(&self) -> Result<usize> {
        let penalty = self.penalty()?;
        Ok(penalty
            .max_finite_len()
            .map_or(self.max_seg_len, |t| t.min(self.max_seg_len)))
    }
}

impl Default for SymbolicSegConfig {
    fn default() -> Self {
        Self::linear(3.0)
    }
}

fn check_alphabet(scorer: &AernnScorer, seq: &SymbolSequence) -> Result<()> {
    if seq.alphabet_size != scorer.alphabet_size() {
        return Err(Error::AlphabetMismatch {
            scorer: scorer.alphabet_size(),
            input: seq.alphabet_size,
        });
    }
    Ok(())
}

/// Reconstruction NLL of `seq[start..=end]`; `+∞` past `max_seg_len`.
pub fn aernn_segment_cost(
    scorer: &AernnScorer,
    seq: &SymbolSequence,
    start: usize,
    end: usize,
    max_seg_len: usize,
) -> Result<f64> {
    check_alphabet(scorer, seq)?;
    if start == 0 || end < start || end > seq.len() {
        return Err(Error::InvalidConfig(format!("span ({start}, {end}) outside 1..={}", seq.len())));
    }
    if end + 1 - start > max_seg_len {
        return Ok(f64::INFINITY);
    }
    Ok(scorer.span_cost(&seq.symbols[start - 1..end]))
}

/// Best segmentation of `seq` under the AE-RNN cost and configured duration
/// model. All span costs are computed once up front and reused by the DP.
pub fn segment_symbols(
    scorer: &AernnScorer,
    seq: &SymbolSequence,
    config: &SymbolicSegConfig,
) -> Result<Segmentation> {
    check_alphabet(scorer, seq)?;
    let penalty = config.penalty()?;
    let max_len = config.effective_max_len()?;
    if max_len == 0 {
        return Err(Error::InvalidConfig("max_seg_len must be >= 1".into()));
    }
    let table = scorer.span_cost_table(&seq.symbols, max_len);
    dpdp_segment(&table, &penalty, max_len)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hsmm_penalty_is_gamma_plus_constant() {
        let cfg = SymbolicSegConfig::hsmm();
        let p = cfg.penalty().unwrap();
        assert_eq!(p.lambda(), 1.0);
        assert!((p.segment_constant() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(p.weight(51).is_infinite());
        assert_eq!(cfg.effective_max_len().unwrap(), 50);
    }

    #[test]
    fn config_toml_roundtrip() {
        for cfg in [SymbolicSegConfig::linear(3.0), SymbolicSegConfig::hsmm()] {
            let text = toml::to_string(&cfg).unwrap();
            let back: SymbolicSegConfig = toml::from_str(&text).unwrap();
            assert_eq!(back, cfg);
        }
    }
}
