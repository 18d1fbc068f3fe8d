// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("no feasible segmentation: position {position} is unreachable")]
    NoFeasibleSegmentation { position: usize },

    #[error("oracle size limit: sequence length {len} exceeds {limit}")]
    OracleSizeLimit { len: usize, limit: usize },

    #[error("infeasible segment count: k={k} for length {len} with max segment length {max_seg_len}")]
    InfeasibleSegmentCount {
        k: usize,
        len: usize,
        max_seg_len: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("too few frames for k-means: {frames} frames ({distinct} distinct), k={k}")]
    TooFewFrames {
        frames: usize,
        distinct: usize,
        k: usize,
    },

    #[error("symbol {symbol} outside alphabet 1..={alphabet_size}")]
    SymbolOutOfRange { symbol: usize, alphabet_size: usize },

    #[error("alphabet mismatch: scorer has {scorer}, input has {input}")]
    AlphabetMismatch { scorer: usize, input: usize },

    #[error("utterance mismatch: hypothesis {hyp:?} vs reference {reference:?}")]
    UtteranceMismatch { hyp: String, reference: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("training diverged at step {step}: {detail}")]
    Training { step: usize, detail: String },

    #[error("{path}: {detail}")]
    Format { path: PathBuf, detail: String },

    #[error(
        "[{stage}]{} {source}",
        .utterance.as_deref().map(|u| format!(" utterance {u}:")).unwrap_or_default()
    )]
    Stage {
        stage: &'static str,
        utterance: Option<String>,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(path: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            detail: detail.into(),
        }
    }

    /// Tags the error with the pipeline stage and utterance it came from.
    pub fn in_stage(self, stage: &'static str, utterance: Option<&str>) -> Self {
        Error::Stage {
            stage,
            utterance: utterance.map(str::to_owned),
            source: Box::new(self),
        }
    }

    /// Stage named by the outermost stage tag, if any.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_tag_formats_with_and_without_utterance() {
        let e = Error::EmptyInput.in_stage("encode", Some("u1"));
        assert_eq!(e.to_string(), "[encode] utterance u1: empty input");
        assert_eq!(e.stage(), Some("encode"));
        assert_eq!(Error::EmptyInput.in_stage("load", None).to_string(), "[load] empty input");
    }
}
