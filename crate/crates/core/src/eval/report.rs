// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::boundary::{boundary_counts, BoundaryCounts};
use super::token::{token_counts, PerTypeReport, TokenCounts};
use super::{RefToken, ReferenceAlignment, TimedBoundarySet};
use crate::error::{Error, Result};

/// Boundary and token scores in percent, with the counts they came from.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MetricReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub os: f64,
    pub r_value: f64,
    pub token_precision: f64,
    pub token_recall: f64,
    pub token_f1: f64,
    pub boundary: BoundaryCounts,
    pub token: TokenCounts,
}

impl MetricReport {
    pub fn from_counts(boundary: BoundaryCounts, token: TokenCounts) -> Self {
        Self {
            precision: boundary.precision(),
            recall: boundary.recall(),
            f1: boundary.f1(),
            os: boundary.os(),
            r_value: boundary.r_value(),
            token_precision: token.precision(),
            token_recall: token.recall(),
            token_f1: token.f1(),
            boundary,
            token,
        }
    }

    /// One `key=value` pair per line.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        for (k, v) in [
            ("precision", self.precision),
            ("recall", self.recall),
            ("f1", self.f1),
            ("os", self.os),
            ("r_value", self.r_value),
            ("token_precision", self.token_precision),
            ("token_recall", self.token_recall),
            ("token_f1", self.token_f1),
        ] {
            let _ = writeln!(out, "{k}={v:.4}");
        }
        for (k, v) in [
            ("n_ref", self.boundary.n_ref),
            ("n_hyp", self.boundary.n_hyp),
            ("n_hit", self.boundary.n_hit),
            ("n_ref_tokens", self.token.n_ref),
            ("n_hyp_tokens", self.token.n_hyp),
            ("n_token_hit", self.token.n_hit),
        ] {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}

/// Aligned table with the word-boundary and token column set.
pub fn format_table(rows: &[(&str, &MetricReport)]) -> String {
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(5);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>7}  {:>7}  {:>7}  {:>8}  {:>8}  {:>8}",
        "model", "Prec.", "Rec.", "F1", "OS", "R-val.", "TokenF1"
    );
    for (name, m) in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>7.1}  {:>7.1}  {:>7.1}  {:>8.1}  {:>8.1}  {:>8.1}",
            name, m.precision, m.recall, m.f1, m.os, m.r_value, m.token_f1
        );
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CorpusEvaluation {
    pub report: MetricReport,
    pub per_type: PerTypeReport,
}

/// Scores every utterance and sums counts before taking ratios. Each
/// hypothesis must have exactly one reference with the same id.
pub fn evaluate_corpus(
    hyps: &[TimedBoundarySet],
    refs: &[ReferenceAlignment],
    tol: f64,
    exclude_final: bool,
) -> Result<CorpusEvaluation> {
    let by_id: BTreeMap<&str, &ReferenceAlignment> = refs.iter().map(|r| (r.utterance_id.as_str(), r)).collect();
    if by_id.len() != refs.len() {
        return Err(Error::InvalidConfig("duplicate utterance ids in reference".into()));
    }
    if hyps.len() != refs.len() {
        let hyp_ids: std::collections::BTreeSet<&str> = hyps.iter().map(|h| h.utterance_id.as_str()).collect();
        let missing = by_id
            .keys()
            .find(|id| !hyp_ids.contains(*id))
            .map_or("<extra>".to_string(), |s| s.to_string());
        return Err(Error::UtteranceMismatch {
            hyp: format!("{} utterances", hyps.len()),
            reference: format!("{} utterances, first unmatched {missing}", refs.len()),
        });
    }
    let mut b = BoundaryCounts::default();
    let mut t = TokenCounts::default();
    let mut per_type = PerTypeReport::default();
    for h in hyps {
        let r = by_id.get(h.utterance_id.as_str()).ok_or_else(|| Error::UtteranceMismatch {
            hyp: h.utterance_id.clone(),
            reference: "<missing>".into(),
        })?;
        b += boundary_counts(h, &r.boundaries(), tol, exclude_final)?;
        t += token_counts(h, r, tol)?;
        per_type.add(h, r, tol)?;
    }
    Ok(CorpusEvaluation {
        report: MetricReport::from_counts(b, t),
        per_type,
    })
}

/// Reference tokens for 1-based segment end positions, all labelled `seg`.
pub fn segment_end_alignment(utterance_id: &str, ends: &[usize]) -> Result<ReferenceAlignment> {
    let mut start = 0;
    let mut tokens = Vec::with_capacity(ends.len());
    for &end in ends {
        tokens.push(RefToken {
            start: start as f64,
            end: end as f64,
            label: "seg".into(),
        });
        start = end;
    }
    ReferenceAlignment::new(utterance_id, tokens)
}

/// Scores segmentations of symbol sequences given as end positions.
/// Positions act as times one unit apart and must match exactly; the final
/// boundary is not scored.
pub fn evaluate_segment_ends(
    hyps: &[(String, Vec<usize>)],
    refs: &[(String, Vec<usize>)],
) -> Result<CorpusEvaluation> {
    let hyps = hyps
        .iter()
        .map(|(id, e)| TimedBoundarySet::from_frame_ends(id.as_str(), e, e.last().copied().unwrap_or(0), 1.0))
        .collect::<Result<Vec<_>>>()?;
    let refs = refs
        .iter()
        .map(|(id, e)| segment_end_alignment(id, e))
        .collect::<Result<Vec<_>>>()?;
    evaluate_corpus(&hyps, &refs, 0.0, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn utt(id: &str, edges: &[f64]) -> ReferenceAlignment {
        let tokens = edges
            .windows(2)
            .map(|w| RefToken {
                start: w[0],
                end: w[1],
                label: "w".into(),
            })
            .collect();
        ReferenceAlignment::new(id, tokens).unwrap()
    }

    #[test]
    fn corpus_counts_are_summed_first() {
        let refs = vec![utt("a", &[0.0, 1.0, 2.0]), utt("b", &[0.0, 1.0, 2.0, 3.0, 4.0])];
        let hyps = vec![
            TimedBoundarySet::new("b", vec![1.0, 2.0, 3.0, 4.0], 4.0).unwrap(),
            TimedBoundarySet::new("a", vec![0.5, 2.0], 2.0).unwrap(),
        ];
        let e = evaluate_corpus(&hyps, &refs, 0.01, true).unwrap();
        // a: 0/1 hit, b: 3/3 hit
        assert_eq!(e.report.boundary, BoundaryCounts { n_ref: 4, n_hyp: 4, n_hit: 3 });
        assert_eq!(e.report.recall, 75.0);
        assert_eq!(e.report.token, TokenCounts { n_ref: 6, n_hyp: 6, n_hit: 4 });
    }

    #[test]
    fn missing_hypothesis_is_an_error() {
        let refs = vec![utt("a", &[0.0, 1.0]), utt("b", &[0.0, 1.0])];
        let hyps = vec![TimedBoundarySet::new("a", vec![1.0], 1.0).unwrap()];
        assert!(evaluate_corpus(&hyps, &refs, 0.01, true).is_err());
    }

    #[test]
    fn report_invariants_and_output() {
        let m = MetricReport::from_counts(
            BoundaryCounts { n_ref: 10, n_hyp: 12, n_hit: 7 },
            TokenCounts { n_ref: 8, n_hyp: 9, n_hit: 3 },
        );
        assert!((m.f1 - 2.0 * m.precision * m.recall / (m.precision + m.recall)).abs() < 1e-12);
        assert!((m.os - 20.0).abs() < 1e-12);
        let kv = m.to_key_values();
        assert!(kv.contains("os=20.0000"));
        assert!(kv.contains("n_token_hit=3"));
        let table = format_table(&[("dpdp", &m)]);
        for col in ["Prec.", "Rec.", "F1", "OS", "R-val.", "TokenF1"] {
            assert!(table.contains(col));
        }
    }

    #[test]
    fn segment_ends_score_exactly() {
        let refs = vec![("a".to_string(), vec![2, 4, 7])];
        let same = evaluate_segment_ends(&refs, &refs).unwrap();
        assert_eq!((same.report.f1, same.report.token_f1), (100.0, 100.0));
        let hyps = vec![("a".to_string(), vec![2, 3, 7])];
        let e = evaluate_segment_ends(&hyps, &refs).unwrap();
        assert_eq!((e.report.boundary.n_hit, e.report.token.n_hit), (1, 1));
    }
}
