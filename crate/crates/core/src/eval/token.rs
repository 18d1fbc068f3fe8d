// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::AddAssign;

use super::{check_same_utterance, harmonic_mean, percent, ReferenceAlignment, TimedBoundarySet, TIME_EPSILON};
use crate::error::Result;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TokenCounts {
    pub n_ref: usize,
    pub n_hyp: usize,
    pub n_hit: usize,
}

impl AddAssign for TokenCounts {
    fn add_assign(&mut self, o: Self) {
        self.n_ref += o.n_ref;
        self.n_hyp += o.n_hyp;
        self.n_hit += o.n_hit;
    }
}

impl TokenCounts {
    pub fn precision(&self) -> f64 {
        percent(self.n_hit, self.n_hyp)
    }

    pub fn recall(&self) -> f64 {
        percent(self.n_hit, self.n_ref)
    }

    pub fn f1(&self) -> f64 {
        harmonic_mean(self.precision(), self.recall())
    }
}

/// Hypothesis tokens `(start, end)` implied by a boundary set.
fn hyp_tokens(hyp: &TimedBoundarySet) -> Vec<(f64, f64)> {
    let mut edges = Vec::with_capacity(hyp.boundaries.len() + 2);
    edges.push(0.0);
    edges.extend_from_slice(hyp.scored(true));
    edges.push(hyp.terminal);
    edges.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Per reference token: whether some hypothesis token has both edges within
/// `tol` of it. Each hypothesis token is used at most once.
fn token_hits(hyp: &TimedBoundarySet, reference: &ReferenceAlignment, tol: f64) -> Result<(Vec<bool>, usize)> {
    check_same_utterance(
        &hyp.utterance_id,
        &reference.utterance_id,
        hyp.terminal,
        reference.terminal(),
        tol,
    )?;
    let limit = tol + TIME_EPSILON;
    let hyps = hyp_tokens(hyp);
    let mut used = vec![false; hyps.len()];
    let mut lo = 0;
    let hits = reference
        .tokens
        .iter()
        .map(|t| {
            while lo < hyps.len() && hyps[lo].0 < t.start - limit {
                lo += 1;
            }
            let found = (lo..hyps.len())
                .take_while(|&j| hyps[j].0 <= t.start + limit)
                .find(|&j| !used[j] && (hyps[j].1 - t.end).abs() <= limit);
            if let Some(j) = found {
                used[j] = true;
            }
            found.is_some()
        })
        .collect();
    Ok((hits, hyps.len()))
}

/// Token counts for one utterance. A reference token is hit when both of
/// its edges are matched and no hypothesis boundary falls between them.
pub fn token_counts(hyp: &TimedBoundarySet, reference: &ReferenceAlignment, tol: f64) -> Result<TokenCounts> {
    let (hits, n_hyp) = token_hits(hyp, reference, tol)?;
    Ok(TokenCounts {
        n_ref: hits.len(),
        n_hyp,
        n_hit: hits.iter().filter(|&&h| h).count(),
    })
}

/// Token precision, recall and F1 for one utterance.
pub fn token_f1(hyp: &TimedBoundarySet, reference: &ReferenceAlignment, tol: f64) -> Result<super::MetricReport> {
    let counts = token_counts(hyp, reference, tol)?;
    Ok(super::MetricReport::from_counts(Default::default(), counts))
}

#[derive(Clone, Debug, Default, PartialEq)]
struct TypeTally {
    count: usize,
    hit_durations: Vec<f64>,
}

/// Token recall per reference label, accumulated over utterances.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PerTypeReport {
    types: BTreeMap<String, TypeTally>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TypeRecall {
    pub label: String,
    pub count: usize,
    pub hits: usize,
    pub recall: f64,
    /// Mean and population standard deviation of hit token durations, in
    /// seconds; zero when nothing was hit.
    pub mean_duration_s: f64,
    pub std_duration_s: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl PerTypeReport {
    pub fn add(&mut self, hyp: &TimedBoundarySet, reference: &ReferenceAlignment, tol: f64) -> Result<()> {
        let (hits, _) = token_hits(hyp, reference, tol)?;
        for (t, hit) in reference.tokens.iter().zip(hits) {
            let tally = self.types.entry(t.label.clone()).or_default();
            tally.count += 1;
            if hit {
                tally.hit_durations.push(t.end - t.start);
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &PerTypeReport) {
        for (label, t) in &other.types {
            let tally = self.types.entry(label.clone()).or_default();
            tally.count += t.count;
            tally.hit_durations.extend_from_slice(&t.hit_durations);
        }
    }

    /// Types with at least `min_count` tokens, highest recall first; ties
    /// by count (descending) then label.
    pub fn rows(&self, min_count: usize) -> Vec<TypeRecall> {
        let mut rows: Vec<TypeRecall> = self
            .types
            .iter()
            .filter(|(_, t)| t.count >= min_count.max(1))
            .map(|(label, t)| {
                let (mean, std) = mean_std(&t.hit_durations);
                TypeRecall {
                    label: label.clone(),
                    count: t.count,
                    hits: t.hit_durations.len(),
                    recall: percent(t.hit_durations.len(), t.count),
                    mean_duration_s: mean,
                    std_duration_s: std,
                }
            })
            .collect();
        rows.sort_by(|a, b| {
            b.recall
                .total_cmp(&a.recall)
                .then(b.count.cmp(&a.count))
                .then_with(|| a.label.cmp(&b.label))
        });
        rows
    }

    /// Mean and population standard deviation of all hit token durations.
    pub fn hit_duration_stats(&self) -> (f64, f64) {
        let all: Vec<f64> = self.types.values().flat_map(|t| t.hit_durations.iter().copied()).collect();
        mean_std(&all)
    }

    pub fn format_table(&self, min_count: usize) -> String {
        let rows = self.rows(min_count);
        let width = rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(5);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>6}  {:>6}  {:>7}  {:>9}  {:>9}", "label", "count", "hits", "recall", "mean_ms", "std_ms");
        for r in &rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>6}  {:>6}  {:>7.1}  {:>9.1}  {:>9.1}",
                r.label,
                r.count,
                r.hits,
                r.recall,
                r.mean_duration_s * 1e3,
                r.std_duration_s * 1e3
            );
        }
        let (mean, std) = self.hit_duration_stats();
        let _ = writeln!(out, "hit token duration: {:.1} ms (std {:.1} ms)", mean * 1e3, std * 1e3);
        out
    }
}

/// Per-label token recall for one utterance.
pub fn per_type_recall(hyp: &TimedBoundarySet, reference: &ReferenceAlignment, tol: f64) -> Result<PerTypeReport> {
    let mut report = PerTypeReport::default();
    report.add(hyp, reference, tol)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::super::RefToken;
    use super::*;

    fn align(edges: &[f64], labels: &[&str]) -> ReferenceAlignment {
        let tokens = edges
            .windows(2)
            .zip(labels)
            .map(|(w, l)| RefToken {
                start: w[0],
                end: w[1],
                label: l.to_string(),
            })
            .collect();
        ReferenceAlignment::new("u", tokens).unwrap()
    }

    fn hyp(b: &[f64], terminal: f64) -> TimedBoundarySet {
        TimedBoundarySet::new("u", b.to_vec(), terminal).unwrap()
    }

    #[test]
    fn exact_edges_give_full_score() {
        let r = align(&[0.0, 0.3, 0.5, 0.9], &["a", "b", "c"]);
        let c = token_counts(&hyp(&[0.3, 0.5, 0.9], 0.9), &r, 0.02).unwrap();
        assert_eq!(c.f1(), 100.0);
    }

    #[test]
    fn internal_boundary_breaks_token() {
        let r = align(&[0.0, 0.6, 1.0], &["weekend", "x"]);
        let c = token_counts(&hyp(&[0.3, 0.6], 1.0), &r, 0.02).unwrap();
        assert_eq!((c.n_ref, c.n_hyp, c.n_hit), (2, 3, 1));
    }

    #[test]
    fn hand_arithmetic_fixture() {
        // reference tokens [0,1] [1,2] [2,3]; hypothesis tokens [0,1]
        // [1,1.5] [1.5,2.5] [2.5,3]
        let r = align(&[0.0, 1.0, 2.0, 3.0], &["a", "b", "c"]);
        let h = hyp(&[1.0, 1.5, 2.5], 3.0);
        let c = token_counts(&h, &r, 0.02).unwrap();
        assert_eq!((c.n_ref, c.n_hyp, c.n_hit), (3, 4, 1));
        assert!((c.recall() - 33.333).abs() < 1e-2);
        assert!((c.precision() - 25.0).abs() < 1e-12);
        assert!((c.f1() - 28.571).abs() < 1e-2);
        // the hit token's start is the utterance edge, so it needs one
        // matched boundary
        let b = super::super::boundary_counts(&h, &r.boundaries(), 0.02, true).unwrap();
        assert!(c.n_hit <= b.n_hit);
    }

    #[test]
    fn tolerance_applies_to_token_edges() {
        let r = align(&[0.0, 0.5, 1.0], &["a", "b"]);
        assert_eq!(token_counts(&hyp(&[0.51], 1.0), &r, 0.02).unwrap().n_hit, 2);
        assert_eq!(token_counts(&hyp(&[0.53], 1.0), &r, 0.02).unwrap().n_hit, 0);
    }

    #[test]
    fn per_type_fixture() {
        // type "a": 4 tokens, 3 hit; type "b": 5 tokens, 1 hit
        let edges: Vec<f64> = (0..=9).map(|i| i as f64).collect();
        let labels = ["a", "b", "a", "b", "a", "b", "a", "b", "b"];
        let r = align(&edges, &labels);
        // hits: tokens 0, 2, 4 (a) and 1 (b); the rest are split or merged
        let h = hyp(&[1.0, 2.0, 3.0, 3.5, 4.0, 5.0, 5.5, 6.0, 9.0], 9.0);
        let report = per_type_recall(&h, &r, 0.1).unwrap();
        let rows = report.rows(1);
        assert_eq!(rows[0].label, "a");
        assert_eq!((rows[0].hits, rows[0].count, rows[0].recall), (3, 4, 75.0));
        assert_eq!((rows[1].hits, rows[1].count, rows[1].recall), (1, 5, 20.0));
        assert_eq!(rows[0].mean_duration_s, 1.0);
        assert!(report.rows(5).iter().all(|r| r.label == "b"));
    }

    #[test]
    fn per_type_extremes() {
        let r = align(&[0.0, 1.0, 2.0], &["a", "b"]);
        let rows = per_type_recall(&hyp(&[1.0], 2.0), &r, 0.0).unwrap().rows(1);
        assert!(rows.iter().all(|r| r.recall == 100.0));
        let rows = per_type_recall(&hyp(&[0.5, 1.5], 2.0), &r, 0.0).unwrap().rows(1);
        assert!(rows.iter().all(|r| r.recall == 0.0));
    }
}
