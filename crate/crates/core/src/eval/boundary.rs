// SPDX-License-Identifier: MIT OR Apache-2.0

use std::ops::AddAssign;

use super::{check_same_utterance, harmonic_mean, percent, TimedBoundarySet, TIME_EPSILON};
use crate::error::Result;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BoundaryCounts {
    pub n_ref: usize,
    pub n_hyp: usize,
    pub n_hit: usize,
}

impl AddAssign for BoundaryCounts {
    fn add_assign(&mut self, o: Self) {
        self.n_ref += o.n_ref;
        self.n_hyp += o.n_hyp;
        self.n_hit += o.n_hit;
    }
}

impl BoundaryCounts {
    /// Both sets empty counts as a perfect score.
    pub fn precision(&self) -> f64 {
        if self.n_hyp == 0 && self.n_ref == 0 {
            100.0
        } else {
            percent(self.n_hit, self.n_hyp)
        }
    }

    pub fn recall(&self) -> f64 {
        if self.n_hyp == 0 && self.n_ref == 0 {
            100.0
        } else {
            percent(self.n_hit, self.n_ref)
        }
    }

    pub fn f1(&self) -> f64 {
        harmonic_mean(self.precision(), self.recall())
    }

    /// `(n_hyp / n_ref - 1) * 100`; infinite when only the reference is empty.
    pub fn os(&self) -> f64 {
        match (self.n_ref, self.n_hyp) {
            (0, 0) => 0.0,
            (0, _) => f64::INFINITY,
            (r, h) => (h as f64 / r as f64 - 1.0) * 100.0,
        }
    }

    pub fn r_value(&self) -> f64 {
        r_value(self.recall(), self.os())
    }
}

/// Composite boundary score from hit rate and over-segmentation, both in
/// percent. 100 is perfect.
pub fn r_value(recall_pct: f64, os_pct: f64) -> f64 {
    let hr = recall_pct / 100.0;
    let os = os_pct / 100.0;
    let r1 = ((1.0 - hr).powi(2) + os * os).sqrt();
    let r2 = (-os + hr - 1.0) / std::f64::consts::SQRT_2;
    (1.0 - (r1.abs() + r2.abs()) / 2.0) * 100.0
}

/// One-to-one matching of sorted boundary lists within `tol`: candidate
/// pairs are taken nearest first, ties broken by position. Returns the
/// number of matched pairs.
pub(crate) fn match_count(hyp: &[f64], reference: &[f64], tol: f64) -> usize {
    let limit = tol + TIME_EPSILON;
    let mut pairs: Vec<(f64, f64, f64, usize, usize)> = Vec::new();
    let mut lo = 0;
    for (i, &r) in reference.iter().enumerate() {
        while lo < hyp.len() && hyp[lo] < r - limit {
            lo += 1;
        }
        for (j, &h) in hyp.iter().enumerate().skip(lo) {
            if h > r + limit {
                break;
            }
            pairs.push(((h - r).abs(), h.min(r), h.max(r), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
    let mut ref_used = vec![false; reference.len()];
    let mut hyp_used = vec![false; hyp.len()];
    let mut hits = 0;
    for &(_, _, _, i, j) in &pairs {
        if !ref_used[i] && !hyp_used[j] {
            ref_used[i] = true;
            hyp_used[j] = true;
            hits += 1;
        }
    }
    hits
}

/// Boundary counts for one utterance.
pub fn boundary_counts(
    hyp: &TimedBoundarySet,
    reference: &TimedBoundarySet,
    tol: f64,
    exclude_final: bool,
) -> Result<BoundaryCounts> {
    check_same_utterance(&hyp.utterance_id, &reference.utterance_id, hyp.terminal, reference.terminal, tol)?;
    let h = hyp.scored(exclude_final);
    let r = reference.scored(exclude_final);
    Ok(BoundaryCounts {
        n_ref: r.len(),
        n_hyp: h.len(),
        n_hit: match_count(h, r, tol),
    })
}

/// Boundary precision, recall, F1, OS and R-value for one utterance, with
/// utterance-final boundaries excluded.
pub fn boundary_metrics(hyp: &TimedBoundarySet, reference: &TimedBoundarySet, tol: f64) -> Result<super::MetricReport> {
    let counts = boundary_counts(hyp, reference, tol, true)?;
    Ok(super::MetricReport::from_counts(counts, Default::default()))
}
