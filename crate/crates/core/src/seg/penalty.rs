// SPDX-License-Identifier: MIT OR Apache-2.0

use crate::error::{Error, Result};

/// Shape of the duration term `w_dur(l)`.
#[derive(Clone, Debug, PartialEq)]
pub enum DurationKind {
    /// `w_dur(l) = 0`.
    None,
    /// `w_dur(l) = 1 - l`; rewards longer spans linearly.
    Linear,
    /// `w_dur(l) = -ln p(l)` with `p` a gamma density evaluated at
    /// `l = 1..=truncation` and renormalised; `+∞` beyond the truncation.
    GammaPmf {
        shape: f64,
        scale: f64,
        truncation: usize,
    },
}

/// Duration penalty `λ·w_dur(l) + c` added to every span.
///
/// The per-span constant `c` implements a geometric prior over the number of
/// segments; it is zero unless set explicitly.
#[derive(Clone, Debug, PartialEq)]
pub struct DurationPenalty {
    kind: DurationKind,
    lambda: f64,
    segment_constant: f64,
    neg_log_pmf: Vec<f64>,
}

impl DurationPenalty {
    pub fn none() -> Self {
        Self {
            kind: DurationKind::None,
            lambda: 0.0,
            segment_constant: 0.0,
            neg_log_pmf: Vec::new(),
        }
    }

    pub fn linear(lambda: f64) -> Self {
        assert!(lambda >= 0.0 && lambda.is_finite(), "lambda must be >= 0");
        Self {
            kind: DurationKind::Linear,
            lambda,
            ..Self::none()
        }
    }

    pub fn gamma(lambda: f64, shape: f64, scale: f64, truncation: usize) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda must be >= 0, got {lambda}")));
        }
        if !(shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "gamma shape and scale must be positive, got shape={shape} scale={scale}"
            )));
        }
        if truncation == 0 {
            return Err(Error::InvalidConfig("gamma truncation must be >= 1".into()));
        }
        // Unnormalised log density; the normalising constant of the continuous
        // gamma cancels in the renormalisation over 1..=truncation.
        let log_density: Vec<f64> = (1..=truncation)
            .map(|l| {
                let x = l as f64;
                (shape - 1.0) * x.ln() - x / scale
            })
            .collect();
        let max = log_density.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_norm = max + log_density.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        Ok(Self {
            kind: DurationKind::GammaPmf {
                shape,
                scale,
                truncation,
            },
            lambda,
            segment_constant: 0.0,
            neg_log_pmf: log_density.iter().map(|v| log_norm - v).collect(),
        })
    }

    /// Sets the per-span additive constant.
    pub fn with_segment_constant(mut self, constant: f64) -> Self {
        self.segment_constant = constant;
        self
    }

    /// Per-span constant for a geometric prior `P(n) ∝ q^(n-1)` over the
    /// number of segments, `q` being the probability of starting another one.
    pub fn geometric_segment_constant(continue_prob: f64) -> Result<f64> {
        if !(continue_prob > 0.0 && continue_prob < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "geometric continue probability must lie in (0, 1), got {continue_prob}"
            )));
        }
        Ok(-continue_prob.ln())
    }

    pub fn kind(&self) -> &DurationKind {
        &self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn segment_constant(&self) -> f64 {
        self.segment_constant
    }

    /// Longest span with a finite penalty, if bounded.
    pub fn max_finite_len(&self) -> Option<usize> {
        match self.kind {
            DurationKind::GammaPmf { truncation, .. } => Some(truncation),
            _ => None,
        }
    }

    /// Unweighted `w_dur(l)`.
    pub fn duration_cost(&self, len: usize) -> f64 {
        debug_assert!(len >= 1);
        match self.kind {
            DurationKind::None => 0.0,
            DurationKind::Linear => 1.0 - len as f64,
            DurationKind::GammaPmf { .. } => self
                .neg_log_pmf
                .get(len - 1)
                .copied()
                .unwrap_or(f64::INFINITY),
        }
    }

    /// `λ·w_dur(l) + c`.
    #[inline]
    pub fn weight(&self, len: usize) -> f64 {
        let dur = self.duration_cost(len);
        if dur.is_infinite() {
            return f64::INFINITY;
        }
        self.lambda * dur + self.segment_constant
    }
}
