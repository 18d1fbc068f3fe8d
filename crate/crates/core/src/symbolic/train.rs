// SPDX-License-Identifier: MIT OR Apache-2.0

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::aernn::{Aernn, AernnArch};
use super::engine::ScoringEngine;
use super::params::Params;
use super::SymbolSequence;
use crate::error::{Error, Result};
use crate::seg::CostTable;

/// Optimisation schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Number of optimizer updates.
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Parameters start uniform in `[-init_scale, init_scale]`.
    pub init_scale: f64,
    /// Global gradient-norm clip, if any.
    pub clip_norm: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 1500,
            batch_size: 32,
            learning_rate: 1e-3,
            init_scale: 0.08,
            clip_norm: Some(5.0),
            seed: 1,
        }
    }
}

/// Provenance stored alongside a trained scorer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub utterances: usize,
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    /// Mean per-token loss of the batch seen at every step.
    pub losses: Vec<f64>,
    /// Mean per-token loss on a fixed probe subset before and after training.
    pub probe_initial: f64,
    pub probe_final: f64,
}

/// A trained, frozen AE-RNN.
///
/// Parameters are rounded to `f32` when training finishes so that the
/// in-memory scorer and its serialized form score identically. Segment
/// costs are computed in single precision.
#[derive(Clone, Debug)]
pub struct AernnScorer {
    net: Aernn,
    meta: TrainingMeta,
    engine: ScoringEngine,
}

impl AernnScorer {
    pub fn new(mut net: Aernn, meta: TrainingMeta) -> Self {
        for v in net.params_mut().values_mut() {
            *v = *v as f32 as f64;
        }
        let engine = ScoringEngine::new(&net);
        Self { net, meta, engine }
    }

    /// Reconstruction NLL of one span of symbols `1..=K`.
    pub fn span_cost(&self, span: &[usize]) -> f64 {
        self.engine.span_cost(span)
    }

    /// Costs of every span of `symbols` up to `max_len` long; longer spans
    /// cost `+∞`.
    pub fn span_cost_table(&self, symbols: &[usize], max_len: usize) -> CostTable {
        self.engine.span_cost_table(symbols, max_len)
    }

    pub fn net(&self) -> &Aernn {
        &self.net
    }

    pub fn arch(&self) -> &AernnArch {
        self.net.arch()
    }

    pub fn meta(&self) -> &TrainingMeta {
        &self.meta
    }

    pub fn alphabet_size(&self) -> usize {
        self.net.arch().alphabet_size
    }

    pub fn fingerprint(&self) -> String {
        self.net.params().fingerprint()
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr,
        }
    }

    fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for (((p, &g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
            *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }
}

fn check_corpus(corpus: &[SymbolSequence], arch: &AernnArch) -> Result<()> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput);
    }
    for seq in corpus {
        if seq.alphabet_size != arch.alphabet_size {
            return Err(Error::AlphabetMismatch {
                scorer: arch.alphabet_size,
                input: seq.alphabet_size,
            });
        }
        if let Some(&symbol) = seq.symbols.iter().find(|&&s| s == 0 || s > arch.alphabet_size) {
            return Err(Error::SymbolOutOfRange {
                symbol,
                alphabet_size: arch.alphabet_size,
            });
        }
    }
    Ok(())
}

fn mean_loss(net: &Aernn, seqs: &[&[usize]]) -> f64 {
    let (sum, tokens) = seqs
        .chunks(32)
        .map(|chunk| net.loss(chunk))
        .fold((0.0, 0), |(s, t), l| (s + l.sum, t + l.tokens));
    sum / tokens as f64
}

/// Trains the autoencoder to reconstruct every full utterance of `corpus`.
///
/// Utterances are sorted by length and chunked into batches of similar
/// length; batch order is reshuffled every epoch. Each step minimises the
/// mean per-token cross-entropy with Adam.
pub fn train_aernn(
    corpus: &[SymbolSequence],
    arch: AernnArch,
    config: &TrainConfig,
) -> Result<(AernnScorer, TrainReport)> {
    arch.validate()?;
    check_corpus(corpus, &arch)?;
    if config.steps == 0 || config.batch_size == 0 {
        return Err(Error::InvalidConfig("steps and batch_size must be >= 1".into()));
    }

    let mut net = Aernn::init_uniform(arch, config.init_scale, config.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x5eed));

    let mut by_len: Vec<usize> = (0..corpus.len()).collect();
    by_len.sort_by_key(|&i| (corpus[i].len(), i));
    let batches: Vec<Vec<&[usize]>> = by_len
        .chunks(config.batch_size)
        .map(|c| c.iter().map(|&i| corpus[i].symbols.as_slice()).collect())
        .collect();

    let stride = corpus.len().div_ceil(64);
    let probe: Vec<&[usize]> = corpus.iter().step_by(stride).map(|s| s.symbols.as_slice()).collect();
    let probe_initial = mean_loss(&net, &probe);

    let mut grad: Params = net.params().zeros_like();
    let mut adam = Adam::new(grad.len(), config.learning_rate);
    let mut losses = Vec::with_capacity(config.steps);
    let mut order: Vec<usize> = Vec::new();

    for step in 0..config.steps {
        if order.is_empty() {
            order = (0..batches.len()).collect();
            order.shuffle(&mut rng);
            order.reverse();
        }
        let batch = &batches[order.pop().expect("refilled above")];

        grad.fill(0.0);
        let loss = net.loss_and_grad(batch, &mut grad);
        let scale = 1.0 / loss.tokens as f64;
        grad.values_mut().iter_mut().for_each(|g| *g *= scale);
        let norm = grad.norm();
        let mean = loss.mean();
        if !mean.is_finite() || !norm.is_finite() {
            return Err(Error::Training {
                step,
                detail: format!("loss {mean}, gradient norm {norm}, batch of {}", batch.len()),
            });
        }
        if let Some(clip) = config.clip_norm {
            if norm > clip {
                let s = clip / norm;
                grad.values_mut().iter_mut().for_each(|g| *g *= s);
            }
        }
        adam.update(net.params_mut().values_mut(), grad.values());
        losses.push(mean);
    }

    let meta = TrainingMeta {
        steps: config.steps,
        batch_size: config.batch_size,
        learning_rate: config.learning_rate,
        seed: config.seed,
        utterances: corpus.len(),
    };
    let scorer = AernnScorer::new(net, meta);
    let probe_final = mean_loss(scorer.net(), &probe);
    Ok((
        scorer,
        TrainReport {
            losses,
            probe_initial,
            probe_final,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arch(k: usize) -> AernnArch {
        AernnArch {
            alphabet_size: k,
            embedding_dim: 4,
            encoder_hidden: 8,
            encoder_layers: 1,
            latent_dim: 4,
            decoder_hidden: 8,
            end_symbol: true,
        }
    }

    #[test]
    fn rejects_alphabet_mismatch() {
        let corpus = vec![SymbolSequence::new("a", vec![1, 2], 3).unwrap()];
        let err = train_aernn(&corpus, arch(4), &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, Error::AlphabetMismatch { .. }));
        assert!(matches!(train_aernn(&[], arch(4), &TrainConfig::default()), Err(Error::EmptyInput)));
    }

    #[test]
    fn divergence_is_reported() {
        let corpus = vec![SymbolSequence::new("a", vec![1, 2, 3], 3).unwrap()];
        let config = TrainConfig {
            steps: 3,
            learning_rate: f64::NAN,
            ..TrainConfig::default()
        };
        let err = train_aernn(&corpus, arch(3), &config).unwrap_err();
        assert!(matches!(err, Error::Training { step: 1, .. }), "{err}");
    }

    #[test]
    fn short_run_reduces_loss() {
        let corpus: Vec<_> = (0..8)
            .map(|i| SymbolSequence::new(format!("u{i}"), vec![1, 2, 3, 1, 2, 3][..3 + i % 4].to_vec(), 3).unwrap())
            .collect();
        let config = TrainConfig {
            steps: 60,
            batch_size: 4,
            learning_rate: 1e-2,
            ..TrainConfig::default()
        };
        let (scorer, report) = train_aernn(&corpus, arch(3), &config).unwrap();
        assert_eq!(report.losses.len(), 60);
        assert!(report.losses.iter().all(|l| l.is_finite()));
        assert!(report.probe_final < report.probe_initial);
        assert!(scorer.net().params().values().iter().all(|&v| v == v as f32 as f64));
    }
}
