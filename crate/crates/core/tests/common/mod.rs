// SPDX-License-Identifier: MIT OR Apache-2.0

#![allow(dead_code)]

use dpdp::symbolic::Aernn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Step of the five-point difference stencil.
pub const FD_STEP: f64 = 1e-4;

/// Worst analytic-versus-numeric disagreement over sampled parameters.
#[derive(Debug)]
pub struct GradCheck {
    pub samples: usize,
    pub max_rel_error: f64,
    pub worst: String,
}

/// `|a - n| / max(|a|, |n|, 1e-6)`: relative error, with a floor so that
/// exactly-zero gradients compare as equal.
pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Compares `loss_and_grad` with five-point differences of `loss` on
/// `samples` parameters. Each sample picks a tensor uniformly, then an
/// entry whose analytic gradient is nonzero when the tensor has one.
pub fn finite_difference_check(net: &Aernn, batch: &[&[usize]], samples: usize, seed: u64) -> GradCheck {
    let mut grad = net.params().zeros_like();
    net.loss_and_grad(batch, &mut grad);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = net.params().entries().to_vec();
    let mut probe = net.clone();
    let mut out = GradCheck {
        samples,
        max_rel_error: 0.0,
        worst: String::new(),
    };
    for _ in 0..samples {
        let e = &entries[rng.random_range(0..entries.len())];
        let range = e.range();
        let nonzero: Vec<usize> = range.clone().filter(|&i| grad.values()[i] != 0.0).collect();
        let i = if nonzero.is_empty() {
            rng.random_range(range.clone())
        } else {
            nonzero[rng.random_range(0..nonzero.len())]
        };
        let orig = probe.params().values()[i];
        let mut at = |offset: f64| {
            probe.params_mut().values_mut()[i] = orig + offset;
            probe.loss(batch).sum
        };
        let h = FD_STEP;
        let numeric = (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h);
        probe.params_mut().values_mut()[i] = orig;
        let analytic = grad.values()[i];
        let err = rel_error(analytic, numeric);
        if err > out.max_rel_error || out.worst.is_empty() {
            out.max_rel_error = out.max_rel_error.max(err);
            out.worst = format!("{}[{}]: analytic {analytic:e}, numeric {numeric:e}", e.name, i - range.start);
        }
    }
    out
}

/// Segment ends from a vector of per-sequence segmentations.
pub fn ends_with_ids(ids: impl IntoIterator<Item = String>, ends: impl IntoIterator<Item = Vec<usize>>) -> Vec<(String, Vec<usize>)> {
    ids.into_iter().zip(ends).collect()
}

/// A scorer for which every single symbol is its own cheapest word.
///
/// All weights are zero except: symbol embeddings are `e_1` (the start
/// token embeds to zero), the decoder's candidate gate for hidden unit 0
/// reads that input with weight 5, and hidden unit 0 drives the end token
/// with weight 20. After the start token the output is uniform; after any
/// symbol the end token takes almost all the mass, so a span of length
/// `l` costs about `ln(K + 1) + 10·(l - 1)`.
pub fn singleton_scorer(alphabet_size: usize) -> dpdp::symbolic::AernnScorer {
    use dpdp::symbolic::{AernnArch, AernnScorer, TrainingMeta};
    let arch = AernnArch {
        alphabet_size,
        embedding_dim: 2,
        encoder_hidden: 2,
        encoder_layers: 1,
        latent_dim: 1,
        decoder_hidden: 2,
        end_symbol: true,
    };
    let mut net = Aernn::zeros(arch).unwrap();
    let p = net.params_mut();
    let emb = p.find("embedding").unwrap();
    for s in 0..alphabet_size {
        p.view_mut(emb)[[s, 0]] = 1.0;
    }
    let w_ih = p.find("decoder.w_ih").unwrap();
    p.view_mut(w_ih)[[0, 2 * 2]] = 5.0;
    let out = p.find("output.w").unwrap();
    p.view_mut(out)[[0, alphabet_size]] = 20.0;
    AernnScorer::new(
        net,
        TrainingMeta {
            steps: 0,
            batch_size: 0,
            learning_rate: 0.0,
            seed: 0,
            utterances: 0,
        },
    )
}
