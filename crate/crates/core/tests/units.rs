// SPDX-License-Identifier: MIT OR Apache-2.0

use dpdp::seg::{brute_force_segment, span_weight, DurationPenalty, SegmentCost};
use dpdp::synth::{generate_synthetic_speechlike, SpeechlikeConfig};
use dpdp::units::{encode_utterance, kmeans_fit, merge_repeats_features, Codebook, FeatureSequence, VqCost};
use ndarray::{Array2, ArrayView1};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(-2.0f64..2.0, rows * cols).prop_map(move |v| Array2::from_shape_vec((rows, cols), v).unwrap())
}

fn naive_cost(frames: &Array2<f64>, codes: &Array2<f64>, a: usize, b: usize) -> f64 {
    let dist = |x: ArrayView1<f64>, e: ArrayView1<f64>| x.iter().zip(e).map(|(p, q)| (p - q) * (p - q)).sum::<f64>();
    codes
        .outer_iter()
        .map(|e| (a - 1..b).map(|t| dist(frames.row(t), e)).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prefix_sum_cost_matches_direct_sum(
        (t, d, k) in (1usize..12, 1usize..5, 1usize..6),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let frames = Array2::from_shape_simple_fn((t, d), || normal.sample(&mut rng));
        let codes = Array2::from_shape_simple_fn((k, d), || normal.sample(&mut rng));
        let Ok(codebook) = Codebook::new(codes.clone(), "test") else { return Ok(()) };
        let f = FeatureSequence::new("u", frames.clone(), 0.01).unwrap();
        let cost = VqCost::new(&f, &codebook).unwrap();
        for a in 1..=t {
            for b in a..=t {
                let want = naive_cost(&frames, &codes, a, b);
                prop_assert!((cost.cost(a, b) - want).abs() <= 1e-9 * want.max(1.0));
            }
        }
    }

    #[test]
    fn encoding_reaches_the_exhaustive_minimum(frames in matrix(9, 3), codes in matrix(4, 3), lambda in 0.0f64..3.0) {
        let Ok(codebook) = Codebook::new(codes, "test") else { return Ok(()) };
        let f = FeatureSequence::new("u", frames, 0.01).unwrap();
        let units = encode_utterance(&f, &codebook, lambda, 9).unwrap();
        let cost = VqCost::new(&f, &codebook).unwrap();
        let penalty = DurationPenalty::linear(lambda);
        let best = brute_force_segment(&cost, &penalty, 9).unwrap();
        let spans = units.spans();
        let got = spans
            .iter()
            .fold(0.0, |acc, s| acc + span_weight(&cost, &penalty, s.start, s.end));
        prop_assert_eq!(got, best.total_cost);
        for (s, &c) in spans.iter().zip(&units.codes) {
            prop_assert_eq!(cost.best_code(s.start, s.end).0, c);
        }
    }
}

#[test]
fn kmeans_recovers_separated_blobs() {
    let centers = ndarray::array![[0.0, 0.0], [3.0, 0.0], [0.0, 3.0], [3.0, 3.0]];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let features: Vec<FeatureSequence> = (0..8)
        .map(|u| {
            let frames = Array2::from_shape_fn((100, 2), |(t, j)| centers[[(t + u) % 4, j]] + noise.sample(&mut rng));
            FeatureSequence::new(format!("u{u}"), frames, 0.01).unwrap()
        })
        .collect();
    let fit = kmeans_fit(&features, 4, 50, 1).unwrap();
    for c in centers.outer_iter() {
        let (_, d) = fit.codebook.nearest(c);
        assert!(d.sqrt() < 0.1, "center {c} is {} from its code", d.sqrt());
    }
    assert!(fit.inertia.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
}

#[test]
fn noiseless_merge_recovers_unit_boundaries() {
    let corpus = generate_synthetic_speechlike(&SpeechlikeConfig {
        num_utterances: 30,
        noise_sigma: 0.0,
        ..Default::default()
    })
    .unwrap();
    let codebook = Codebook::new(corpus.code_vectors.clone(), "truth").unwrap();
    for (f, truth) in corpus.features.iter().zip(&corpus.units) {
        let units = merge_repeats_features(f, &codebook).unwrap();
        let ends: Vec<f64> = units.boundaries.iter().map(|&b| b as f64 * f.frame_period_s).collect();
        let want: Vec<f64> = truth.tokens.iter().map(|t| t.end).collect();
        assert_eq!(ends.len(), want.len());
        assert!(ends.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-9));
        let labels: Vec<String> = units.codes.iter().map(ToString::to_string).collect();
        let want_labels: Vec<&str> = truth.tokens.iter().map(|t| t.label.as_str()).collect();
        assert_eq!(labels, want_labels);
    }
}

#[test]
fn larger_lambda_gives_fewer_units() {
    let corpus = generate_synthetic_speechlike(&SpeechlikeConfig {
        num_utterances: 5,
        noise_sigma: 0.3,
        ..Default::default()
    })
    .unwrap();
    let codebook = Codebook::new(corpus.code_vectors.clone(), "truth").unwrap();
    for f in &corpus.features {
        let counts: Vec<usize> = [0.0, 0.5, 2.0, 8.0]
            .iter()
            .map(|&l| encode_utterance(f, &codebook, l, 100).unwrap().num_units())
            .collect();
        assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{counts:?}");
    }
}
