// SPDX-License-Identifier: MIT OR Apache-2.0

//! Seeded synthetic corpora with known ground truth: piecewise-constant
//! features, speech-like feature renderings of a Zipfian artificial
//! language, and symbol-level corpora of the same kind.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Zipf};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{RefToken, ReferenceAlignment};
use crate::symbolic::SymbolSequence;
use crate::units::FeatureSequence;

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

fn check_range(name: &str, (lo, hi): (usize, usize)) -> Result<()> {
    if lo == 0 || lo > hi {
        return Err(invalid(format!("{name} range must satisfy 1 <= min <= max, got ({lo}, {hi})")));
    }
    Ok(())
}

/// Code vectors uniform in `[-1, 1]^dim`, redrawn until every pair is at
/// least `min_dist` apart.
fn code_vectors(rng: &mut ChaCha8Rng, k: usize, dim: usize, min_dist: f64) -> Result<Array2<f64>> {
    let mut codes = Array2::<f64>::zeros((k, dim));
    for i in 0..k {
        let mut tries = 0;
        loop {
            for v in codes.row_mut(i) {
                *v = rng.random_range(-1.0..1.0);
            }
            let ok = (0..i).all(|j| {
                let d2: f64 = codes.row(i).iter().zip(codes.row(j)).map(|(a, b)| (a - b).powi(2)).sum();
                d2.sqrt() >= min_dist
            });
            if ok {
                break;
            }
            tries += 1;
            if tries > 1000 {
                return Err(invalid(format!("cannot place {k} codes {min_dist} apart in {dim} dimensions")));
            }
        }
    }
    Ok(codes)
}

/// Renders a code sequence: each code becomes `durations[i]` noisy copies
/// of its vector. Values are rounded to `f32`.
fn render(
    rng: &mut ChaCha8Rng,
    vectors: &Array2<f64>,
    codes: &[usize],
    durations: &[usize],
    noise: &Normal<f64>,
) -> Array2<f64> {
    let total: usize = durations.iter().sum();
    let mut frames = Array2::<f64>::zeros((total, vectors.ncols()));
    let mut t = 0;
    for (&c, &d) in codes.iter().zip(durations) {
        for _ in 0..d {
            for (x, &mu) in frames.row_mut(t).iter_mut().zip(vectors.row(c - 1)) {
                *x = (mu + noise.sample(rng)) as f32 as f64;
            }
            t += 1;
        }
    }
    frames
}

fn noise(sigma: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, sigma).map_err(|e| invalid(format!("noise sigma {sigma}: {e}")))
}

/// Settings for [`generate_piecewise_constant`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PiecewiseConfig {
    pub num_utterances: usize,
    pub segments_per_utterance: usize,
    pub segment_frames: (usize, usize),
    pub num_codes: usize,
    pub dim: usize,
    pub noise_sigma: f64,
    pub frame_period_s: f64,
    pub seed: u64,
}

impl Default for PiecewiseConfig {
    fn default() -> Self {
        Self {
            num_utterances: 100,
            segments_per_utterance: 10,
            segment_frames: (5, 20),
            num_codes: 16,
            dim: 16,
            noise_sigma: 0.05,
            frame_period_s: 0.01,
            seed: 1,
        }
    }
}

/// Features made of constant segments plus Gaussian noise.
#[derive(Clone, Debug)]
pub struct PiecewiseCorpus {
    pub features: Vec<FeatureSequence>,
    /// True segment codes (1-based) per utterance.
    pub codes: Vec<Vec<usize>>,
    /// True segment end frames per utterance.
    pub boundaries: Vec<Vec<usize>>,
    pub code_vectors: Array2<f64>,
}

/// Each utterance has a fixed number of segments with uniform random
/// lengths; neighbouring segments never share a code.
pub fn generate_piecewise_constant(config: &PiecewiseConfig) -> Result<PiecewiseCorpus> {
    check_range("segment_frames", config.segment_frames)?;
    if config.num_codes < 2 || config.segments_per_utterance == 0 || config.dim == 0 {
        return Err(invalid("need at least 2 codes, 1 segment and 1 dimension"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let vectors = code_vectors(&mut rng, config.num_codes, config.dim, 0.5)?;
    let noise = noise(config.noise_sigma)?;
    let mut out = PiecewiseCorpus {
        features: Vec::new(),
        codes: Vec::new(),
        boundaries: Vec::new(),
        code_vectors: vectors.clone(),
    };
    for u in 0..config.num_utterances {
        let mut codes: Vec<usize> = Vec::with_capacity(config.segments_per_utterance);
        while codes.len() < config.segments_per_utterance {
            let c = rng.random_range(1..=config.num_codes);
            if codes.last() != Some(&c) {
                codes.push(c);
            }
        }
        let durations: Vec<usize> = codes
            .iter()
            .map(|_| rng.random_range(config.segment_frames.0..=config.segment_frames.1))
            .collect();
        let frames = render(&mut rng, &vectors, &codes, &durations, &noise);
        let ends = durations
            .iter()
            .scan(0, |t, d| {
                *t += d;
                Some(*t)
            })
            .collect();
        out.features.push(FeatureSequence::new(format!("pc{u:05}"), frames, config.frame_period_s)?);
        out.codes.push(codes);
        out.boundaries.push(ends);
    }
    Ok(out)
}

/// Lexicon and Zipfian word sampler shared by both language generators.
struct Language {
    lexicon: Vec<Vec<usize>>,
    zipf: Zipf<f64>,
}

impl Language {
    /// Distinct words of uniform random length over `1..=alphabet`; with
    /// `no_repeats`, no word contains the same symbol twice in a row.
    fn new(
        rng: &mut ChaCha8Rng,
        size: usize,
        alphabet: usize,
        word_len: (usize, usize),
        zipf_exponent: f64,
        no_repeats: bool,
    ) -> Result<Self> {
        check_range("word_len", word_len)?;
        if size == 0 || alphabet < 2 {
            return Err(invalid("need a nonempty lexicon and at least 2 symbols"));
        }
        let mut lexicon: Vec<Vec<usize>> = Vec::with_capacity(size);
        let mut tries = 0;
        while lexicon.len() < size {
            let len = rng.random_range(word_len.0..=word_len.1);
            let mut w: Vec<usize> = Vec::with_capacity(len);
            while w.len() < len {
                let s = rng.random_range(1..=alphabet);
                if !(no_repeats && w.last() == Some(&s)) {
                    w.push(s);
                }
            }
            if !lexicon.contains(&w) {
                lexicon.push(w);
            }
            tries += 1;
            if tries > 100 * size {
                return Err(invalid(format!("cannot draw {size} distinct words")));
            }
        }
        let zipf = Zipf::new(size as f64, zipf_exponent).map_err(|e| invalid(format!("zipf exponent: {e}")))?;
        Ok(Self { lexicon, zipf })
    }

    /// Word index with rank-`r` frequency proportional to `r^-s`.
    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        self.zipf.sample(rng) as usize - 1
    }

    /// Words for one utterance. With `no_repeats`, a word whose first symbol
    /// equals the previous word's last symbol is redrawn.
    fn utterance(&self, rng: &mut ChaCha8Rng, words: (usize, usize), no_repeats: bool) -> Vec<usize> {
        let n = rng.random_range(words.0..=words.1);
        let mut ids: Vec<usize> = Vec::with_capacity(n);
        while ids.len() < n {
            let w = self.sample(rng);
            let clash = ids
                .last()
                .is_some_and(|&p| self.lexicon[p].last() == self.lexicon[w].first());
            if !(no_repeats && clash) {
                ids.push(w);
            }
        }
        ids
    }
}

/// Settings for [`generate_synthetic_speechlike`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeechlikeConfig {
    pub num_utterances: usize,
    pub lexicon_size: usize,
    /// Codes per word.
    pub word_len: (usize, usize),
    pub words_per_utterance: (usize, usize),
    pub zipf_exponent: f64,
    pub num_codes: usize,
    pub dim: usize,
    /// Frames per code.
    pub code_frames: (usize, usize),
    pub noise_sigma: f64,
    pub frame_period_s: f64,
    pub seed: u64,
}

impl Default for SpeechlikeConfig {
    fn default() -> Self {
        Self {
            num_utterances: 200,
            lexicon_size: 20,
            word_len: (2, 2),
            words_per_utterance: (2, 6),
            zipf_exponent: 1.0,
            num_codes: 12,
            dim: 16,
            code_frames: (5, 20),
            noise_sigma: 0.05,
            frame_period_s: 0.01,
            seed: 1,
        }
    }
}

/// Feature rendering of an artificial language with word and unit truth.
#[derive(Clone, Debug)]
pub struct SpeechlikeCorpus {
    pub features: Vec<FeatureSequence>,
    /// Word tokens labelled `w<index>`.
    pub words: Vec<ReferenceAlignment>,
    /// Code-level tokens labelled with the 1-based code.
    pub units: Vec<ReferenceAlignment>,
    pub lexicon: Vec<Vec<usize>>,
    /// Lexicon index of every word token, per utterance.
    pub word_ids: Vec<Vec<usize>>,
    pub code_vectors: Array2<f64>,
}

/// Samples a lexicon of code strings and renders Zipf-distributed word
/// sequences as per-code vectors held for a random number of frames, plus
/// Gaussian noise. Adjacent codes always differ, also across words.
pub fn generate_synthetic_speechlike(config: &SpeechlikeConfig) -> Result<SpeechlikeCorpus> {
    check_range("code_frames", config.code_frames)?;
    check_range("words_per_utterance", config.words_per_utterance)?;
    if config.dim == 0 {
        return Err(invalid("dim must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let vectors = code_vectors(&mut rng, config.num_codes, config.dim, 0.5)?;
    let lang = Language::new(
        &mut rng,
        config.lexicon_size,
        config.num_codes,
        config.word_len,
        config.zipf_exponent,
        true,
    )?;
    let noise = noise(config.noise_sigma)?;
    let period = config.frame_period_s;
    let mut out = SpeechlikeCorpus {
        features: Vec::new(),
        words: Vec::new(),
        units: Vec::new(),
        lexicon: lang.lexicon.clone(),
        word_ids: Vec::new(),
        code_vectors: vectors.clone(),
    };
    for u in 0..config.num_utterances {
        let id = format!("sp{u:05}");
        let ids = lang.utterance(&mut rng, config.words_per_utterance, true);
        let codes: Vec<usize> = ids.iter().flat_map(|&w| lang.lexicon[w].iter().copied()).collect();
        let durations: Vec<usize> = codes
            .iter()
            .map(|_| rng.random_range(config.code_frames.0..=config.code_frames.1))
            .collect();
        let frames = render(&mut rng, &vectors, &codes, &durations, &noise);

        let mut unit_tokens = Vec::with_capacity(codes.len());
        let mut t = 0;
        for (&c, &d) in codes.iter().zip(&durations) {
            unit_tokens.push(RefToken {
                start: t as f64 * period,
                end: (t + d) as f64 * period,
                label: c.to_string(),
            });
            t += d;
        }
        let mut word_tokens = Vec::with_capacity(ids.len());
        let mut k = 0;
        let mut start = 0;
        for &w in &ids {
            k += lang.lexicon[w].len();
            let end: usize = durations[..k].iter().sum();
            word_tokens.push(RefToken {
                start: start as f64 * period,
                end: end as f64 * period,
                label: format!("w{w}"),
            });
            start = end;
        }
        out.features.push(FeatureSequence::new(&*id, frames, period)?);
        out.units.push(ReferenceAlignment::new(&*id, unit_tokens)?);
        out.words.push(ReferenceAlignment::new(&*id, word_tokens)?);
        out.word_ids.push(ids);
    }
    Ok(out)
}

/// Settings for [`generate_synthetic_symbolic`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymbolicConfig {
    pub num_utterances: usize,
    pub lexicon_size: usize,
    pub alphabet_size: usize,
    pub word_len: (usize, usize),
    pub words_per_utterance: (usize, usize),
    pub zipf_exponent: f64,
    pub seed: u64,
}

impl Default for SymbolicConfig {
    fn default() -> Self {
        Self {
            num_utterances: 5000,
            lexicon_size: 50,
            alphabet_size: 30,
            word_len: (2, 8),
            words_per_utterance: (1, 6),
            zipf_exponent: 1.0,
            seed: 1,
        }
    }
}

/// Symbol corpus of an artificial language with word truth.
#[derive(Clone, Debug)]
pub struct SymbolicCorpus {
    pub corpus: Vec<SymbolSequence>,
    /// End positions (1-based, last = length) of the true words.
    pub word_ends: Vec<Vec<usize>>,
    pub lexicon: Vec<Vec<usize>>,
    pub word_ids: Vec<Vec<usize>>,
}

/// Utterances of Zipf-distributed words from a random lexicon.
pub fn generate_synthetic_symbolic(config: &SymbolicConfig) -> Result<SymbolicCorpus> {
    check_range("words_per_utterance", config.words_per_utterance)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let lang = Language::new(
        &mut rng,
        config.lexicon_size,
        config.alphabet_size,
        config.word_len,
        config.zipf_exponent,
        false,
    )?;
    let mut out = SymbolicCorpus {
        corpus: Vec::new(),
        word_ends: Vec::new(),
        lexicon: lang.lexicon.clone(),
        word_ids: Vec::new(),
    };
    for u in 0..config.num_utterances {
        let ids = lang.utterance(&mut rng, config.words_per_utterance, false);
        let mut symbols = Vec::new();
        let mut ends = Vec::with_capacity(ids.len());
        for &w in &ids {
            symbols.extend_from_slice(&lang.lexicon[w]);
            ends.push(symbols.len());
        }
        out.corpus
            .push(SymbolSequence::new(format!("sy{u:05}"), symbols, config.alphabet_size)?);
        out.word_ends.push(ends);
        out.word_ids.push(ids);
    }
    Ok(out)
}
