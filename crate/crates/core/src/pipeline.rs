// SPDX-License-Identifier: MIT OR Apache-2.0

//! The chained speech-to-words system: K-means codebook, DPDP unit
//! discovery, one symbol per unit, AE-RNN training, DPDP word segmentation,
//! and word boundaries snapped to unit end times.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{evaluate_corpus, format_table, CorpusEvaluation, ReferenceAlignment, TimedBoundarySet};
use crate::io;
use crate::seg::{spans_cover, Segmentation, Span, DEFAULT_MAX_FRAMES, DEFAULT_MAX_SYMBOLS};
use crate::symbolic::{
    segment_symbols, train_aernn, AernnPreset, AernnScorer, SymbolSequence, SymbolicSegConfig, TrainConfig,
};
use crate::units::{
    encode_utterance, kmeans_fit, merge_repeats_features, Codebook, FeatureSequence, UnitTokenization,
    DEFAULT_CODEBOOK_SIZE, DEFAULT_FRAME_PERIOD_S, DEFAULT_UNIT_LAMBDA,
};

/// How frames become units.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitMode {
    /// Joint segmentation and quantization with a duration penalty.
    #[default]
    Dpdp,
    /// Per-frame nearest code with runs merged.
    Merge,
}

/// Full configuration of a pipeline run, readable from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub features_dir: Option<PathBuf>,
    /// Use this codebook instead of running K-means.
    pub codebook: Option<PathBuf>,
    /// Use this trained scorer instead of training one.
    pub scorer_dir: Option<PathBuf>,
    /// Reference word alignments; evaluation is skipped without them.
    pub alignments: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub unit_lambda: f64,
    pub word_lambda: f64,
    pub k: usize,
    pub kmeans_iters: usize,
    pub unit_mode: UnitMode,
    pub max_unit_frames: usize,
    pub max_word_units: usize,
    pub preset: AernnPreset,
    /// Training schedule; its seed is replaced by `seed`.
    pub schedule: TrainConfig,
    pub seed: u64,
    /// Used when the features directory has no metadata file.
    pub frame_period_s: f64,
    pub tolerance_s: f64,
    pub exclude_final_boundary: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            features_dir: None,
            codebook: None,
            scorer_dir: None,
            alignments: None,
            output_dir: None,
            unit_lambda: DEFAULT_UNIT_LAMBDA,
            word_lambda: 3.0,
            k: DEFAULT_CODEBOOK_SIZE,
            kmeans_iters: 50,
            unit_mode: UnitMode::Dpdp,
            max_unit_frames: DEFAULT_MAX_FRAMES,
            max_word_units: DEFAULT_MAX_SYMBOLS,
            preset: AernnPreset::ChainedSpeech,
            schedule: TrainConfig::default(),
            seed: 1,
            frame_period_s: DEFAULT_FRAME_PERIOD_S,
            tolerance_s: crate::eval::DEFAULT_TOLERANCE_S,
            exclude_final_boundary: true,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [("unit_lambda", self.unit_lambda), ("word_lambda", self.word_lambda)];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be >= 0, got {v}")));
            }
        }
        let pos = [("frame_period_s", self.frame_period_s)];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.tolerance_s >= 0.0 && self.tolerance_s.is_finite()) {
            return Err(Error::InvalidConfig(format!("tolerance_s must be >= 0, got {}", self.tolerance_s)));
        }
        for (name, v) in [
            ("k", self.k),
            ("kmeans_iters", self.kmeans_iters),
            ("max_unit_frames", self.max_unit_frames),
            ("max_word_units", self.max_word_units),
        ] {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be >= 1")));
            }
        }
        for (name, p) in [
            ("features_dir", &self.features_dir),
            ("codebook", &self.codebook),
            ("scorer_dir", &self.scorer_dir),
            ("alignments", &self.alignments),
        ] {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(Error::InvalidConfig(format!("{name} {} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }

    fn word_config(&self) -> SymbolicSegConfig {
        SymbolicSegConfig {
            max_seg_len: self.max_word_units,
            ..SymbolicSegConfig::linear(self.word_lambda)
        }
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.schedule.clone()
        }
    }
}

/// Word segmentation of one utterance.
#[derive(Clone, Debug, PartialEq)]
pub struct UtteranceWords {
    pub utterance_id: String,
    /// Word spans over the utterance's units, 1-based.
    pub unit_spans: Vec<Span>,
    /// Unit codes of every word.
    pub codes: Vec<Vec<usize>>,
    /// Word start and end times in seconds.
    pub times: Vec<(f64, f64)>,
}

impl UtteranceWords {
    /// Maps a segmentation over units to words whose edges are unit end
    /// times.
    pub fn from_units(units: &UnitTokenization, words: &Segmentation, frame_period_s: f64) -> Result<Self> {
        if !words.is_exact_cover(units.num_units()) {
            return Err(Error::InvalidConfig(format!(
                "{}: word spans do not cover {} units",
                units.utterance_id,
                units.num_units()
            )));
        }
        let frame_end = |unit: usize| if unit == 0 { 0 } else { units.boundaries[unit - 1] };
        let out = Self {
            utterance_id: units.utterance_id.clone(),
            unit_spans: words.spans.clone(),
            codes: words.spans.iter().map(|s| units.codes[s.range()].to_vec()).collect(),
            times: words
                .spans
                .iter()
                .map(|s| {
                    (
                        frame_end(s.start - 1) as f64 * frame_period_s,
                        frame_end(s.end) as f64 * frame_period_s,
                    )
                })
                .collect(),
        };
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.unit_spans.last().map_or(0, |s| s.end);
        let ok = !self.unit_spans.is_empty()
            && spans_cover(&self.unit_spans, n)
            && self.codes.len() == self.unit_spans.len()
            && self.times.len() == self.unit_spans.len()
            && self.codes.iter().zip(&self.unit_spans).all(|(c, s)| c.len() == s.len())
            && self.times.iter().all(|&(a, b)| a < b)
            && self.times.windows(2).all(|w| w[0].1 == w[1].0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("{}: inconsistent word output", self.utterance_id)))
        }
    }

    pub fn num_units(&self) -> usize {
        self.unit_spans.last().map_or(0, |s| s.end)
    }

    /// Word end times as a boundary set ending at the last word's end.
    pub fn boundary_set(&self) -> Result<TimedBoundarySet> {
        let ends: Vec<f64> = self.times.iter().map(|t| t.1).collect();
        let terminal = *ends.last().ok_or(Error::EmptyInput)?;
        TimedBoundarySet::new(&*self.utterance_id, ends, terminal)
    }
}

/// Unit end times of a tokenization as a boundary set.
pub fn unit_boundary_set(units: &UnitTokenization, frame_period_s: f64) -> Result<TimedBoundarySet> {
    TimedBoundarySet::from_frame_ends(&*units.utterance_id, &units.boundaries, units.num_frames(), frame_period_s)
}

/// Fits a codebook and rounds it to `f32` so that it matches its file form.
pub fn fit_codebook(features: &[FeatureSequence], k: usize, iters: usize, seed: u64) -> Result<Codebook> {
    let mut codebook = kmeans_fit(features, k, iters, seed)
        .map_err(|e| e.in_stage("kmeans", None))?
        .codebook;
    codebook.round_to_f32();
    Ok(codebook)
}

/// Encodes every utterance in parallel; output order follows the input.
pub fn encode_corpus(
    features: &[FeatureSequence],
    codebook: &Codebook,
    mode: UnitMode,
    lambda: f64,
    max_seg_len: usize,
) -> Result<Vec<UnitTokenization>> {
    let stage = match mode {
        UnitMode::Dpdp => "encode",
        UnitMode::Merge => "merge",
    };
    features
        .par_iter()
        .map(|f| {
            match mode {
                UnitMode::Dpdp => encode_utterance(f, codebook, lambda, max_seg_len),
                UnitMode::Merge => merge_repeats_features(f, codebook),
            }
            .map_err(|e| e.in_stage(stage, Some(&f.utterance_id)))
        })
        .collect()
}

/// One symbol per unit.
pub fn units_to_symbols(units: &[UnitTokenization], alphabet_size: usize) -> Result<Vec<SymbolSequence>> {
    units
        .iter()
        .map(|u| {
            SymbolSequence::new(&*u.utterance_id, u.codes.clone(), alphabet_size)
                .map_err(|e| e.in_stage("symbols", Some(&u.utterance_id)))
        })
        .collect()
}

/// Segments every sequence in parallel against a frozen scorer.
pub fn segment_corpus(
    scorer: &AernnScorer,
    corpus: &[SymbolSequence],
    config: &SymbolicSegConfig,
) -> Result<Vec<Segmentation>> {
    corpus
        .par_iter()
        .map(|s| segment_symbols(scorer, s, config).map_err(|e| e.in_stage("segment-words", Some(&s.utterance_id))))
        .collect()
}

/// Everything a pipeline run produces.
#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub codebook: Codebook,
    pub units: Vec<UnitTokenization>,
    pub scorer: AernnScorer,
    pub words: Vec<UtteranceWords>,
    pub evaluation: Option<CorpusEvaluation>,
    /// Mean per-token training loss per step; empty when the scorer was
    /// supplied.
    pub train_losses: Vec<f64>,
}

impl PipelineOutput {
    /// Metrics table, key-value lines and per-type recall, as written to
    /// the metrics file.
    pub fn metrics_text(&self, label: &str) -> Option<String> {
        let e = self.evaluation.as_ref()?;
        let mut out = format_table(&[(label, &e.report)]);
        out.push('\n');
        out.push_str(&e.report.to_key_values());
        out.push('\n');
        out.push_str(&e.per_type.format_table(1));
        Some(out)
    }
}

/// Runs the pipeline on files named in `config`, writing stage outputs
/// and a manifest to the output directory if one is set.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutput> {
    config.validate().map_err(|e| e.in_stage("config", None))?;
    let dir = config
        .features_dir
        .as_deref()
        .ok_or_else(|| Error::InvalidConfig("features_dir is required".into()).in_stage("config", None))?;
    let features = io::read_features_dir(dir, config.frame_period_s).map_err(|e| e.in_stage("load", None))?;
    let alignments = config
        .alignments
        .as_deref()
        .map(io::read_alignments)
        .transpose()
        .map_err(|e| e.in_stage("load", None))?;
    let codebook = config
        .codebook
        .as_deref()
        .map(io::read_codebook)
        .transpose()
        .map_err(|e| e.in_stage("load", None))?;
    let scorer = config
        .scorer_dir
        .as_deref()
        .map(io::load_scorer)
        .transpose()
        .map_err(|e| e.in_stage("load", None))?;
    run_pipeline_on(config, &features, alignments.as_deref(), codebook, scorer)
}

/// Runs the pipeline on in-memory inputs. A supplied codebook or scorer
/// replaces the corresponding training stage.
pub fn run_pipeline_on(
    config: &PipelineConfig,
    features: &[FeatureSequence],
    alignments: Option<&[ReferenceAlignment]>,
    codebook: Option<Codebook>,
    scorer: Option<AernnScorer>,
) -> Result<PipelineOutput> {
    if features.is_empty() {
        return Err(Error::EmptyInput.in_stage("load", None));
    }
    let period = features[0].frame_period_s;
    let codebook = match codebook {
        Some(c) => c,
        None => fit_codebook(features, config.k, config.kmeans_iters, config.seed)?,
    };
    let units = encode_corpus(features, &codebook, config.unit_mode, config.unit_lambda, config.max_unit_frames)?;
    let corpus = units_to_symbols(&units, codebook.k())?;
    let (scorer, train_losses) = match scorer {
        Some(s) => (s, Vec::new()),
        None => {
            let arch = config.preset.arch(codebook.k());
            let (s, report) = train_aernn(&corpus, arch, &config.train_config()).map_err(|e| e.in_stage("train-aernn", None))?;
            (s, report.losses)
        }
    };
    let segs = segment_corpus(&scorer, &corpus, &config.word_config())?;
    let words = units
        .iter()
        .zip(&segs)
        .map(|(u, s)| UtteranceWords::from_units(u, s, period).map_err(|e| e.in_stage("time-map", Some(&u.utterance_id))))
        .collect::<Result<Vec<_>>>()?;
    let evaluation = alignments
        .map(|refs| {
            let hyps = words.iter().map(UtteranceWords::boundary_set).collect::<Result<Vec<_>>>()?;
            evaluate_corpus(&hyps, refs, config.tolerance_s, config.exclude_final_boundary)
        })
        .transpose()
        .map_err(|e| e.in_stage("eval", None))?;
    let out = PipelineOutput {
        codebook,
        units,
        scorer,
        words,
        evaluation,
        train_losses,
    };
    if let Some(dir) = &config.output_dir {
        write_outputs(dir, config, &corpus, &out).map_err(|e| e.in_stage("write", None))?;
    }
    Ok(out)
}

fn write_outputs(dir: &Path, config: &PipelineConfig, corpus: &[SymbolSequence], out: &PipelineOutput) -> Result<()> {
    io::write_codebook(&dir.join("codebook.dpdpf"), &out.codebook)?;
    io::write_units(&dir.join("units.txt"), &out.units)?;
    io::write_symbol_corpus(&dir.join("symbols.txt"), corpus)?;
    io::save_scorer(&dir.join("scorer"), &out.scorer)?;
    io::write_words(&dir.join("words.txt"), &out.words)?;
    if !out.train_losses.is_empty() {
        let mut text = String::new();
        for (i, l) in out.train_losses.iter().enumerate() {
            let _ = writeln!(text, "{i} {l}");
        }
        io::write_atomic(&dir.join("train_loss.txt"), text.as_bytes())?;
    }
    let mut manifest = io::RunManifest::new("pipeline", config.seed, config)?
        .with("utterances", out.units.len())
        .with("units", out.units.iter().map(UnitTokenization::num_units).sum::<usize>())
        .with("words", out.words.iter().map(|w| w.unit_spans.len()).sum::<usize>())
        .with("scorer_fingerprint", out.scorer.fingerprint());
    if let Some(text) = out.metrics_text("dpdp") {
        io::write_atomic(&dir.join("metrics.txt"), text.as_bytes())?;
        manifest = manifest.with("token_f1", format!("{:.4}", out.evaluation.as_ref().map_or(0.0, |e| e.report.token_f1)));
    }
    io::write_atomic(&dir.join("config.toml"), config.to_toml()?.as_bytes())?;
    manifest.write(&dir.join("manifest.toml"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_toml_roundtrip_and_defaults() {
        let cfg = PipelineConfig::default();
        assert_eq!(cfg.unit_lambda, 2.0);
        assert_eq!(cfg.word_lambda, 3.0);
        assert_eq!(cfg.k, 50);
        assert_eq!(cfg.tolerance_s, 0.02);
        let back = PipelineConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
        let partial = PipelineConfig::from_toml("k = 12\n[schedule]\nsteps = 10\n").unwrap();
        assert_eq!((partial.k, partial.schedule.steps, partial.schedule.batch_size), (12, 10, 32));
        assert!(PipelineConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn validation_rejects_bad_values() {
        let bad = PipelineConfig {
            frame_period_s: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let missing = PipelineConfig {
            features_dir: Some("/nonexistent/dir".into()),
            ..Default::default()
        };
        assert!(missing.validate().is_err());
    }

    #[test]
    fn words_snap_to_unit_ends() {
        let units = UnitTokenization::new("u", vec![4, 2, 9, 1], vec![3, 8, 10, 15]).unwrap();
        let seg = Segmentation {
            spans: vec![Span::new(1, 2), Span::new(3, 4)],
            total_cost: 0.0,
        };
        let w = UtteranceWords::from_units(&units, &seg, 0.01).unwrap();
        assert_eq!(w.codes, vec![vec![4, 2], vec![9, 1]]);
        assert_eq!(w.times, vec![(0.0, 0.08), (0.08, 0.15)]);
        w.validate().unwrap();
        let b = w.boundary_set().unwrap();
        assert_eq!(b.boundaries, vec![0.08, 0.15]);
        let u = unit_boundary_set(&units, 0.01).unwrap();
        assert!(b.boundaries.iter().all(|t| u.boundaries.contains(t)));
    }
}
