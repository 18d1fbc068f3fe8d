// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use dpdp::eval::{
    evaluate_corpus, format_table, segment_end_alignment, CorpusEvaluation, ReferenceAlignment, TimedBoundarySet,
};
use dpdp::io::{self, RunManifest};
use dpdp::pipeline::{
    encode_corpus, fit_codebook, run_pipeline, segment_corpus, unit_boundary_set, units_to_symbols, PipelineConfig,
    UnitMode, UtteranceWords,
};
use dpdp::seg::{oracle_check, OracleCheckConfig};
use dpdp::symbolic::{train_aernn, AernnPreset, DurationVariant, SymbolicSegConfig, TrainConfig};
use dpdp::synth::{generate_synthetic_speechlike, generate_synthetic_symbolic, SpeechlikeConfig, SymbolicConfig};
use dpdp::units::{DEFAULT_CODEBOOK_SIZE, DEFAULT_FRAME_PERIOD_S, DEFAULT_UNIT_LAMBDA};
use dpdp::{Error, Result};
use serde::{Deserialize, Serialize};
use toml::Table;

use crate::config::parse;
use crate::Command;

fn required<'a>(value: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| Error::InvalidConfig(format!("`{key}` is required")).in_stage("config", None))
}

fn sibling_manifest(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.toml");
    out.with_file_name(name)
}

fn take_out(table: &mut Table) -> Result<Option<PathBuf>> {
    match table.remove("out") {
        None => Ok(None),
        Some(toml::Value::String(s)) => Ok(Some(PathBuf::from(s))),
        Some(v) => Err(Error::InvalidConfig(format!("`out` must be a path, got {v}")).in_stage("config", None)),
    }
}

pub fn dispatch(command: &Command, table: Table) -> Result<()> {
    match command {
        Command::Kmeans(_) => kmeans(parse(table)?),
        Command::Encode(_) => encode(parse(table)?, UnitMode::Dpdp),
        Command::Merge(_) => encode(parse(table)?, UnitMode::Merge),
        Command::TrainAernn(_) => train(parse(table)?),
        Command::SegmentWords(_) => segment_words(parse(table)?),
        Command::Pipeline(_) => pipeline(parse(table)?),
        Command::Eval(_) => eval(parse(table)?),
        Command::GenSpeechlike(_) => {
            let mut table = table;
            let out = take_out(&mut table)?;
            gen_speechlike(out, parse(table)?)
        }
        Command::GenSymbolic(_) => {
            let mut table = table;
            let out = take_out(&mut table)?;
            gen_symbolic(out, parse(table)?)
        }
        Command::OracleCheck(_) => {
            let mut table = table;
            let out = take_out(&mut table)?;
            oracle(out, parse(table)?)
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct KmeansConfig {
    features: Option<PathBuf>,
    out: Option<PathBuf>,
    k: usize,
    iters: usize,
    seed: u64,
    frame_period_s: f64,
}

impl Default for KmeansConfig {
    fn default() -> Self {
        Self {
            features: None,
            out: None,
            k: DEFAULT_CODEBOOK_SIZE,
            iters: 50,
            seed: 1,
            frame_period_s: DEFAULT_FRAME_PERIOD_S,
        }
    }
}

fn kmeans(cfg: KmeansConfig) -> Result<()> {
    let out = required(&cfg.out, "out")?;
    let features = io::read_features_dir(required(&cfg.features, "features")?, cfg.frame_period_s)
        .map_err(|e| e.in_stage("load", None))?;
    let codebook = fit_codebook(&features, cfg.k, cfg.iters, cfg.seed)?;
    io::write_codebook(out, &codebook)?;
    RunManifest::new("kmeans", cfg.seed, &cfg)?
        .with("output", out.display())
        .with("utterances", features.len())
        .with("frames", features.iter().map(|f| f.num_frames()).sum::<usize>())
        .write(&sibling_manifest(out))?;
    println!("wrote {} codes of dimension {} to {}", codebook.k(), codebook.dim(), out.display());
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EncodeConfig {
    features: Option<PathBuf>,
    codebook: Option<PathBuf>,
    out: Option<PathBuf>,
    /// Optional symbol corpus written alongside the units.
    symbols: Option<PathBuf>,
    /// Ignored by `merge`.
    lambda: f64,
    max_frames: usize,
    frame_period_s: f64,
}

impl Default for EncodeConfig {
    fn default() -> Self {
        Self {
            features: None,
            codebook: None,
            out: None,
            symbols: None,
            lambda: DEFAULT_UNIT_LAMBDA,
            max_frames: dpdp::seg::DEFAULT_MAX_FRAMES,
            frame_period_s: DEFAULT_FRAME_PERIOD_S,
        }
    }
}

fn encode(cfg: EncodeConfig, mode: UnitMode) -> Result<()> {
    let out = required(&cfg.out, "out")?;
    let features = io::read_features_dir(required(&cfg.features, "features")?, cfg.frame_period_s)
        .map_err(|e| e.in_stage("load", None))?;
    let codebook = io::read_codebook(required(&cfg.codebook, "codebook")?).map_err(|e| e.in_stage("load", None))?;
    let units = encode_corpus(&features, &codebook, mode, cfg.lambda, cfg.max_frames)?;
    io::write_units(out, &units)?;
    if let Some(p) = &cfg.symbols {
        io::write_symbol_corpus(p, &units_to_symbols(&units, codebook.k())?)?;
    }
    let command = match mode {
        UnitMode::Dpdp => "encode",
        UnitMode::Merge => "merge",
    };
    let n_units: usize = units.iter().map(|u| u.num_units()).sum();
    RunManifest::new(command, 0, &cfg)?
        .with("output", out.display())
        .with("utterances", units.len())
        .with("units", n_units)
        .write(&sibling_manifest(out))?;
    println!("wrote {n_units} units over {} utterances to {}", units.len(), out.display());
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TrainCmdConfig {
    symbols: Option<PathBuf>,
    out: Option<PathBuf>,
    /// Defaults to the corpus header or largest symbol.
    alphabet_size: Option<usize>,
    preset: AernnPreset,
    /// Its seed is replaced by `seed`.
    schedule: TrainConfig,
    seed: u64,
}

impl Default for TrainCmdConfig {
    fn default() -> Self {
        Self {
            symbols: None,
            out: None,
            alphabet_size: None,
            preset: AernnPreset::ChainedSpeech,
            schedule: TrainConfig::default(),
            seed: 1,
        }
    }
}

fn train(cfg: TrainCmdConfig) -> Result<()> {
    let out = required(&cfg.out, "out")?;
    let corpus = io::read_symbol_corpus(required(&cfg.symbols, "symbols")?, cfg.alphabet_size)
        .map_err(|e| e.in_stage("load", None))?;
    let k = corpus.first().ok_or(Error::EmptyInput)?.alphabet_size;
    let schedule = TrainConfig {
        seed: cfg.seed,
        ..cfg.schedule.clone()
    };
    let (scorer, report) = train_aernn(&corpus, cfg.preset.arch(k), &schedule)?;
    io::save_scorer(out, &scorer)?;
    let mut losses = String::new();
    for (i, l) in report.losses.iter().enumerate() {
        let _ = writeln!(losses, "{i} {l}");
    }
    io::write_atomic(&out.join("train_loss.txt"), losses.as_bytes())?;
    RunManifest::new("train-aernn", cfg.seed, &cfg)?
        .with("output", out.display())
        .with("utterances", corpus.len())
        .with("probe_loss_initial", format!("{:.6}", report.probe_initial))
        .with("probe_loss_final", format!("{:.6}", report.probe_final))
        .with("scorer_fingerprint", scorer.fingerprint())
        .write(&sibling_manifest(out))?;
    println!(
        "trained on {} utterances: probe loss {:.4} -> {:.4}; scorer in {}",
        corpus.len(),
        report.probe_initial,
        report.probe_final,
        out.display()
    );
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SegmentCmdConfig {
    symbols: Option<PathBuf>,
    scorer: Option<PathBuf>,
    out: Option<PathBuf>,
    /// Units the symbols were read from; switches the output to timed words.
    units: Option<PathBuf>,
    frame_period_s: f64,
    /// `linear` or `hsmm`.
    variant: String,
    lambda: f64,
    shape: f64,
    scale: f64,
    truncation: usize,
    continue_prob: f64,
    max_seg_len: usize,
}

impl Default for SegmentCmdConfig {
    fn default() -> Self {
        let DurationVariant::Hsmm {
            shape,
            scale,
            truncation,
            continue_prob,
        } = SymbolicSegConfig::hsmm().duration
        else {
            unreachable!()
        };
        Self {
            symbols: None,
            scorer: None,
            out: None,
            units: None,
            frame_period_s: DEFAULT_FRAME_PERIOD_S,
            variant: "linear".into(),
            lambda: 3.0,
            shape,
            scale,
            truncation,
            continue_prob,
            max_seg_len: dpdp::seg::DEFAULT_MAX_SYMBOLS,
        }
    }
}

impl SegmentCmdConfig {
    fn segmentation(&self) -> Result<SymbolicSegConfig> {
        let duration = match self.variant.as_str() {
            "linear" => DurationVariant::Linear { lambda: self.lambda },
            "hsmm" => DurationVariant::Hsmm {
                shape: self.shape,
                scale: self.scale,
                truncation: self.truncation,
                continue_prob: self.continue_prob,
            },
            other => {
                return Err(Error::InvalidConfig(format!("variant must be `linear` or `hsmm`, got {other:?}"))
                    .in_stage("config", None))
            }
        };
        Ok(SymbolicSegConfig {
            duration,
            max_seg_len: self.max_seg_len,
        })
    }
}

fn segment_words(cfg: SegmentCmdConfig) -> Result<()> {
    let out = required(&cfg.out, "out")?;
    let seg_config = cfg.segmentation()?;
    let scorer = io::load_scorer(required(&cfg.scorer, "scorer")?).map_err(|e| e.in_stage("load", None))?;
    let corpus = io::read_symbol_corpus(required(&cfg.symbols, "symbols")?, Some(scorer.alphabet_size()))
        .map_err(|e| e.in_stage("load", None))?;
    let segs = segment_corpus(&scorer, &corpus, &seg_config)?;
    let n_words: usize = segs.iter().map(|s| s.num_spans()).sum();
    match &cfg.units {
        Some(p) => {
            let units = io::read_units(p).map_err(|e| e.in_stage("load", None))?;
            if units.len() != corpus.len() {
                return Err(Error::UtteranceMismatch {
                    hyp: format!("{} symbol sequences", corpus.len()),
                    reference: format!("{} unit sequences", units.len()),
                }
                .in_stage("time-map", None));
            }
            let words = units
                .iter()
                .zip(&corpus)
                .zip(&segs)
                .map(|((u, c), s)| {
                    if u.utterance_id != c.utterance_id {
                        return Err(Error::UtteranceMismatch {
                            hyp: c.utterance_id.clone(),
                            reference: u.utterance_id.clone(),
                        });
                    }
                    UtteranceWords::from_units(u, s, cfg.frame_period_s)
                })
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.in_stage("time-map", None))?;
            io::write_words(out, &words)?;
        }
        None => {
            let ends: Vec<(String, Vec<usize>)> =
                corpus.iter().zip(&segs).map(|(c, s)| (c.utterance_id.clone(), s.ends())).collect();
            io::write_segment_ends(out, &ends)?;
        }
    }
    RunManifest::new("segment-words", scorer.meta().seed, &cfg)?
        .with("output", out.display())
        .with("utterances", corpus.len())
        .with("words", n_words)
        .with("scorer_fingerprint", scorer.fingerprint())
        .write(&sibling_manifest(out))?;
    println!("wrote {n_words} words over {} utterances to {}", corpus.len(), out.display());
    Ok(())
}

fn pipeline(cfg: PipelineConfig) -> Result<()> {
    if cfg.output_dir.is_none() {
        return Err(Error::InvalidConfig("`output_dir` is required".into()).in_stage("config", None));
    }
    let out = run_pipeline(&cfg)?;
    let dir = cfg.output_dir.as_deref().unwrap_or(Path::new("."));
    let n_words: usize = out.words.iter().map(|w| w.unit_spans.len()).sum();
    println!(
        "{} utterances, {} units, {n_words} words; outputs in {}",
        out.units.len(),
        out.units.iter().map(|u| u.num_units()).sum::<usize>(),
        dir.display()
    );
    if let Some(text) = out.metrics_text("dpdp") {
        print!("{text}");
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EvalConfig {
    hyp: Option<PathBuf>,
    reference: Option<PathBuf>,
    /// `words`, `units` or `segments`.
    format: String,
    tolerance_s: f64,
    exclude_final_boundary: bool,
    /// Converts unit end frames to seconds.
    frame_period_s: f64,
    /// Smallest type count shown in the per-type table.
    min_type_count: usize,
    /// Defaults to the hypothesis path plus `.eval.txt`.
    out: Option<PathBuf>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            hyp: None,
            reference: None,
            format: "words".into(),
            tolerance_s: dpdp::eval::DEFAULT_TOLERANCE_S,
            exclude_final_boundary: true,
            frame_period_s: DEFAULT_FRAME_PERIOD_S,
            min_type_count: 1,
            out: None,
        }
    }
}

fn eval_inputs(cfg: &EvalConfig, hyp: &Path, reference: &Path) -> Result<(Vec<TimedBoundarySet>, Vec<ReferenceAlignment>)> {
    match cfg.format.as_str() {
        "words" => {
            let hyps = io::read_words(hyp)?.iter().map(UtteranceWords::boundary_set).collect::<Result<_>>()?;
            Ok((hyps, io::read_alignments(reference)?))
        }
        "units" => {
            let hyps = io::read_units(hyp)?
                .iter()
                .map(|u| unit_boundary_set(u, cfg.frame_period_s))
                .collect::<Result<_>>()?;
            Ok((hyps, io::read_alignments(reference)?))
        }
        "segments" => {
            let hyps = io::read_segment_ends(hyp)?
                .iter()
                .map(|(id, e)| TimedBoundarySet::from_frame_ends(id.as_str(), e, *e.last().unwrap_or(&0), 1.0))
                .collect::<Result<_>>()?;
            let refs = io::read_segment_ends(reference)?
                .iter()
                .map(|(id, e)| segment_end_alignment(id, e))
                .collect::<Result<_>>()?;
            Ok((hyps, refs))
        }
        other => Err(Error::InvalidConfig(format!(
            "format must be `words`, `units` or `segments`, got {other:?}"
        ))),
    }
}

fn eval_report(e: &CorpusEvaluation, min_type_count: usize) -> String {
    let mut text = format_table(&[("hyp", &e.report)]);
    text.push('\n');
    text.push_str(&e.report.to_key_values());
    text.push('\n');
    text.push_str(&e.per_type.format_table(min_type_count));
    text
}

fn eval(cfg: EvalConfig) -> Result<()> {
    let hyp = required(&cfg.hyp, "hyp")?;
    let reference = required(&cfg.reference, "reference")?;
    let (hyps, refs) = eval_inputs(&cfg, hyp, reference).map_err(|e| e.in_stage("load", None))?;
    let evaluation = evaluate_corpus(&hyps, &refs, cfg.tolerance_s, cfg.exclude_final_boundary)?;
    let text = eval_report(&evaluation, cfg.min_type_count);
    let out = cfg.out.clone().unwrap_or_else(|| {
        let mut name = hyp.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".eval.txt");
        hyp.with_file_name(name)
    });
    io::write_atomic(&out, text.as_bytes())?;
    RunManifest::new("eval", 0, &cfg)?
        .with("output", out.display())
        .with("utterances", hyps.len())
        .with("token_f1", format!("{:.4}", evaluation.report.token_f1))
        .with("boundary_f1", format!("{:.4}", evaluation.report.f1))
        .write(&sibling_manifest(&out))?;
    print!("{text}");
    Ok(())
}

fn write_lexicon(path: &Path, lexicon: &[Vec<usize>]) -> Result<()> {
    let mut text = String::new();
    for (i, w) in lexicon.iter().enumerate() {
        let codes: Vec<String> = w.iter().map(ToString::to_string).collect();
        let _ = writeln!(text, "w{i}\t{}", codes.join(" "));
    }
    io::write_atomic(path, text.as_bytes())
}

fn gen_speechlike(out: Option<PathBuf>, cfg: SpeechlikeConfig) -> Result<()> {
    let out = required(&out, "out")?;
    let corpus = generate_synthetic_speechlike(&cfg)?;
    io::write_features_dir(&out.join("features"), &corpus.features)?;
    io::write_alignments(&out.join("word_alignments.txt"), &corpus.words)?;
    io::write_alignments(&out.join("unit_alignments.txt"), &corpus.units)?;
    write_lexicon(&out.join("lexicon.txt"), &corpus.lexicon)?;
    RunManifest::new("gen-speechlike", cfg.seed, &cfg)?
        .with("output", out.display())
        .with("utterances", corpus.features.len())
        .with("word_tokens", corpus.word_ids.iter().map(Vec::len).sum::<usize>())
        .write(&sibling_manifest(out))?;
    println!("wrote {} utterances to {}", corpus.features.len(), out.display());
    Ok(())
}

fn gen_symbolic(out: Option<PathBuf>, cfg: SymbolicConfig) -> Result<()> {
    let out = required(&out, "out")?;
    let corpus = generate_synthetic_symbolic(&cfg)?;
    io::write_symbol_corpus(&out.join("symbols.txt"), &corpus.corpus)?;
    let ends: Vec<(String, Vec<usize>)> = corpus
        .corpus
        .iter()
        .zip(&corpus.word_ends)
        .map(|(s, e)| (s.utterance_id.clone(), e.clone()))
        .collect();
    io::write_segment_ends(&out.join("reference.txt"), &ends)?;
    write_lexicon(&out.join("lexicon.txt"), &corpus.lexicon)?;
    RunManifest::new("gen-symbolic", cfg.seed, &cfg)?
        .with("output", out.display())
        .with("utterances", corpus.corpus.len())
        .with("word_tokens", corpus.word_ids.iter().map(Vec::len).sum::<usize>())
        .write(&sibling_manifest(out))?;
    println!("wrote {} utterances to {}", corpus.corpus.len(), out.display());
    Ok(())
}

fn oracle(out: Option<PathBuf>, cfg: OracleCheckConfig) -> Result<()> {
    let out = out.unwrap_or_else(|| PathBuf::from("oracle-check.txt"));
    let report = oracle_check(&cfg)?;
    let mut text = format!(
        "optimality instances: {}\nduality instances: {}\nmismatches: {}\n",
        report.optimality_checked,
        report.duality_checked,
        report.failures.len()
    );
    for f in &report.failures {
        let _ = writeln!(text, "  {f}");
    }
    io::write_atomic(&out, text.as_bytes())?;
    RunManifest::new("oracle-check", cfg.seed, &cfg)?
        .with("output", out.display())
        .with("passed", report.passed())
        .write(&sibling_manifest(&out))?;
    print!("{text}");
    if report.passed() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{} oracle mismatches", report.failures.len())).in_stage("oracle-check", None))
    }
}
