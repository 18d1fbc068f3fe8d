// SPDX-License-Identifier: MIT OR Apache-2.0

//! `dpdp` command-line tool.
//!
//! Every subcommand reads its settings from an optional TOML file given with
//! `--config`, then applies the subcommand's flags and any `--set key=value`
//! overrides, in that order. Each run writes a manifest next to its output.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Overrides;

#[derive(Parser, Debug)]
#[command(name = "dpdp", version, about = "Duration-penalized dynamic programming segmentation")]
struct Cli {
    /// TOML file with settings for the subcommand.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override one setting; the value uses TOML syntax, bare words are
    /// taken as strings. Dotted keys reach nested tables.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a K-means codebook on a features directory.
    Kmeans(KmeansArgs),
    /// Discover units with the duration-penalized search.
    Encode(EncodeArgs),
    /// Discover units by merging runs of nearest codes.
    Merge(EncodeArgs),
    /// Train an AE-RNN scorer on a symbol corpus.
    TrainAernn(TrainArgs),
    /// Segment a symbol corpus into words with a trained scorer.
    SegmentWords(SegmentArgs),
    /// Run the full chain from features to timed word boundaries.
    Pipeline(PipelineArgs),
    /// Score hypothesised boundaries against references.
    Eval(EvalArgs),
    /// Generate a synthetic speech-like feature corpus.
    GenSpeechlike(GenArgs),
    /// Generate a synthetic symbol corpus.
    GenSymbolic(GenArgs),
    /// Compare the search with its exhaustive and fixed-count oracles.
    OracleCheck(OracleArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Kmeans(_) => "kmeans",
            Command::Encode(_) => "encode",
            Command::Merge(_) => "merge",
            Command::TrainAernn(_) => "train-aernn",
            Command::SegmentWords(_) => "segment-words",
            Command::Pipeline(_) => "pipeline",
            Command::Eval(_) => "eval",
            Command::GenSpeechlike(_) => "gen-speechlike",
            Command::GenSymbolic(_) => "gen-symbolic",
            Command::OracleCheck(_) => "oracle-check",
        }
    }
}

#[derive(Args, Debug)]
struct KmeansArgs {
    #[arg(long)]
    features: Option<PathBuf>,
    /// Codebook file to write.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct EncodeArgs {
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    codebook: Option<PathBuf>,
    /// Units file to write.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the units as a symbol corpus.
    #[arg(long)]
    symbols: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    symbols: Option<PathBuf>,
    /// Directory for the trained scorer.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `chained-speech` or `phonemic`.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct SegmentArgs {
    #[arg(long)]
    symbols: Option<PathBuf>,
    #[arg(long)]
    scorer: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Units the symbols came from; output becomes timed words.
    #[arg(long)]
    units: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    alignments: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    unit_lambda: Option<f64>,
    #[arg(long)]
    word_lambda: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Hypothesis file (words, units or segment ends).
    #[arg(long)]
    hyp: Option<PathBuf>,
    /// Reference alignments, or segment ends for `--format segments`.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// `words`, `units` or `segments`.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// Report file to write.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    utterances: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    /// Instances per check.
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report file to write.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn flag_overrides(command: &Command) -> Overrides {
    let mut o = Overrides::default();
    match command {
        Command::Kmeans(a) => {
            o.path("features", &a.features).path("out", &a.out);
            o.int("k", a.k).int("iters", a.iters).int("seed", a.seed);
        }
        Command::Encode(a) | Command::Merge(a) => {
            o.path("features", &a.features).path("codebook", &a.codebook);
            o.path("out", &a.out).path("symbols", &a.symbols).float("lambda", a.lambda);
        }
        Command::TrainAernn(a) => {
            o.path("symbols", &a.symbols).path("out", &a.out).string("preset", &a.preset);
            o.int("schedule.steps", a.steps).int("seed", a.seed);
        }
        Command::SegmentWords(a) => {
            o.path("symbols", &a.symbols).path("scorer", &a.scorer).path("out", &a.out);
            o.path("units", &a.units).float("lambda", a.lambda);
        }
        Command::Pipeline(a) => {
            o.path("features_dir", &a.features).path("alignments", &a.alignments);
            o.path("output_dir", &a.out).float("unit_lambda", a.unit_lambda);
            o.float("word_lambda", a.word_lambda).int("k", a.k).int("seed", a.seed);
        }
        Command::Eval(a) => {
            o.path("hyp", &a.hyp).path("reference", &a.reference).string("format", &a.format);
            o.float("tolerance_s", a.tolerance).path("out", &a.out);
        }
        Command::GenSpeechlike(a) | Command::GenSymbolic(a) => {
            o.path("out", &a.out).int("num_utterances", a.utterances).int("seed", a.seed);
        }
        Command::OracleCheck(a) => {
            o.int("optimality_instances", a.instances).int("duality_instances", a.instances);
            o.int("seed", a.seed).path("out", &a.out);
        }
    }
    o
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stage = cli.command.name();
    let result = config::load_table(cli.config.as_deref(), flag_overrides(&cli.command), &cli.set)
        .and_then(|table| run::dispatch(&cli.command, table));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let e = if e.stage().is_some() { e } else { e.in_stage(stage, None) };
            eprintln!("dpdp: {e}");
            ExitCode::FAILURE
        }
    }
}
