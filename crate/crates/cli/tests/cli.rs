// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::Path;
use std::process::{Command, Output};

fn dpdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpdp")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = dpdp(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn symbolic_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (sym, scorer, seg) = (d.join("sym"), d.join("scorer"), d.join("seg.txt"));
    ok(&["gen-symbolic", "--out", s(&sym), "--utterances", "40", "--set", "lexicon_size=5"]);
    assert!(sym.join("symbols.txt").exists() && sym.join("reference.txt").exists());
    let manifest = std::fs::read_to_string(d.join("sym.manifest.toml")).unwrap();
    assert!(manifest.contains("config_hash") && manifest.contains("seed = 1"));

    let symbols = sym.join("symbols.txt");
    ok(&[
        "train-aernn", "--symbols", s(&symbols), "--out", s(&scorer), "--preset", "phonemic", "--steps", "5",
    ]);
    assert!(scorer.join("manifest.toml").exists());
    ok(&["segment-words", "--symbols", s(&symbols), "--scorer", s(&scorer), "--out", s(&seg), "--lambda", "1"]);
    let report = ok(&[
        "eval", "--hyp", s(&seg), "--reference", s(&sym.join("reference.txt")), "--format", "segments",
    ]);
    assert!(report.contains("TokenF1") && report.contains("token_f1="), "{report}");
    assert!(d.join("seg.txt.eval.txt").exists());

    let hsmm = d.join("hsmm.txt");
    ok(&[
        "segment-words", "--symbols", s(&symbols), "--scorer", s(&scorer), "--out", s(&hsmm), "--set", "variant=hsmm",
    ]);
}

#[test]
fn speech_chain_and_pipeline_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let sp = d.join("sp");
    ok(&["gen-speechlike", "--out", s(&sp), "--utterances", "12"]);
    let features = sp.join("features");
    let cb = d.join("codebook.dpdpf");
    ok(&["kmeans", "--features", s(&features), "--out", s(&cb), "--k", "12"]);
    assert!(d.join("codebook.dpdpf.manifest.toml").exists());
    let units = d.join("units.txt");
    ok(&[
        "encode", "--features", s(&features), "--codebook", s(&cb), "--out", s(&units), "--symbols",
        s(&d.join("usyms.txt")),
    ]);
    ok(&["merge", "--features", s(&features), "--codebook", s(&cb), "--out", s(&d.join("merged.txt"))]);
    let report = ok(&[
        "eval", "--hyp", s(&units), "--reference", s(&sp.join("unit_alignments.txt")), "--format", "units",
        "--tolerance", "0.01",
    ]);
    assert!(report.contains("R-val."), "{report}");

    let cfg = d.join("pipeline.toml");
    let out = d.join("run");
    std::fs::write(
        &cfg,
        format!(
            "features_dir = {:?}\nalignments = {:?}\noutput_dir = {:?}\nk = 12\npreset = \"phonemic\"\n[schedule]\nsteps = 100\n",
            s(&features),
            s(&sp.join("word_alignments.txt")),
            s(&out)
        ),
    )
    .unwrap();
    let text = ok(&["--config", s(&cfg), "pipeline", "--set", "schedule.steps=5"]);
    assert!(text.contains("Prec."), "{text}");
    let manifest = std::fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("command = \"pipeline\""));
    let used = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(used.contains("steps = 5"), "{used}");
}

#[test]
fn oracle_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("oracle.txt");
    let text = ok(&["oracle-check", "--instances", "50", "--out", s(&report)]);
    assert!(text.contains("mismatches: 0"), "{text}");
    assert!(dir.path().join("oracle.txt.manifest.toml").exists());
}

#[test]
fn failures_exit_nonzero_with_a_stage_tag() {
    let out = dpdp(&["pipeline", "--features", "/nonexistent/features", "--out", "/tmp/never"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("dpdp: [config]"), "{err}");

    let out = dpdp(&["oracle-check", "--set", "bogus=1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("[config]"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("f");
    std::fs::create_dir(&bad).unwrap();
    std::fs::write(bad.join("u.csv"), "1,2\n3\n").unwrap();
    let out = dpdp(&["kmeans", "--features", s(&bad), "--out", s(&dir.path().join("c"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("dpdp: [load]"));
}
