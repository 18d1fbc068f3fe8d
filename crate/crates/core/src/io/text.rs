// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::{read_to_string, write_atomic};
use crate::error::{Error, Result};
use crate::eval::{RefToken, ReferenceAlignment};
use crate::pipeline::UtteranceWords;
use crate::seg::Span;
use crate::symbolic::SymbolSequence;
use crate::units::UnitTokenization;

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

fn parse_field<T: FromStr>(path: &Path, line: usize, field: &str, what: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    field
        .parse()
        .map_err(|e| Error::format(path, format!("line {line}: bad {what} {field:?}: {e}")))
}

fn parse_list<T: FromStr>(path: &Path, line: usize, text: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split_whitespace().map(|f| parse_field(path, line, f, what)).collect()
}

fn join<T: ToString>(xs: &[T], sep: &str) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(sep)
}

/// One utterance per line: `id<TAB>s1 s2 ...`, preceded by an
/// `# alphabet_size=K` header.
pub fn write_symbol_corpus(path: &Path, corpus: &[SymbolSequence]) -> Result<()> {
    let k = corpus.first().map_or(0, |s| s.alphabet_size);
    let mut out = format!("# alphabet_size={k}\n");
    for s in corpus {
        let _ = writeln!(out, "{}\t{}", s.utterance_id, join(&s.symbols, " "));
    }
    write_atomic(path, out.as_bytes())
}

/// Reads a symbol corpus. The leading `id<TAB>` is optional; lines without
/// one are named by their zero-based utterance index. The alphabet size is
/// taken from `alphabet_size`, else the header, else the largest symbol.
pub fn read_symbol_corpus(path: &Path, alphabet_size: Option<usize>) -> Result<Vec<SymbolSequence>> {
    let text = read_to_string(path)?;
    let mut header_k = None;
    for line in text.lines() {
        if let Some(v) = line.trim().strip_prefix("# alphabet_size=") {
            header_k = Some(parse_field::<usize>(path, 1, v.trim(), "alphabet size")?);
            break;
        }
    }
    let mut rows = Vec::new();
    for (n, line) in content_lines(&text) {
        let (id, body) = match line.split_once('\t') {
            Some((id, body)) => (id.trim().to_string(), body),
            None => (format!("{:06}", rows.len()), line),
        };
        let symbols: Vec<usize> = parse_list(path, n, body, "symbol")?;
        rows.push((n, id, symbols));
    }
    let k = alphabet_size
        .or(header_k)
        .unwrap_or_else(|| rows.iter().flat_map(|r| r.2.iter().copied()).max().unwrap_or(0));
    rows.into_iter()
        .map(|(n, id, symbols)| {
            SymbolSequence::new(id, symbols, k).map_err(|e| Error::format(path, format!("line {n}: {e}")))
        })
        .collect()
}

/// `utterance_id start_s end_s label` per token.
pub fn write_alignments(path: &Path, alignments: &[ReferenceAlignment]) -> Result<()> {
    let mut out = String::new();
    for a in alignments {
        for t in &a.tokens {
            let _ = writeln!(out, "{} {} {} {}", a.utterance_id, t.start, t.end, t.label);
        }
    }
    write_atomic(path, out.as_bytes())
}

/// Groups token lines by utterance in order of first appearance and sorts
/// each utterance's tokens by start time.
pub fn read_alignments(path: &Path) -> Result<Vec<ReferenceAlignment>> {
    let text = read_to_string(path)?;
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<RefToken>> = HashMap::new();
    for (n, line) in content_lines(&text) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 4 {
            return Err(Error::format(path, format!("line {n}: expected `utterance start end label`")));
        }
        let token = RefToken {
            start: parse_field(path, n, fields[1], "start time")?,
            end: parse_field(path, n, fields[2], "end time")?,
            label: fields[3..].join(" "),
        };
        let id = fields[0].to_string();
        if !groups.contains_key(&id) {
            order.push(id.clone());
        }
        groups.entry(id).or_default().push(token);
    }
    order
        .into_iter()
        .map(|id| {
            let mut tokens = groups.remove(&id).expect("grouped id");
            tokens.sort_by(|a, b| a.start.total_cmp(&b.start));
            ReferenceAlignment::new(id, tokens).map_err(|e| Error::format(path, e.to_string()))
        })
        .collect()
}

/// `id<TAB>codes<TAB>end frames` per utterance.
pub fn write_units(path: &Path, units: &[UnitTokenization]) -> Result<()> {
    let mut out = String::new();
    for u in units {
        let _ = writeln!(out, "{}\t{}\t{}", u.utterance_id, join(&u.codes, " "), join(&u.boundaries, " "));
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_units(path: &Path) -> Result<Vec<UnitTokenization>> {
    let text = read_to_string(path)?;
    content_lines(&text)
        .map(|(n, line)| {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::format(path, format!("line {n}: expected `id<TAB>codes<TAB>ends`")));
            }
            let codes = parse_list(path, n, fields[1], "code")?;
            let ends = parse_list(path, n, fields[2], "end frame")?;
            UnitTokenization::new(fields[0], codes, ends).map_err(|e| Error::format(path, format!("line {n}: {e}")))
        })
        .collect()
}

/// Segment end positions per sequence: `id<TAB>e1 e2 ...`, 1-based, the
/// last end being the sequence length.
pub fn write_segment_ends(path: &Path, ends: &[(String, Vec<usize>)]) -> Result<()> {
    let mut out = String::new();
    for (id, e) in ends {
        let _ = writeln!(out, "{id}\t{}", join(e, " "));
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_segment_ends(path: &Path) -> Result<Vec<(String, Vec<usize>)>> {
    let text = read_to_string(path)?;
    content_lines(&text)
        .map(|(n, line)| {
            let (id, rest) = line
                .split_once('\t')
                .ok_or_else(|| Error::format(path, format!("line {n}: expected `id<TAB>ends`")))?;
            let ends: Vec<usize> = parse_list(path, n, rest, "end")?;
            if ends.is_empty() || ends[0] == 0 || ends.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::format(path, format!("line {n}: ends must be positive and strictly increasing")));
            }
            Ok((id.to_string(), ends))
        })
        .collect()
}

/// One word per line: `utterance unit_start unit_end start_s end_s codes`,
/// with unit indices 1-based and codes comma-separated.
pub fn write_words(path: &Path, words: &[UtteranceWords]) -> Result<()> {
    let mut out = String::new();
    for u in words {
        for ((span, codes), (start, end)) in u.unit_spans.iter().zip(&u.codes).zip(&u.times) {
            let _ = writeln!(
                out,
                "{} {} {} {} {} {}",
                u.utterance_id,
                span.start,
                span.end,
                start,
                end,
                join(codes, ",")
            );
        }
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_words(path: &Path) -> Result<Vec<UtteranceWords>> {
    let text = read_to_string(path)?;
    let mut out: Vec<UtteranceWords> = Vec::new();
    for (n, line) in content_lines(&text) {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 6 {
            return Err(Error::format(path, format!("line {n}: expected 6 fields, found {}", f.len())));
        }
        let span = Span::new(parse_field(path, n, f[1], "unit start")?, parse_field(path, n, f[2], "unit end")?);
        let times = (parse_field(path, n, f[3], "start time")?, parse_field(path, n, f[4], "end time")?);
        let codes = f[5]
            .split(',')
            .map(|c| parse_field(path, n, c, "code"))
            .collect::<Result<Vec<usize>>>()?;
        match out.last_mut() {
            Some(u) if u.utterance_id == f[0] => {
                u.unit_spans.push(span);
                u.codes.push(codes);
                u.times.push(times);
            }
            _ => out.push(UtteranceWords {
                utterance_id: f[0].to_string(),
                unit_spans: vec![span],
                codes: vec![codes],
                times: vec![times],
            }),
        }
    }
    for u in &out {
        u.validate().map_err(|e| Error::format(path, e.to_string()))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_corpus_roundtrip_and_optional_ids() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.txt");
        let corpus = vec![
            SymbolSequence::new("x", vec![1, 4, 2], 7).unwrap(),
            SymbolSequence::new("y", vec![7], 7).unwrap(),
        ];
        write_symbol_corpus(&p, &corpus).unwrap();
        assert_eq!(read_symbol_corpus(&p, None).unwrap(), corpus);

        std::fs::write(&p, "1 2 3\n\n3 1\n").unwrap();
        let c = read_symbol_corpus(&p, None).unwrap();
        assert_eq!(c[1].utterance_id, "000001");
        assert_eq!(c[1].alphabet_size, 3);
        assert!(read_symbol_corpus(&p, Some(2)).is_err());
    }

    #[test]
    fn alignments_group_and_sort() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        std::fs::write(&p, "u2 0.5 0.9 b\nu1 0 0.3 hi\nu2 0 0.5 a\n").unwrap();
        let a = read_alignments(&p).unwrap();
        assert_eq!(a[0].utterance_id, "u2");
        assert_eq!(a[0].tokens[0].label, "a");
        assert_eq!(a[1].tokens[0].end, 0.3);
        write_alignments(&p, &a).unwrap();
        assert_eq!(read_alignments(&p).unwrap(), a);
    }

    #[test]
    fn units_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.txt");
        let u = vec![UnitTokenization::new("a", vec![3, 1], vec![4, 9]).unwrap()];
        write_units(&p, &u).unwrap();
        assert_eq!(read_units(&p).unwrap(), u);
    }

    #[test]
    fn segment_ends_roundtrip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.txt");
        let ends = vec![("a".to_string(), vec![2, 5, 6]), ("b".to_string(), vec![1])];
        write_segment_ends(&p, &ends).unwrap();
        assert_eq!(read_segment_ends(&p).unwrap(), ends);
        std::fs::write(&p, "a\t3 2\n").unwrap();
        assert!(read_segment_ends(&p).is_err());
    }

    #[test]
    fn words_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.txt");
        let w = vec![UtteranceWords {
            utterance_id: "a".into(),
            unit_spans: vec![Span::new(1, 2), Span::new(3, 3)],
            codes: vec![vec![5, 2], vec![9]],
            times: vec![(0.0, 0.07), (0.07, 0.13)],
        }];
        write_words(&p, &w).unwrap();
        assert_eq!(read_words(&p).unwrap(), w);
    }
}
