// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::{io_error, read_to_string, write_atomic};
use crate::error::{Error, Result};
use crate::units::{Codebook, FeatureSequence};

/// Leading bytes of a binary matrix file, followed by `u32` rows, `u32`
/// cols (little-endian) and `rows * cols` little-endian `f32` values in
/// row-major order.
pub const MATRIX_MAGIC: &[u8; 6] = b"DPDPF\0";

/// Name of the per-directory feature metadata file.
pub const FEATURES_META: &str = "features.meta";

fn encode_matrix(m: &Array2<f64>) -> Result<Vec<u8>> {
    let rows = u32::try_from(m.nrows()).map_err(|_| Error::InvalidConfig("too many rows".into()))?;
    let cols = u32::try_from(m.ncols()).map_err(|_| Error::InvalidConfig("too many columns".into()))?;
    let mut out = Vec::with_capacity(14 + 4 * m.len());
    out.extend_from_slice(MATRIX_MAGIC);
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    for v in m.iter() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    Ok(out)
}

fn decode_matrix(path: &Path, bytes: &[u8]) -> Result<Array2<f64>> {
    let header = MATRIX_MAGIC.len() + 8;
    if bytes.len() < header {
        return Err(Error::format(path, "truncated header"));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes")) as usize;
    let rows = word(6);
    let cols = word(10);
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::format(path, "shape overflow"))?;
    if bytes.len() - header != expected {
        return Err(Error::format(
            path,
            format!("{rows}x{cols} needs {expected} data bytes, found {}", bytes.len() - header),
        ));
    }
    let values = bytes[header..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    Array2::from_shape_vec((rows, cols), values).map_err(|e| Error::format(path, e.to_string()))
}

fn parse_csv(path: &Path, text: &str) -> Result<Array2<f64>> {
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::format(path, format!("line {}: {e}", n + 1)))?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::format(path, format!("line {}: expected {c} columns, found {}", n + 1, row.len())))
            }
            _ => {}
        }
        values.extend(row);
        rows += 1;
    }
    Array2::from_shape_vec((rows, cols.unwrap_or(0)), values).map_err(|e| Error::format(path, e.to_string()))
}

/// Writes a matrix in the binary format. Values are stored as `f32`.
pub fn write_matrix(path: &Path, m: &Array2<f64>) -> Result<()> {
    write_atomic(path, &encode_matrix(m)?)
}

/// Reads a binary matrix, or a CSV/whitespace text matrix (one row per
/// line) when the file does not start with the magic bytes.
pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
    if bytes.starts_with(MATRIX_MAGIC) {
        decode_matrix(path, &bytes)
    } else {
        let text = String::from_utf8(bytes).map_err(|_| Error::format(path, "neither binary matrix nor UTF-8 text"))?;
        parse_csv(path, &text)
    }
}

pub fn write_codebook(path: &Path, codebook: &Codebook) -> Result<()> {
    write_matrix(path, &codebook.codes)
}

pub fn read_codebook(path: &Path) -> Result<Codebook> {
    Codebook::new(read_matrix(path)?, path.display().to_string())
}

/// Writes one `<utterance_id>.dpdpf` per sequence plus a metadata file
/// holding the frame period. All sequences must share one period.
pub fn write_features_dir(dir: &Path, features: &[FeatureSequence]) -> Result<()> {
    let period = features.first().map_or(crate::units::DEFAULT_FRAME_PERIOD_S, |f| f.frame_period_s);
    if features.iter().any(|f| f.frame_period_s != period) {
        return Err(Error::InvalidConfig("features in one directory must share a frame period".into()));
    }
    for f in features {
        write_matrix(&dir.join(format!("{}.dpdpf", f.utterance_id)), &f.frames)?;
    }
    write_atomic(&dir.join(FEATURES_META), format!("frame_period_s={period}\n").as_bytes())
}

fn read_frame_period(dir: &Path) -> Result<Option<f64>> {
    let path = dir.join(FEATURES_META);
    if !path.exists() {
        return Ok(None);
    }
    for line in read_to_string(&path)?.lines() {
        if let Some(v) = line.trim().strip_prefix("frame_period_s=") {
            return v
                .trim()
                .parse()
                .map(Some)
                .map_err(|e| Error::format(&path, format!("frame_period_s: {e}")));
        }
    }
    Ok(None)
}

/// Reads every `*.dpdpf`, `*.csv` and `*.txt` file of `dir` as one
/// utterance named after the file stem, sorted by id. The frame period
/// comes from the metadata file when present, else `default_period_s`.
pub fn read_features_dir(dir: &Path, default_period_s: f64) -> Result<Vec<FeatureSequence>> {
    let period = read_frame_period(dir)?.unwrap_or(default_period_s);
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(|e| io_error(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && matches!(p.extension().and_then(|e| e.to_str()), Some("dpdpf" | "csv" | "txt"))
                && p.file_name().is_some_and(|n| n != FEATURES_META)
        })
        .collect();
    paths.sort();
    let mut out = Vec::with_capacity(paths.len());
    for p in paths {
        let id = p.file_stem().expect("file has a stem").to_string_lossy().into_owned();
        let frames = read_matrix(&p)?;
        out.push(FeatureSequence::new(id, frames, period).map_err(|e| Error::format(&p, e.to_string()))?);
    }
    if out.windows(2).any(|w| w[0].utterance_id == w[1].utterance_id) {
        return Err(Error::format(dir, "duplicate utterance ids"));
    }
    if out.is_empty() {
        return Err(Error::format(dir, "no feature files"));
    }
    Ok(out)
}
