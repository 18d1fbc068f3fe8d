// SPDX-License-Identifier: MIT OR Apache-2.0

//! On-disk formats for features, codebooks, corpora, alignments, unit and
//! word outputs, trained scorers and run manifests.
//!
//! Every writer goes through [`write_atomic`], so a reader never sees a
//! partially written file.

mod manifest;
mod matrix;
mod scorer;
mod text;

pub use manifest::{config_hash, RunManifest};
pub use matrix::{
    read_codebook, read_features_dir, read_matrix, write_codebook, write_features_dir, write_matrix,
    FEATURES_META, MATRIX_MAGIC,
};
pub use scorer::{load_scorer, save_scorer, SCORER_MANIFEST};
pub use text::{
    read_alignments, read_segment_ends, read_symbol_corpus, read_units, read_words, write_alignments,
    write_segment_ends, write_symbol_corpus, write_units, write_words,
};

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::format(path, "not a file path"))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| io_error(&tmp, e))?;
    f.write_all(bytes).map_err(|e| io_error(&tmp, e))?;
    f.sync_all().map_err(|e| io_error(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| io_error(path, e))
}

pub(crate) fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::format(path, e.to_string())
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_error(path, e))
}
