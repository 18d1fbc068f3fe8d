// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::matrix::{read_matrix, write_matrix};
use super::{read_to_string, write_atomic};
use crate::error::{Error, Result};
use crate::symbolic::{Aernn, AernnArch, AernnScorer, TrainingMeta};

/// Manifest file name inside a scorer directory.
pub const SCORER_MANIFEST: &str = "manifest.toml";

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    name: String,
    rows: usize,
    cols: usize,
    file: String,
}

#[derive(Serialize, Deserialize)]
struct ScorerManifest {
    fingerprint: String,
    arch: AernnArch,
    training: TrainingMeta,
    tensors: Vec<TensorRecord>,
}

/// Writes one matrix file per parameter tensor and a manifest with names,
/// shapes, architecture, training metadata and parameter fingerprint.
pub fn save_scorer(dir: &Path, scorer: &AernnScorer) -> Result<()> {
    let params = scorer.net().params();
    let mut tensors = Vec::with_capacity(params.entries().len());
    for (id, e) in params.entries().iter().enumerate() {
        let file = format!("{}.dpdpf", e.name);
        write_matrix(&dir.join(&file), &params.view(id).to_owned())?;
        tensors.push(TensorRecord {
            name: e.name.clone(),
            rows: e.rows,
            cols: e.cols,
            file,
        });
    }
    let manifest = ScorerManifest {
        fingerprint: scorer.fingerprint(),
        arch: scorer.arch().clone(),
        training: scorer.meta().clone(),
        tensors,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    write_atomic(&dir.join(SCORER_MANIFEST), text.as_bytes())
}

/// Loads a scorer and checks that its parameters hash to the recorded
/// fingerprint.
pub fn load_scorer(dir: &Path) -> Result<AernnScorer> {
    let mpath = dir.join(SCORER_MANIFEST);
    let manifest: ScorerManifest =
        toml::from_str(&read_to_string(&mpath)?).map_err(|e| Error::format(&mpath, e.to_string()))?;
    let mut net = Aernn::zeros(manifest.arch)?;
    if net.params().entries().len() != manifest.tensors.len() {
        return Err(Error::format(&mpath, "tensor list does not match the architecture"));
    }
    for t in &manifest.tensors {
        let id = net
            .params()
            .find(&t.name)
            .ok_or_else(|| Error::format(&mpath, format!("unknown tensor {}", t.name)))?;
        let path = dir.join(&t.file);
        let m = read_matrix(&path)?;
        let e = net.params().entry(id);
        if (m.nrows(), m.ncols()) != (e.rows, e.cols) || (t.rows, t.cols) != (e.rows, e.cols) {
            return Err(Error::format(
                &path,
                format!("shape {}x{} does not match {}x{}", m.nrows(), m.ncols(), e.rows, e.cols),
            ));
        }
        net.params_mut().view_mut(id).assign(&m);
    }
    let scorer = AernnScorer::new(net, manifest.training);
    if scorer.fingerprint() != manifest.fingerprint {
        return Err(Error::format(&mpath, "parameter fingerprint mismatch"));
    }
    Ok(scorer)
}
