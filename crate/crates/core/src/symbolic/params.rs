// SPDX-License-Identifier: MIT OR Apache-2.0

use ndarray::{ArrayView2, ArrayViewMut2};
use sha2::{Digest, Sha256};

/// Named matrix inside a [`Params`] buffer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    offset: usize,
}

impl ParamEntry {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// All network tensors packed into one contiguous `f64` buffer.
///
/// Gradients and optimizer moments share the same layout, which keeps
/// updates and finite-difference probes simple index arithmetic.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    values: Vec<f64>,
    entries: Vec<ParamEntry>,
}

/// Handle to one entry of a [`Params`] layout.
pub type ParamId = usize;

impl Params {
    pub(crate) fn builder() -> ParamsBuilder {
        ParamsBuilder::default()
    }

    pub fn entries(&self) -> &[ParamEntry] {
        &self.entries
    }

    pub fn entry(&self, id: ParamId) -> &ParamEntry {
        &self.entries[id]
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.entries.iter().position(|e| e.name == name)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn view(&self, id: ParamId) -> ArrayView2<'_, f64> {
        let e = &self.entries[id];
        ArrayView2::from_shape((e.rows, e.cols), &self.values[e.range()]).expect("entry shape")
    }

    pub fn view_mut(&mut self, id: ParamId) -> ArrayViewMut2<'_, f64> {
        let e = &self.entries[id];
        ArrayViewMut2::from_shape((e.rows, e.cols), &mut self.values[e.range()]).expect("entry shape")
    }

    /// Same layout, all zeros.
    pub fn zeros_like(&self) -> Self {
        Self {
            values: vec![0.0; self.values.len()],
            entries: self.entries.clone(),
        }
    }

    pub fn fill(&mut self, value: f64) {
        self.values.iter_mut().for_each(|v| *v = value);
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// SHA-256 over names, shapes and little-endian values.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for e in &self.entries {
            h.update(e.name.as_bytes());
            h.update((e.rows as u64).to_le_bytes());
            h.update((e.cols as u64).to_le_bytes());
        }
        for v in &self.values {
            h.update(v.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Default)]
pub(crate) struct ParamsBuilder {
    entries: Vec<ParamEntry>,
    len: usize,
}

impl ParamsBuilder {
    pub fn add(&mut self, name: impl Into<String>, rows: usize, cols: usize) -> ParamId {
        self.entries.push(ParamEntry {
            name: name.into(),
            rows,
            cols,
            offset: self.len,
        });
        self.len += rows * cols;
        self.entries.len() - 1
    }

    pub fn build(self) -> Params {
        Params {
            values: vec![0.0; self.len],
            entries: self.entries,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn views_address_disjoint_ranges() {
        let mut b = Params::builder();
        let a = b.add("a", 2, 3);
        let c = b.add("c", 1, 2);
        let mut p = b.build();
        assert_eq!(p.len(), 8);
        p.view_mut(c).fill(1.0);
        assert_eq!(p.view(a).sum(), 0.0);
        assert_eq!(p.values()[6..], [1.0, 1.0]);
        assert_eq!(p.find("c"), Some(c));
    }

    #[test]
    fn fingerprint_tracks_values() {
        let mut b = Params::builder();
        b.add("w", 2, 2);
        let mut p = b.build();
        let before = p.fingerprint();
        assert_eq!(before, p.clone().fingerprint());
        p.values_mut()[3] = 1e-12;
        assert_ne!(before, p.fingerprint());
    }
}
