// SPDX-License-Identifier: MIT OR Apache-2.0

use ndarray::{Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::FeatureSequence;
use crate::error::{Error, Result};

/// `K × D` code vectors. Codes are numbered `1..=K` outside this type.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    pub codes: Array2<f64>,
    pub trained_on: String,
}

impl Codebook {
    pub fn new(codes: Array2<f64>, trained_on: impl Into<String>) -> Result<Self> {
        if codes.nrows() == 0 || codes.ncols() == 0 {
            return Err(Error::EmptyInput);
        }
        if codes.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("codebook".into()));
        }
        for i in 0..codes.nrows() {
            for j in 0..i {
                if codes.row(i) == codes.row(j) {
                    return Err(Error::InvalidConfig(format!(
                        "duplicate code vectors {} and {}",
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        Ok(Self {
            codes,
            trained_on: trained_on.into(),
        })
    }

    pub fn k(&self) -> usize {
        self.codes.nrows()
    }

    pub fn dim(&self) -> usize {
        self.codes.ncols()
    }

    /// Code vector `e_k`, 1-based.
    pub fn code(&self, k: usize) -> ArrayView1<'_, f64> {
        self.codes.row(k - 1)
    }

    /// Nearest code (1-based) and its squared distance.
    pub fn nearest(&self, x: ArrayView1<'_, f64>) -> (usize, f64) {
        nearest_row(&self.codes, x)
    }

    /// Rounds every entry to the nearest `f32`, matching what the on-disk
    /// format stores.
    pub fn round_to_f32(&mut self) {
        self.codes.mapv_inplace(|v| v as f32 as f64);
    }
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Returns the 1-based index of the nearest row; ties go to the lowest index.
fn nearest_row(rows: &Array2<f64>, x: ArrayView1<'_, f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, row) in rows.outer_iter().enumerate() {
        let d = sq_dist(row, x);
        if d < best.1 {
            best = (k, d);
        }
    }
    (best.0 + 1, best.1)
}

/// Result of [`kmeans_fit`].
#[derive(Clone, Debug)]
pub struct KMeansFit {
    pub codebook: Codebook,
    /// Inertia `Σ min_k ||x - e_k||²` measured at every assignment step.
    pub inertia: Vec<f64>,
    /// Set when the assignment stopped changing before `iters` ran out.
    pub converged: bool,
}

/// Lloyd's algorithm over all frames of `features`.
///
/// Centroids start at `k` distinct frames drawn with a seeded shuffle. A
/// cluster that loses all its frames is re-seeded at the frame currently
/// farthest from its centroid.
pub fn kmeans_fit(
    features: &[FeatureSequence],
    k: usize,
    iters: usize,
    seed: u64,
) -> Result<KMeansFit> {
    if k == 0 || iters == 0 {
        return Err(Error::InvalidConfig("k and iters must be >= 1".into()));
    }
    let first = features.first().ok_or(Error::EmptyInput)?;
    let dim = first.dim();
    let total: usize = features.iter().map(FeatureSequence::num_frames).sum();
    for f in features {
        if f.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: f.dim(),
            });
        }
        if f.frames.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("features of {}", f.utterance_id)));
        }
    }
    if total < k {
        return Err(Error::TooFewFrames {
            frames: total,
            distinct: total,
            k,
        });
    }

    let mut data = Array2::<f64>::zeros((total, dim));
    let mut row = 0;
    for f in features {
        let n = f.num_frames();
        data.slice_mut(ndarray::s![row..row + n, ..]).assign(&f.frames);
        row += n;
    }

    let mut centroids = init_centroids(&data, k, seed)?;
    let mut labels = vec![usize::MAX; total];
    let mut inertia = Vec::with_capacity(iters);
    let mut converged = false;

    for _ in 0..iters {
        let assigned: Vec<(usize, f64)> = (0..total)
            .into_par_iter()
            .map(|i| {
                let (k1, d) = nearest_row(&centroids, data.row(i));
                (k1 - 1, d)
            })
            .collect();
        inertia.push(assigned.iter().map(|&(_, d)| d).sum());

        let unchanged = assigned.iter().zip(&labels).all(|(&(a, _), &b)| a == b);
        for (label, &(a, _)) in labels.iter_mut().zip(&assigned) {
            *label = a;
        }
        if unchanged {
            converged = true;
            break;
        }

        let mut sums = Array2::<f64>::zeros((k, dim));
        let mut counts = vec![0usize; k];
        for (x, &label) in data.outer_iter().zip(&labels) {
            let mut s = sums.row_mut(label);
            s += &x;
            counts[label] += 1;
        }

        // farthest frames first, each used for at most one empty cluster
        let mut by_distance: Vec<usize> = (0..total).collect();
        by_distance.sort_by(|&a, &b| assigned[b].1.total_cmp(&assigned[a].1).then(a.cmp(&b)));
        let mut donors = by_distance.into_iter();

        for c in 0..k {
            if counts[c] > 0 {
                let mean = &sums.row(c) / counts[c] as f64;
                centroids.row_mut(c).assign(&mean);
            } else if let Some(frame) = donors.next() {
                centroids.row_mut(c).assign(&data.row(frame));
            }
        }
    }

    let codebook = Codebook::new(centroids, format!("kmeans k={k} seed={seed} frames={total}"))?;
    Ok(KMeansFit {
        codebook,
        inertia,
        converged,
    })
}

fn init_centroids(data: &Array2<f64>, k: usize, seed: u64) -> Result<Array2<f64>> {
    let mut order: Vec<usize> = (0..data.nrows()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    for idx in order {
        if chosen.iter().all(|&c| data.row(c) != data.row(idx)) {
            chosen.push(idx);
            if chosen.len() == k {
                break;
            }
        }
    }
    if chosen.len() < k {
        return Err(Error::TooFewFrames {
            frames: data.nrows(),
            distinct: chosen.len(),
            k,
        });
    }
    Ok(data.select(Axis(0), &chosen))
}
