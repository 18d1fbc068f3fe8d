// SPDX-License-Identifier: MIT OR Apache-2.0

//! Single-precision inference for a frozen AE-RNN.
//!
//! Holds `f32` copies of the parameters, with the embedding already pushed
//! through each first-layer input projection, and computes span costs with
//! reused buffers. Per-token log-probabilities are accumulated in `f64`.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView2, ArrayViewMut2};

use super::aernn::{Aernn, AernnArch};
use crate::seg::CostTable;

#[derive(Clone, Debug)]
struct Gru32 {
    /// Input projection; `None` for first layers, which use a token table.
    w_ih: Option<Array2<f32>>,
    b_ih: Array1<f32>,
    w_hh: Array2<f32>,
    b_hh: Array1<f32>,
    hidden: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct ScoringEngine {
    alphabet_size: usize,
    end_symbol: bool,
    /// Token → first encoder layer input projection, bias included.
    enc_tokens: Array2<f32>,
    /// Token → decoder input projection, bias included.
    dec_tokens: Array2<f32>,
    encoder: Vec<Gru32>,
    decoder: Gru32,
    latent_w: Array2<f32>,
    latent_b: Array1<f32>,
    bridge_w: Array2<f32>,
    bridge_b: Array1<f32>,
    out_w: Array2<f32>,
    out_b: Array1<f32>,
}

#[inline]
fn sigmoid(v: f32) -> f32 {
    1.0 / (1.0 + (-v).exp())
}

/// One GRU step over the first `rows` rows: `gi` holds the input
/// projections (bias included), `h` is updated in place, `gh` is scratch.
fn step(g: &Gru32, gi: ArrayView2<'_, f32>, mut h: ArrayViewMut2<'_, f32>, gh: ArrayViewMut2<'_, f32>) {
    let rows = h.nrows();
    let hid = g.hidden;
    let mut gh = gh.slice_move(s![..rows, ..3 * hid]);
    general_mat_mul(1.0, &h, &g.w_hh, 0.0, &mut gh);
    let bh = g.b_hh.as_slice().expect("contiguous");
    for i in 0..rows {
        let gi = gi.row(i);
        let gi = gi.as_slice().expect("contiguous");
        let ghr = gh.row(i);
        let ghr = ghr.as_slice().expect("contiguous");
        let mut hr = h.row_mut(i);
        let hs = hr.as_slice_mut().expect("contiguous");
        for c in 0..hid {
            let r = sigmoid(gi[c] + ghr[c] + bh[c]);
            let z = sigmoid(gi[hid + c] + ghr[hid + c] + bh[hid + c]);
            let n = (gi[2 * hid + c] + r * (ghr[2 * hid + c] + bh[2 * hid + c])).tanh();
            hs[c] = (1.0 - z) * n + z * hs[c];
        }
    }
}

/// Copies rows `tokens` of `table` into the first rows of `out`.
fn gather(table: &Array2<f32>, tokens: impl Iterator<Item = usize>, out: &mut Array2<f32>) -> usize {
    let mut n = 0;
    for t in tokens {
        out.row_mut(n).assign(&table.row(t));
        n += 1;
    }
    n
}

fn add_bias(mut m: ArrayViewMut2<'_, f32>, b: &Array1<f32>) {
    for mut row in m.rows_mut() {
        row += b;
    }
}

impl ScoringEngine {
    pub(crate) fn new(net: &Aernn) -> Self {
        let arch: &AernnArch = net.arch();
        let p = net.params();
        let get = |name: &str| -> Array2<f32> {
            let id = p.find(name).unwrap_or_else(|| panic!("parameter {name} missing"));
            p.view(id).mapv(|v| v as f32)
        };
        let row = |name: &str| -> Array1<f32> { get(name).row(0).to_owned() };
        let gru = |prefix: &str, first: bool| Gru32 {
            w_ih: (!first).then(|| get(&format!("{prefix}.w_ih"))),
            b_ih: row(&format!("{prefix}.b_ih")),
            w_hh: get(&format!("{prefix}.w_hh")),
            b_hh: row(&format!("{prefix}.b_hh")),
            hidden: get(&format!("{prefix}.w_hh")).nrows(),
        };
        let emb = p.view(p.find("embedding").expect("embedding"));
        let token_table = |prefix: &str| -> Array2<f32> {
            let w = p.view(p.find(&format!("{prefix}.w_ih")).expect("w_ih"));
            let b = p.view(p.find(&format!("{prefix}.b_ih")).expect("b_ih"));
            (emb.dot(&w) + &b).mapv(|v| v as f32)
        };
        Self {
            alphabet_size: arch.alphabet_size,
            end_symbol: arch.end_symbol,
            enc_tokens: token_table("encoder.0"),
            dec_tokens: token_table("decoder"),
            encoder: (0..arch.encoder_layers)
                .map(|l| gru(&format!("encoder.{l}"), l == 0))
                .collect(),
            decoder: gru("decoder", true),
            latent_w: get("latent.w"),
            latent_b: row("latent.b"),
            bridge_w: get("bridge.w"),
            bridge_b: row("bridge.b"),
            out_w: get("output.w"),
            out_b: row("output.b"),
        }
    }

    /// Decoder initial states for the first `rows` rows of top-layer
    /// encoder states `top`.
    fn bridge(&self, top: ArrayView2<'_, f32>) -> Array2<f32> {
        let mut latent = top.dot(&self.latent_w);
        add_bias(latent.view_mut(), &self.latent_b);
        let mut h0 = latent.dot(&self.bridge_w);
        add_bias(h0.view_mut(), &self.bridge_b);
        h0.mapv_inplace(f32::tanh);
        h0
    }

    /// Summed NLL per span. `toks` are 0-based symbols; `spans` are
    /// `(start, len)` pairs (0-based start) sorted by decreasing length, and
    /// `h` holds their decoder initial states in the same order.
    fn decode(&self, toks: &[usize], spans: &[(usize, usize)], mut h: Array2<f32>) -> Vec<f64> {
        let extra = usize::from(self.end_symbol);
        let start = self.alphabet_size;
        let end = self.alphabet_size;
        let rows = spans.len();
        let steps = spans.first().map_or(0, |s| s.1) + extra;
        let hid = self.decoder.hidden;
        let vocab = self.out_w.ncols();
        let mut gi = Array2::<f32>::zeros((rows, 3 * hid));
        let mut gh = Array2::<f32>::zeros((rows, 3 * hid));
        let mut logits = Array2::<f32>::zeros((rows, vocab));
        let mut cost = vec![0.0f64; rows];
        for j in 0..steps {
            let active = spans.iter().take_while(|&&(_, l)| l + extra > j).count();
            gather(
                &self.dec_tokens,
                spans[..active]
                    .iter()
                    .map(|&(a, _)| if j == 0 { start } else { toks[a + j - 1] }),
                &mut gi,
            );
            step(
                &self.decoder,
                gi.slice(s![..active, ..]),
                h.slice_mut(s![..active, ..]),
                gh.view_mut(),
            );
            let mut lg = logits.slice_mut(s![..active, ..]);
            general_mat_mul(1.0, &h.slice(s![..active, ..]), &self.out_w, 0.0, &mut lg);
            for (i, &(a, l)) in spans[..active].iter().enumerate() {
                let mut row = lg.row_mut(i);
                row += &self.out_b;
                let max = row.fold(f32::NEG_INFINITY, |m, &v| m.max(v));
                let sum: f32 = row.iter().map(|&v| (v - max).exp()).sum();
                let y = if j < l { toks[a + j] } else { end };
                cost[i] += (max + sum.ln() - row[y]) as f64;
            }
        }
        cost
    }

    /// Cost of one span of symbols `1..=K`.
    pub(crate) fn span_cost(&self, span: &[usize]) -> f64 {
        if span.is_empty() {
            return 0.0;
        }
        let toks: Vec<usize> = span.iter().map(|&s| s - 1).collect();
        let mut states: Vec<Array2<f32>> = self.encoder.iter().map(|g| Array2::zeros((1, g.hidden))).collect();
        let mut gi = Array2::<f32>::zeros((1, 3 * self.encoder.iter().map(|g| g.hidden).max().unwrap_or(0)));
        let mut gh = gi.clone();
        for &t in &toks {
            self.encoder_step(&mut states, &[t], 1, &mut gi, &mut gh);
        }
        let top = states.last().expect("at least one layer");
        let h0 = self.bridge(top.view());
        self.decode(&toks, &[(0, toks.len())], h0)[0]
    }

    /// Advances every encoder layer by one step for the first `n` rows.
    fn encoder_step(
        &self,
        states: &mut [Array2<f32>],
        tokens: &[usize],
        n: usize,
        gi: &mut Array2<f32>,
        gh: &mut Array2<f32>,
    ) {
        for (l, g) in self.encoder.iter().enumerate() {
            let width = 3 * g.hidden;
            if l == 0 {
                for (i, &t) in tokens.iter().enumerate() {
                    gi.slice_mut(s![i, ..width]).assign(&self.enc_tokens.row(t));
                }
            } else {
                let (prev, _) = states.split_at(l);
                let x = prev[l - 1].slice(s![..n, ..]);
                let mut out = gi.slice_mut(s![..n, ..width]);
                general_mat_mul(1.0, &x, g.w_ih.as_ref().expect("upper layer"), 0.0, &mut out);
                add_bias(out, &g.b_ih);
            }
            step(g, gi.slice(s![..n, ..width]), states[l].slice_mut(s![..n, ..]), gh.view_mut());
        }
    }

    /// Costs of all spans of `symbols` up to `max_len` long.
    pub(crate) fn span_cost_table(&self, symbols: &[usize], max_len: usize) -> CostTable {
        let len = symbols.len();
        let width = max_len.min(len);
        let mut table = CostTable::new(len, max_len);
        if width == 0 {
            return table;
        }
        let toks: Vec<usize> = symbols.iter().map(|&s| s - 1).collect();
        let widest = self.encoder.iter().map(|g| 3 * g.hidden).max().unwrap_or(0);
        let mut states: Vec<Array2<f32>> = self.encoder.iter().map(|g| Array2::zeros((len, g.hidden))).collect();
        let mut gi = Array2::<f32>::zeros((len, widest));
        let mut gh = Array2::<f32>::zeros((len, widest));
        // groups[l - 1]: decoder initial states of spans of length l
        let mut groups = Vec::with_capacity(width);
        for i in 0..width {
            let n = len - i;
            self.encoder_step(&mut states, &toks[i..i + n], n, &mut gi, &mut gh);
            let top = states.last().expect("at least one layer");
            groups.push(self.bridge(top.slice(s![..n, ..])));
        }

        let mut spans = Vec::new();
        for l in (1..=width).rev() {
            spans.extend((0..=len - l).map(|a| (a, l)));
        }
        let views: Vec<_> = groups.iter().rev().map(|g| g.view()).collect();
        let h = ndarray::concatenate(ndarray::Axis(0), &views).expect("matching widths");
        let cost = self.decode(&toks, &spans, h);
        for (&(a, l), &c) in spans.iter().zip(&cost) {
            table.set(a + 1, a + l, c);
        }
        table
    }
}
