// SPDX-License-Identifier: MIT OR Apache-2.0

//! Autoencoding recurrent network used as a segment scorer.
//!
//! A GRU encoder reads a symbol span, its last top-layer state is projected
//! to a latent vector, the latent is mapped through `tanh` to the decoder's
//! initial state, and a single-layer GRU decoder reconstructs the span with
//! teacher forcing (first input is a start token). The segment cost is the
//! summed negative log-likelihood of the true symbols, plus an end-of-span
//! token when the architecture has one.

use ndarray::linalg::general_mat_mul;
use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gru::{gru_step, layer_backward, layer_forward, GruIds, LayerTrace};
use super::params::{ParamId, Params};
use crate::error::{Error, Result};
use crate::seg::CostTable;

/// Layer sizes of the network.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AernnArch {
    pub alphabet_size: usize,
    pub embedding_dim: usize,
    pub encoder_hidden: usize,
    pub encoder_layers: usize,
    pub latent_dim: usize,
    pub decoder_hidden: usize,
    /// Append an end-of-span token whose NLL is part of the cost.
    pub end_symbol: bool,
}

/// Named architecture presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AernnPreset {
    /// 10-d embedding, one 500-d encoder layer, 50-d latent, 500-d decoder.
    ChainedSpeech,
    /// 10-d embedding, three 200-d encoder layers, 25-d latent, 200-d decoder.
    Phonemic,
}

impl AernnPreset {
    pub fn arch(self, alphabet_size: usize) -> AernnArch {
        match self {
            AernnPreset::ChainedSpeech => AernnArch {
                alphabet_size,
                embedding_dim: 10,
                encoder_hidden: 500,
                encoder_layers: 1,
                latent_dim: 50,
                decoder_hidden: 500,
                end_symbol: true,
            },
            AernnPreset::Phonemic => AernnArch {
                alphabet_size,
                embedding_dim: 10,
                encoder_hidden: 200,
                encoder_layers: 3,
                latent_dim: 25,
                decoder_hidden: 200,
                end_symbol: true,
            },
        }
    }
}

impl AernnArch {
    pub fn validate(&self) -> Result<()> {
        let sizes = [
            self.alphabet_size,
            self.embedding_dim,
            self.encoder_hidden,
            self.encoder_layers,
            self.latent_dim,
            self.decoder_hidden,
        ];
        if sizes.contains(&0) {
            return Err(Error::InvalidConfig(format!("all AE-RNN sizes must be >= 1: {self:?}")));
        }
        Ok(())
    }

    /// Symbols plus the start token.
    pub fn input_vocab(&self) -> usize {
        self.alphabet_size + 1
    }

    /// Symbols plus the end token, if enabled.
    pub fn output_vocab(&self) -> usize {
        self.alphabet_size + usize::from(self.end_symbol)
    }

    fn start_token(&self) -> usize {
        self.alphabet_size
    }

    fn end_token(&self) -> usize {
        self.alphabet_size
    }
}

#[derive(Clone, Debug)]
struct Layout {
    embedding: ParamId,
    encoder: Vec<GruIds>,
    latent_w: ParamId,
    latent_b: ParamId,
    bridge_w: ParamId,
    bridge_b: ParamId,
    decoder: GruIds,
    out_w: ParamId,
    out_b: ParamId,
}

fn layout(arch: &AernnArch) -> (Layout, Params) {
    let mut b = Params::builder();
    let embedding = b.add("embedding", arch.input_vocab(), arch.embedding_dim);
    let encoder = (0..arch.encoder_layers)
        .map(|l| {
            let input = if l == 0 { arch.embedding_dim } else { arch.encoder_hidden };
            GruIds::register(&mut b, &format!("encoder.{l}"), input, arch.encoder_hidden)
        })
        .collect();
    let latent_w = b.add("latent.w", arch.encoder_hidden, arch.latent_dim);
    let latent_b = b.add("latent.b", 1, arch.latent_dim);
    let bridge_w = b.add("bridge.w", arch.latent_dim, arch.decoder_hidden);
    let bridge_b = b.add("bridge.b", 1, arch.decoder_hidden);
    let decoder = GruIds::register(&mut b, "decoder", arch.embedding_dim, arch.decoder_hidden);
    let out_w = b.add("output.w", arch.decoder_hidden, arch.output_vocab());
    let out_b = b.add("output.b", 1, arch.output_vocab());
    (
        Layout {
            embedding,
            encoder,
            latent_w,
            latent_b,
            bridge_w,
            bridge_b,
            decoder,
            out_w,
            out_b,
        },
        b.build(),
    )
}

/// Summed loss over a batch and the number of predicted tokens.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatchLoss {
    pub sum: f64,
    pub tokens: usize,
}

impl BatchLoss {
    pub fn mean(&self) -> f64 {
        self.sum / self.tokens as f64
    }
}

/// The encoder-decoder network and its parameters.
#[derive(Clone, Debug)]
pub struct Aernn {
    arch: AernnArch,
    layout: Layout,
    params: Params,
}

struct Forward {
    enc_tokens: Vec<Vec<usize>>,
    enc_traces: Vec<LayerTrace>,
    enc_final: Array2<f64>,
    latent: Array2<f64>,
    h0: Array2<f64>,
    dec_tokens: Vec<Vec<usize>>,
    dec_trace: LayerTrace,
    targets: Vec<Vec<usize>>,
    probs: Vec<Array2<f64>>,
    // per step, per active row
    nll: Vec<Vec<f64>>,
    loss: BatchLoss,
}

impl Aernn {
    /// All-zero parameters.
    pub fn zeros(arch: AernnArch) -> Result<Self> {
        arch.validate()?;
        let (layout, params) = layout(&arch);
        Ok(Self { arch, layout, params })
    }

    /// Every parameter drawn uniformly from `[-scale, scale]`.
    pub fn init_uniform(arch: AernnArch, scale: f64, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(arch)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in net.params.values_mut() {
            *v = rng.random_range(-scale..=scale);
        }
        Ok(net)
    }

    /// Wraps externally loaded parameters, checking names and shapes.
    pub fn from_params(arch: AernnArch, params: Params) -> Result<Self> {
        let mut net = Self::zeros(arch)?;
        if net.params.entries() != params.entries() {
            return Err(Error::InvalidConfig(
                "parameter names or shapes do not match the architecture".into(),
            ));
        }
        net.params = params;
        Ok(net)
    }

    pub fn arch(&self) -> &AernnArch {
        &self.arch
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Params {
        &mut self.params
    }

    fn embed(&self, tokens: &[usize]) -> Array2<f64> {
        self.params.view(self.layout.embedding).select(Axis(0), tokens)
    }

    /// Encoder top state → (latent, decoder initial state).
    fn bridge(&self, enc_top: ArrayView2<'_, f64>) -> (Array2<f64>, Array2<f64>) {
        let p = &self.params;
        let l = &self.layout;
        let mut latent = enc_top.dot(&p.view(l.latent_w));
        latent += &p.view(l.latent_b);
        let mut h0 = latent.dot(&p.view(l.bridge_w));
        h0 += &p.view(l.bridge_b);
        h0.mapv_inplace(f64::tanh);
        (latent, h0)
    }

    /// Row-wise log-softmax of the output layer for decoder states `h`.
    fn log_probs(&self, h: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut logits = h.dot(&self.params.view(self.layout.out_w));
        logits += &self.params.view(self.layout.out_b);
        for mut row in logits.rows_mut() {
            let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let log_z = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            row.mapv_inplace(|v| v - log_z);
        }
        logits
    }

    /// Forward pass over `batch` (symbols `1..=K`), rows re-ordered by
    /// decreasing length.
    fn forward(&self, batch: &[&[usize]]) -> Forward {
        let arch = &self.arch;
        let mut order: Vec<usize> = (0..batch.len()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(batch[i].len()));
        let seqs: Vec<Vec<usize>> = order
            .iter()
            .map(|&i| batch[i].iter().map(|&s| s - 1).collect())
            .collect();
        let rows = seqs.len();
        let max_len = seqs.first().map_or(0, Vec::len);
        let extra = usize::from(arch.end_symbol);

        let enc_tokens: Vec<Vec<usize>> = (0..max_len)
            .map(|t| seqs.iter().take_while(|q| q.len() > t).map(|q| q[t]).collect())
            .collect();
        let mut inputs: Vec<Array2<f64>> = enc_tokens.iter().map(|tok| self.embed(tok)).collect();
        let mut enc_traces = Vec::with_capacity(arch.encoder_layers);
        let mut enc_final = Array2::zeros((rows, arch.encoder_hidden));
        for ids in &self.layout.encoder {
            let (trace, last) = layer_forward(&self.params, ids, inputs, Array2::zeros((rows, ids.hidden)));
            inputs = trace.outputs();
            enc_traces.push(trace);
            enc_final = last;
        }

        let (latent, h0) = self.bridge(enc_final.view());

        let dec_steps = max_len + extra;
        let mut dec_tokens = Vec::with_capacity(dec_steps);
        let mut targets = Vec::with_capacity(dec_steps);
        for j in 0..dec_steps {
            let active: Vec<&Vec<usize>> = seqs.iter().take_while(|q| q.len() + extra > j).collect();
            dec_tokens.push(
                active
                    .iter()
                    .map(|q| if j == 0 { arch.start_token() } else { q[j - 1] })
                    .collect::<Vec<_>>(),
            );
            targets.push(
                active
                    .iter()
                    .map(|q| if j < q.len() { q[j] } else { arch.end_token() })
                    .collect::<Vec<_>>(),
            );
        }
        let dec_inputs: Vec<Array2<f64>> = dec_tokens.iter().map(|tok| self.embed(tok)).collect();
        let (dec_trace, _) = layer_forward(&self.params, &self.layout.decoder, dec_inputs, h0.clone());

        let mut probs = Vec::with_capacity(dec_steps);
        let mut nll = Vec::with_capacity(dec_steps);
        let mut sum = 0.0;
        let mut tokens = 0;
        for (step, tgt) in dec_trace.steps.iter().zip(&targets) {
            let logp = self.log_probs(step.h.view());
            let row_nll: Vec<f64> = tgt.iter().enumerate().map(|(i, &y)| -logp[[i, y]]).collect();
            sum += row_nll.iter().sum::<f64>();
            tokens += row_nll.len();
            nll.push(row_nll);
            probs.push(logp.mapv(f64::exp));
        }

        Forward {
            enc_tokens,
            enc_traces,
            enc_final,
            latent,
            h0,
            dec_tokens,
            dec_trace,
            targets,
            probs,
            nll,
            loss: BatchLoss { sum, tokens },
        }
    }

    /// Summed reconstruction NLL of every sequence in `batch`.
    pub fn loss(&self, batch: &[&[usize]]) -> BatchLoss {
        self.forward(batch).loss
    }

    /// Summed loss, with its gradient added into `grad` (same layout as
    /// [`Aernn::params`]).
    pub fn loss_and_grad(&self, batch: &[&[usize]], grad: &mut Params) -> BatchLoss {
        let f = self.forward(batch);
        let p = &self.params;
        let l = &self.layout;

        // output layer
        let mut dh_dec = Vec::with_capacity(f.probs.len());
        for ((step, probs), tgt) in f.dec_trace.steps.iter().zip(&f.probs).zip(&f.targets) {
            let mut d_logits = probs.clone();
            for (i, &y) in tgt.iter().enumerate() {
                d_logits[[i, y]] -= 1.0;
            }
            general_mat_mul(1.0, &step.h.t(), &d_logits, 1.0, &mut grad.view_mut(l.out_w));
            add_row_sums(grad, l.out_b, &d_logits);
            dh_dec.push(d_logits.dot(&p.view(l.out_w).t()));
        }

        let rows = f.h0.nrows();
        let (d_dec_in, dh0) = layer_backward(
            p,
            grad,
            &l.decoder,
            &f.dec_trace,
            Some(&dh_dec),
            Array2::zeros((rows, self.arch.decoder_hidden)),
        );
        scatter_embedding(grad, l.embedding, &f.dec_tokens, &d_dec_in);

        // bridge and latent projections
        let du = &dh0 * &f.h0.mapv(|h| 1.0 - h * h);
        general_mat_mul(1.0, &f.latent.t(), &du, 1.0, &mut grad.view_mut(l.bridge_w));
        add_row_sums(grad, l.bridge_b, &du);
        let d_latent = du.dot(&p.view(l.bridge_w).t());
        general_mat_mul(1.0, &f.enc_final.t(), &d_latent, 1.0, &mut grad.view_mut(l.latent_w));
        add_row_sums(grad, l.latent_b, &d_latent);
        let mut d_final = d_latent.dot(&p.view(l.latent_w).t());

        let mut d_out: Option<Vec<Array2<f64>>> = None;
        for (ids, trace) in l.encoder.iter().zip(&f.enc_traces).rev() {
            let (d_in, _) = layer_backward(p, grad, ids, trace, d_out.as_deref(), d_final);
            d_final = Array2::zeros((rows, self.arch.encoder_hidden));
            d_out = Some(d_in);
        }
        if let Some(d_in) = d_out {
            scatter_embedding(grad, l.embedding, &f.enc_tokens, &d_in);
        }
        f.loss
    }

    /// Per-position NLL of reconstructing `span` (symbols `1..=K`); the last
    /// entry is the end token when the architecture has one.
    pub fn position_nll(&self, span: &[usize]) -> Vec<f64> {
        self.forward(&[span]).nll.into_iter().map(|v| v[0]).collect()
    }

    /// Segment cost of a single span, computed on its own.
    pub fn span_cost(&self, span: &[usize]) -> f64 {
        self.position_nll(span).iter().sum()
    }

    /// Costs of every span of `symbols` up to `max_len` long, in one batched
    /// pass: the encoder runs once per start position (each step extends all
    /// spans by one symbol) and the decoder runs over all spans together,
    /// longest first.
    pub fn span_cost_table(&self, symbols: &[usize], max_len: usize) -> CostTable {
        let len = symbols.len();
        let width = max_len.min(len);
        let mut table = CostTable::new(len, max_len);
        if width == 0 {
            return table;
        }
        let arch = &self.arch;
        let toks: Vec<usize> = symbols.iter().map(|&s| s - 1).collect();
        let extra = usize::from(arch.end_symbol);

        // groups[l - 1]: decoder initial states of spans of length l, one row
        // per start position
        let mut states: Vec<Array2<f64>> = self
            .layout
            .encoder
            .iter()
            .map(|ids| Array2::zeros((len, ids.hidden)))
            .collect();
        let mut groups = Vec::with_capacity(width);
        for i in 0..width {
            let n = len - i;
            let mut x = self.embed(&toks[i..i + n]);
            for (ids, h) in self.layout.encoder.iter().zip(states.iter_mut()) {
                let hp = h.slice(s![..n, ..]).to_owned();
                let step = gru_step(&self.params, ids, x, hp);
                h.slice_mut(s![..n, ..]).assign(&step.h);
                x = step.h;
            }
            groups.push(self.bridge(x.view()).1);
        }

        // rows ordered by span length, longest first
        let mut meta = Vec::new();
        for l in (1..=width).rev() {
            meta.extend((0..=len - l).map(|a| (a, l)));
        }
        let views: Vec<_> = groups.iter().rev().map(|g| g.view()).collect();
        let mut h = concatenate(Axis(0), &views).expect("matching widths");
        let mut cost = vec![0.0; meta.len()];

        for j in 0..width + extra {
            let active = meta.iter().take_while(|&&(_, l)| l + extra > j).count();
            let inputs: Vec<usize> = meta[..active]
                .iter()
                .map(|&(a, _)| if j == 0 { arch.start_token() } else { toks[a + j - 1] })
                .collect();
            let hp = h.slice(s![..active, ..]).to_owned();
            let step = gru_step(&self.params, &self.layout.decoder, self.embed(&inputs), hp);
            let logp = self.log_probs(step.h.view());
            for (i, &(a, l)) in meta[..active].iter().enumerate() {
                let y = if j < l { toks[a + j] } else { arch.end_token() };
                cost[i] -= logp[[i, y]];
            }
            h.slice_mut(s![..active, ..]).assign(&step.h);
        }

        for (&(a, l), &c) in meta.iter().zip(&cost) {
            table.set(a + 1, a + l, c);
        }
        table
    }
}

fn add_row_sums(grad: &mut Params, id: ParamId, d: &Array2<f64>) {
    let sums: Array1<f64> = d.sum_axis(Axis(0));
    let mut b = grad.view_mut(id);
    let mut row = b.row_mut(0);
    row += &sums;
}

fn scatter_embedding(grad: &mut Params, id: ParamId, tokens: &[Vec<usize>], d_inputs: &[Array2<f64>]) {
    let mut emb = grad.view_mut(id);
    for (tok, d) in tokens.iter().zip(d_inputs) {
        for (i, &t) in tok.iter().enumerate() {
            let mut row = emb.row_mut(t);
            row += &d.row(i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_arch(end_symbol: bool) -> AernnArch {
        AernnArch {
            alphabet_size: 4,
            embedding_dim: 3,
            encoder_hidden: 5,
            encoder_layers: 2,
            latent_dim: 2,
            decoder_hidden: 4,
            end_symbol,
        }
    }

    #[test]
    fn uniform_outputs_cost_length_times_log_vocab() {
        let mut arch = tiny_arch(false);
        arch.alphabet_size = 10;
        let net = Aernn::zeros(arch).unwrap();
        let c = net.span_cost(&[3, 1, 7]);
        assert!((c - 3.0 * 10f64.ln()).abs() < 1e-12);

        let mut arch = tiny_arch(true);
        arch.alphabet_size = 10;
        let net = Aernn::zeros(arch).unwrap();
        assert!((net.span_cost(&[3, 1, 7]) - 4.0 * 11f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn table_matches_single_span_path() {
        for end in [true, false] {
            let net = Aernn::init_uniform(tiny_arch(end), 0.5, 11).unwrap();
            let symbols = [1, 4, 2, 2, 3, 1, 4];
            let table = net.span_cost_table(&symbols, 5);
            use crate::seg::SegmentCost;
            for a in 1..=symbols.len() {
                for b in a..=symbols.len() {
                    let t = table.cost(a, b);
                    if b - a + 1 > 5 {
                        assert!(t.is_infinite());
                        continue;
                    }
                    let single = net.span_cost(&symbols[a - 1..b]);
                    assert!((t - single).abs() < 1e-9 * single.abs().max(1.0), "({a},{b}) {t} {single}");
                }
            }
        }
    }

    #[test]
    fn batch_loss_is_sum_of_single_losses() {
        let net = Aernn::init_uniform(tiny_arch(true), 0.3, 5).unwrap();
        let seqs: [&[usize]; 3] = [&[1, 2], &[3, 4, 1, 1], &[2]];
        let batch = net.loss(&seqs);
        let singles: f64 = seqs.iter().map(|q| net.span_cost(q)).sum();
        assert!((batch.sum - singles).abs() < 1e-10);
        assert_eq!(batch.tokens, 2 + 4 + 1 + 3);
    }

    #[test]
    fn from_params_checks_layout() {
        let a = Aernn::zeros(tiny_arch(true)).unwrap();
        let mut other = tiny_arch(true);
        other.latent_dim = 3;
        assert!(Aernn::from_params(other, a.params().clone()).is_err());
        assert!(Aernn::from_params(tiny_arch(true), a.params().clone()).is_ok());
    }
}
