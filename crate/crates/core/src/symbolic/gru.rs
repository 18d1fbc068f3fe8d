// SPDX-License-Identifier: MIT OR Apache-2.0

//! Gated recurrent unit over length-sorted ("packed") batches.
//!
//! Rows of a batch are ordered by decreasing sequence length, so at every
//! time step the still-active sequences form a prefix of the rows. Gate
//! layout inside the `3H` axis is `[reset | update | candidate]`:
//!
//! ```text
//! r  = σ(x·W_ir + b_ir + h·W_hr + b_hr)
//! z  = σ(x·W_iz + b_iz + h·W_hz + b_hz)
//! n  = tanh(x·W_in + b_in + r ⊙ (h·W_hn + b_hn))
//! h' = (1 - z) ⊙ n + z ⊙ h
//! ```

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayView2, Axis};

use super::params::{ParamId, Params, ParamsBuilder};

#[derive(Clone, Copy, Debug)]
pub(crate) struct GruIds {
    pub w_ih: ParamId,
    pub w_hh: ParamId,
    pub b_ih: ParamId,
    pub b_hh: ParamId,
    pub hidden: usize,
}

impl GruIds {
    pub fn register(b: &mut ParamsBuilder, prefix: &str, input: usize, hidden: usize) -> Self {
        Self {
            w_ih: b.add(format!("{prefix}.w_ih"), input, 3 * hidden),
            w_hh: b.add(format!("{prefix}.w_hh"), hidden, 3 * hidden),
            b_ih: b.add(format!("{prefix}.b_ih"), 1, 3 * hidden),
            b_hh: b.add(format!("{prefix}.b_hh"), 1, 3 * hidden),
            hidden,
        }
    }
}

#[inline]
fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

pub(crate) struct StepCache {
    x: Array2<f64>,
    h_prev: Array2<f64>,
    r: Array2<f64>,
    z: Array2<f64>,
    n: Array2<f64>,
    ghn: Array2<f64>,
    pub h: Array2<f64>,
}

pub(crate) fn gru_step(p: &Params, ids: &GruIds, x: Array2<f64>, h_prev: Array2<f64>) -> StepCache {
    let hid = ids.hidden;
    let rows = x.nrows();
    let mut gi = x.dot(&p.view(ids.w_ih));
    gi += &p.view(ids.b_ih);
    let mut gh = h_prev.dot(&p.view(ids.w_hh));
    gh += &p.view(ids.b_hh);

    let mut r = Array2::zeros((rows, hid));
    let mut z = Array2::zeros((rows, hid));
    let mut n = Array2::zeros((rows, hid));
    let mut ghn = Array2::zeros((rows, hid));
    let mut h = Array2::zeros((rows, hid));
    {
        let gi = gi.as_slice().expect("standard layout");
        let gh = gh.as_slice().expect("standard layout");
        let hp = h_prev.as_slice().expect("standard layout");
        let (rs, zs, ns) = (
            r.as_slice_mut().unwrap(),
            z.as_slice_mut().unwrap(),
            n.as_slice_mut().unwrap(),
        );
        let (ghns, hs) = (ghn.as_slice_mut().unwrap(), h.as_slice_mut().unwrap());
        for i in 0..rows {
            let g = i * 3 * hid;
            let o = i * hid;
            for c in 0..hid {
                let rv = sigmoid(gi[g + c] + gh[g + c]);
                let zv = sigmoid(gi[g + hid + c] + gh[g + hid + c]);
                let hn = gh[g + 2 * hid + c];
                let nv = (gi[g + 2 * hid + c] + rv * hn).tanh();
                rs[o + c] = rv;
                zs[o + c] = zv;
                ns[o + c] = nv;
                ghns[o + c] = hn;
                hs[o + c] = (1.0 - zv) * nv + zv * hp[o + c];
            }
        }
    }
    StepCache {
        x,
        h_prev,
        r,
        z,
        n,
        ghn,
        h,
    }
}

/// Accumulates parameter gradients into `grad` and returns `(dx, dh_prev)`.
pub(crate) fn gru_step_backward(
    p: &Params,
    grad: &mut Params,
    ids: &GruIds,
    cache: &StepCache,
    dh: ArrayView2<'_, f64>,
) -> (Array2<f64>, Array2<f64>) {
    let hid = ids.hidden;
    let rows = dh.nrows();
    let dh = dh.as_standard_layout();
    let mut dgi = Array2::<f64>::zeros((rows, 3 * hid));
    let mut dgh = Array2::<f64>::zeros((rows, 3 * hid));
    let mut dh_prev = Array2::<f64>::zeros((rows, hid));
    {
        let dh = dh.as_slice().unwrap();
        let (rs, zs, ns) = (
            cache.r.as_slice().unwrap(),
            cache.z.as_slice().unwrap(),
            cache.n.as_slice().unwrap(),
        );
        let (ghn, hp) = (cache.ghn.as_slice().unwrap(), cache.h_prev.as_slice().unwrap());
        let (dgi_s, dgh_s) = (dgi.as_slice_mut().unwrap(), dgh.as_slice_mut().unwrap());
        let dhp = dh_prev.as_slice_mut().unwrap();
        for i in 0..rows {
            let g = i * 3 * hid;
            let o = i * hid;
            for c in 0..hid {
                let d = dh[o + c];
                let (rv, zv, nv) = (rs[o + c], zs[o + c], ns[o + c]);
                let dn_pre = d * (1.0 - zv) * (1.0 - nv * nv);
                let dz_pre = d * (hp[o + c] - nv) * zv * (1.0 - zv);
                let dr_pre = dn_pre * ghn[o + c] * rv * (1.0 - rv);
                dhp[o + c] = d * zv;
                dgi_s[g + c] = dr_pre;
                dgi_s[g + hid + c] = dz_pre;
                dgi_s[g + 2 * hid + c] = dn_pre;
                dgh_s[g + c] = dr_pre;
                dgh_s[g + hid + c] = dz_pre;
                dgh_s[g + 2 * hid + c] = dn_pre * rv;
            }
        }
    }

    general_mat_mul(1.0, &cache.x.t(), &dgi, 1.0, &mut grad.view_mut(ids.w_ih));
    general_mat_mul(1.0, &cache.h_prev.t(), &dgh, 1.0, &mut grad.view_mut(ids.w_hh));
    {
        let mut b = grad.view_mut(ids.b_ih);
        let mut b = b.row_mut(0);
        b += &dgi.sum_axis(Axis(0));
    }
    {
        let mut b = grad.view_mut(ids.b_hh);
        let mut b = b.row_mut(0);
        b += &dgh.sum_axis(Axis(0));
    }

    let dx = dgi.dot(&p.view(ids.w_ih).t());
    general_mat_mul(1.0, &dgh, &p.view(ids.w_hh).t(), 1.0, &mut dh_prev);
    (dx, dh_prev)
}

pub(crate) struct LayerTrace {
    pub steps: Vec<StepCache>,
}

impl LayerTrace {
    /// Hidden outputs per step (active rows only).
    pub fn outputs(&self) -> Vec<Array2<f64>> {
        self.steps.iter().map(|c| c.h.clone()).collect()
    }
}

/// Runs one layer over packed inputs; `inputs[t]` holds the active rows at
/// step `t`. Returns the trace and the last hidden state of every row.
pub(crate) fn layer_forward(
    p: &Params,
    ids: &GruIds,
    inputs: Vec<Array2<f64>>,
    h0: Array2<f64>,
) -> (LayerTrace, Array2<f64>) {
    let mut h = h0;
    let mut steps = Vec::with_capacity(inputs.len());
    for x in inputs {
        let n = x.nrows();
        let hp = h.slice(s![..n, ..]).to_owned();
        let cache = gru_step(p, ids, x, hp);
        h.slice_mut(s![..n, ..]).assign(&cache.h);
        steps.push(cache);
    }
    (LayerTrace { steps }, h)
}

/// Backpropagates through a layer. `d_out[t]` is the gradient arriving at
/// the step-`t` outputs, `d_final` the gradient at each row's last state.
/// Returns per-step input gradients and the gradient at `h0`.
pub(crate) fn layer_backward(
    p: &Params,
    grad: &mut Params,
    ids: &GruIds,
    trace: &LayerTrace,
    d_out: Option<&[Array2<f64>]>,
    d_final: Array2<f64>,
) -> (Vec<Array2<f64>>, Array2<f64>) {
    let mut dh = d_final;
    let mut d_inputs = vec![Array2::zeros((0, 0)); trace.steps.len()];
    for (t, cache) in trace.steps.iter().enumerate().rev() {
        let n = cache.h.nrows();
        let mut g = dh.slice(s![..n, ..]).to_owned();
        if let Some(d_out) = d_out {
            g += &d_out[t];
        }
        let (dx, dhp) = gru_step_backward(p, grad, ids, cache, g.view());
        dh.slice_mut(s![..n, ..]).assign(&dhp);
        d_inputs[t] = dx;
    }
    (d_inputs, dh)
}
