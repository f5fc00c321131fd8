//! Scalar memory cells.
//!
//! Each node of a genome is a scalar unit: it receives the weighted sum of its
//! incoming edges (`x`) and produces one output. Recurrent cells additionally
//! carry their own hidden state (and, for LSTM, a cell state) from the previous
//! time step.
//!
//! Parameter layouts (in order):
//!
//! | kind        | parameters                                                  |
//! |-------------|-------------------------------------------------------------|
//! | `simple`    | `b`                                                         |
//! | `delta_rnn` | `alpha, beta1, beta2, v, r, r_bias, z_bias`                 |
//! | `gru`       | `wz, uz, bz, wr, ur, br, wh, uh, bh`                        |
//! | `lstm`      | `wi, ui, bi, wf, uf, bf, wo, uo, bo, wg, ug, bg`            |
//! | `mgu`       | `wf, uf, bf, wh, uh, bh`                                    |
//! | `ugrnn`     | `wc, uc, bc, wg, ug, bg`                                    |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genome::Genome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Simple,
    DeltaRnn,
    Gru,
    Lstm,
    Mgu,
    Ugrnn,
}

/// Index of the forget-gate bias inside an LSTM parameter vector.
pub const LSTM_FORGET_BIAS: usize = 5;

impl CellKind {
    pub const ALL: [CellKind; 6] = [
        CellKind::Simple,
        CellKind::DeltaRnn,
        CellKind::Gru,
        CellKind::Lstm,
        CellKind::Mgu,
        CellKind::Ugrnn,
    ];

    pub const fn parameter_count(self) -> usize {
        match self {
            CellKind::Simple => 1,
            CellKind::DeltaRnn => 7,
            CellKind::Gru => 9,
            CellKind::Lstm => 12,
            CellKind::Mgu => 6,
            CellKind::Ugrnn => 6,
        }
    }

    /// Number of recurrent state values the cell carries between steps.
    pub const fn state_len(self) -> usize {
        match self {
            CellKind::Simple => 0,
            CellKind::Lstm => 2,
            _ => 1,
        }
    }

    pub const fn has_forget_gate(self) -> bool {
        matches!(self, CellKind::Lstm)
    }

    pub const fn name(self) -> &'static str {
        match self {
            CellKind::Simple => "simple",
            CellKind::DeltaRnn => "delta_rnn",
            CellKind::Gru => "gru",
            CellKind::Lstm => "lstm",
            CellKind::Mgu => "mgu",
            CellKind::Ugrnn => "ugrnn",
        }
    }
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CellKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CellKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown cell kind `{s}`")))
    }
}

/// Recurrent memory of one node. `c` is only meaningful for LSTM cells.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CellState {
    pub h: f64,
    pub c: f64,
}

impl CellState {
    pub const ZERO: CellState = CellState { h: 0.0, c: 0.0 };

    pub fn is_finite(&self) -> bool {
        self.h.is_finite() && self.c.is_finite()
    }
}

/// Activations recorded by [`cell_forward`], consumed by [`cell_backward`].
#[derive(Debug, Clone, Copy)]
pub struct CellTrace {
    pub kind: CellKind,
    pub x: f64,
    pub prev: CellState,
    pub next: CellState,
    v: [f64; 5],
}

impl CellTrace {
    pub fn output(&self) -> f64 {
        self.next.h
    }
}

/// Gradients produced by [`cell_backward`].
#[derive(Debug, Clone, PartialEq)]
pub struct CellGradients {
    pub params: Vec<f64>,
    pub input: f64,
    pub prev_state: CellState,
}

#[inline]
fn sigmoid(a: f64) -> f64 {
    1.0 / (1.0 + (-a).exp())
}

/// Runs one step of a cell. The output is `trace.output()`; the new recurrent
/// state is `trace.next`.
pub fn cell_forward(kind: CellKind, params: &[f64], x: f64, prev: CellState) -> Result<CellTrace> {
    if params.len() != kind.parameter_count() {
        return Err(Error::contract(format!(
            "{kind} expects {} parameters, got {}",
            kind.parameter_count(),
            params.len()
        )));
    }
    if !x.is_finite() || !prev.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite input to {kind} cell")));
    }
    let trace = forward_unchecked(kind, params, x, prev);
    if !trace.next.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite {kind} activation")));
    }
    Ok(trace)
}

pub(crate) fn forward_unchecked(kind: CellKind, p: &[f64], x: f64, prev: CellState) -> CellTrace {
    let hp = prev.h;
    let mut v = [0.0; 5];
    let next = match kind {
        CellKind::Simple => CellState { h: (x + p[0]).tanh(), c: 0.0 },
        CellKind::DeltaRnn => {
            let (alpha, beta1, beta2, wv, wr, r_bias, z_bias) = (p[0], p[1], p[2], p[3], p[4], p[5], p[6]);
            let vx = wv * x;
            let rh = wr * hp;
            let zc = (alpha * vx * rh + beta1 * rh + beta2 * vx + z_bias).tanh();
            let g = sigmoid(vx + r_bias);
            v = [vx, rh, zc, g, 0.0];
            CellState { h: ((1.0 - g) * zc + g * hp).tanh(), c: 0.0 }
        }
        CellKind::Gru => {
            let z = sigmoid(p[0] * x + p[1] * hp + p[2]);
            let r = sigmoid(p[3] * x + p[4] * hp + p[5]);
            let hc = (p[6] * x + p[7] * (r * hp) + p[8]).tanh();
            v = [z, r, hc, 0.0, 0.0];
            CellState { h: (1.0 - z) * hp + z * hc, c: 0.0 }
        }
        CellKind::Lstm => {
            let cp = prev.c;
            let i = sigmoid(p[0] * x + p[1] * hp + p[2]);
            let f = sigmoid(p[3] * x + p[4] * hp + p[5]);
            let o = sigmoid(p[6] * x + p[7] * hp + p[8]);
            let g = (p[9] * x + p[10] * hp + p[11]).tanh();
            let c = f * cp + i * g;
            let tc = c.tanh();
            v = [i, f, o, g, tc];
            CellState { h: o * tc, c }
        }
        CellKind::Mgu => {
            let f = sigmoid(p[0] * x + p[1] * hp + p[2]);
            let hc = (p[3] * x + p[4] * (f * hp) + p[5]).tanh();
            v = [f, hc, 0.0, 0.0, 0.0];
            CellState { h: (1.0 - f) * hp + f * hc, c: 0.0 }
        }
        CellKind::Ugrnn => {
            let c = (p[0] * x + p[1] * hp + p[2]).tanh();
            let g = sigmoid(p[3] * x + p[4] * hp + p[5]);
            v = [c, g, 0.0, 0.0, 0.0];
            CellState { h: g * hp + (1.0 - g) * c, c: 0.0 }
        }
    };
    CellTrace { kind, x, prev, next, v }
}

/// Back-propagates through one recorded cell step.
///
/// `d_output` is the loss gradient with respect to the cell's output at this
/// step (from downstream edges), `d_state` the gradient with respect to the new
/// recurrent state coming from the next time step.
pub fn cell_backward(
    kind: CellKind,
    params: &[f64],
    trace: &CellTrace,
    d_output: f64,
    d_state: CellState,
) -> Result<CellGradients> {
    if trace.kind != kind {
        return Err(Error::contract(format!("trace recorded for {} used with {kind}", trace.kind)));
    }
    if params.len() != kind.parameter_count() {
        return Err(Error::contract(format!("{kind} expects {} parameters", kind.parameter_count())));
    }
    let mut grads = vec![0.0; params.len()];
    let (input, prev_state) = backward_into(params, trace, d_output, d_state, &mut grads);
    Ok(CellGradients { params: grads, input, prev_state })
}

/// Accumulates parameter gradients into `g` and returns `(d_x, d_prev_state)`.
pub(crate) fn backward_into(
    p: &[f64],
    t: &CellTrace,
    d_output: f64,
    d_state: CellState,
    g: &mut [f64],
) -> (f64, CellState) {
    let x = t.x;
    let hp = t.prev.h;
    let v = &t.v;
    match t.kind {
        CellKind::Simple => {
            let y = t.next.h;
            let da = (d_output + d_state.h) * (1.0 - y * y);
            g[0] += da;
            (da, CellState::ZERO)
        }
        CellKind::DeltaRnn => {
            let (alpha, beta1, beta2, wv, wr) = (p[0], p[1], p[2], p[3], p[4]);
            let [vx, rh, zc, gate, _] = *v;
            let h = t.next.h;
            let dh = d_output + d_state.h;
            let ds = dh * (1.0 - h * h);
            let dzc = ds * (1.0 - gate);
            let dgate = ds * (hp - zc);
            let mut dhp = ds * gate;
            let dgate_pre = dgate * gate * (1.0 - gate);
            let dz_pre = dzc * (1.0 - zc * zc);
            g[0] += dz_pre * vx * rh;
            g[1] += dz_pre * rh;
            g[2] += dz_pre * vx;
            g[5] += dgate_pre;
            g[6] += dz_pre;
            let dvx = dgate_pre + dz_pre * (alpha * rh + beta2);
            let drh = dz_pre * (alpha * vx + beta1);
            g[3] += dvx * x;
            g[4] += drh * hp;
            dhp += drh * wr;
            (dvx * wv, CellState { h: dhp, c: 0.0 })
        }
        CellKind::Gru => {
            let [z, r, hc, _, _] = *v;
            let dh = d_output + d_state.h;
            let dz = dh * (hc - hp);
            let dhc = dh * z;
            let mut dhp = dh * (1.0 - z);
            let mut dx = 0.0;

            let dhc_pre = dhc * (1.0 - hc * hc);
            g[6] += dhc_pre * x;
            g[7] += dhc_pre * r * hp;
            g[8] += dhc_pre;
            dx += dhc_pre * p[6];
            let drh = dhc_pre * p[7];
            let dr = drh * hp;
            dhp += drh * r;

            let dz_pre = dz * z * (1.0 - z);
            g[0] += dz_pre * x;
            g[1] += dz_pre * hp;
            g[2] += dz_pre;
            dx += dz_pre * p[0];
            dhp += dz_pre * p[1];

            let dr_pre = dr * r * (1.0 - r);
            g[3] += dr_pre * x;
            g[4] += dr_pre * hp;
            g[5] += dr_pre;
            dx += dr_pre * p[3];
            dhp += dr_pre * p[4];
            (dx, CellState { h: dhp, c: 0.0 })
        }
        CellKind::Lstm => {
            let cp = t.prev.c;
            let [i, f, o, gg, tc] = *v;
            let dh = d_output + d_state.h;
            let d_o = dh * tc;
            let dc = d_state.c + dh * o * (1.0 - tc * tc);
            let df = dc * cp;
            let dcp = dc * f;
            let di = dc * gg;
            let dg = dc * i;
            let pre = [
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                d_o * o * (1.0 - o),
                dg * (1.0 - gg * gg),
            ];
            let mut dx = 0.0;
            let mut dhp = 0.0;
            for (k, &dp) in pre.iter().enumerate() {
                let base = 3 * k;
                g[base] += dp * x;
                g[base + 1] += dp * hp;
                g[base + 2] += dp;
                dx += dp * p[base];
                dhp += dp * p[base + 1];
            }
            (dx, CellState { h: dhp, c: dcp })
        }
        CellKind::Mgu => {
            let [f, hc, _, _, _] = *v;
            let dh = d_output + d_state.h;
            let mut df = dh * (hc - hp);
            let dhc = dh * f;
            let mut dhp = dh * (1.0 - f);

            let dhc_pre = dhc * (1.0 - hc * hc);
            g[3] += dhc_pre * x;
            g[4] += dhc_pre * f * hp;
            g[5] += dhc_pre;
            let mut dx = dhc_pre * p[3];
            let dfh = dhc_pre * p[4];
            df += dfh * hp;
            dhp += dfh * f;

            let df_pre = df * f * (1.0 - f);
            g[0] += df_pre * x;
            g[1] += df_pre * hp;
            g[2] += df_pre;
            dx += df_pre * p[0];
            dhp += df_pre * p[1];
            (dx, CellState { h: dhp, c: 0.0 })
        }
        CellKind::Ugrnn => {
            let [c, gate, _, _, _] = *v;
            let dh = d_output + d_state.h;
            let dgate = dh * (hp - c);
            let dc = dh * (1.0 - gate);
            let mut dhp = dh * gate;

            let dc_pre = dc * (1.0 - c * c);
            g[0] += dc_pre * x;
            g[1] += dc_pre * hp;
            g[2] += dc_pre;
            let mut dx = dc_pre * p[0];
            dhp += dc_pre * p[1];

            let dg_pre = dgate * gate * (1.0 - gate);
            g[3] += dg_pre * x;
            g[4] += dg_pre * hp;
            g[5] += dg_pre;
            dx += dg_pre * p[3];
            dhp += dg_pre * p[4];
            (dx, CellState { h: dhp, c: 0.0 })
        }
    }
}

/// Adds 1.0 to the forget-gate bias of every LSTM node in `genome`.
///
/// Mutation operators call this exactly once for each LSTM node they create;
/// inherited nodes keep their (already shifted, then trained) bias.
pub fn apply_forget_bias_shift(mut genome: Genome) -> Genome {
    for node in genome.nodes.iter_mut().filter(|n| n.cell.has_forget_gate()) {
        node.params[LSTM_FORGET_BIAS] += 1.0;
    }
    genome
}
