//! Unrolling genomes over subsequences: forward prediction, loss, and
//! backpropagation through time.
//!
//! A [`Network`] is the executable form of a genome: dormant structure is
//! dropped, active nodes are ordered by depth, and all trainable values live in
//! one flat parameter vector (edge weights first, then node parameters).

use serde::{Deserialize, Serialize};

use crate::cells::{self, CellKind, CellState, CellTrace};
use crate::error::{Error, Result};
use crate::genome::{Genome, NodeKind};

/// Gradient norm above which gradients are scaled down to this norm.
pub const SCALE_THRESHOLD: f64 = 1.0;
/// Gradient norm below which (non-zero) gradients are boosted up to this norm.
pub const BOOST_THRESHOLD: f64 = 0.05;

pub const DEFAULT_LEARNING_RATE: f64 = 0.001;
pub const DEFAULT_MOMENTUM: f64 = 0.9;

/// A fixed-length window of the stream: input rows plus the forecast target.
///
/// The network output at step `t` is scored against `targets[t + 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subsequence {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    /// Stream index of the first row.
    pub origin: usize,
}

impl Subsequence {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<f64>, origin: usize) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::contract(format!(
                "subsequence has {} input rows but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        if let Some(first) = inputs.first() {
            if inputs.iter().any(|r| r.len() != first.len()) {
                return Err(Error::contract("ragged subsequence rows"));
            }
        }
        Ok(Subsequence { inputs, targets, origin })
    }

    pub fn step_count(&self) -> usize {
        self.targets.len()
    }

    pub fn parameter_count(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    pub fn is_finite(&self) -> bool {
        self.targets.iter().all(|v| v.is_finite()) && self.inputs.iter().flatten().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RescaleAction {
    None,
    Scaled,
    Boosted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    pub gradient: Vec<f64>,
    pub pre_norm: f64,
    pub action: RescaleAction,
}

#[derive(Debug, Clone)]
struct InEdge {
    src: usize,
    skip: usize,
    weight: usize,
}

#[derive(Debug, Clone)]
struct Slot {
    node_id: u64,
    cell: CellKind,
    input_col: Option<usize>,
    offset: usize,
    in_edges: Vec<InEdge>,
}

#[derive(Debug, Clone)]
pub struct Network {
    slots: Vec<Slot>,
    output_slot: usize,
    n_inputs: usize,
    params: Vec<f64>,
    /// (index into `genome.edges`, parameter index)
    edge_map: Vec<(usize, usize)>,
    /// (index into `genome.nodes`, parameter offset)
    node_map: Vec<(usize, usize)>,
}

/// Per-step activations of a (partial) unroll.
#[derive(Debug, Clone, Default)]
pub struct Rollout {
    outs: Vec<f64>,
    states: Vec<CellState>,
    traces: Vec<CellTrace>,
    steps: usize,
}

impl Rollout {
    pub fn steps(&self) -> usize {
        self.steps
    }
}

impl Network {
    /// Compiles a single-output genome.
    pub fn compile(genome: &Genome) -> Result<Self> {
        if genome.n_outputs() != 1 {
            return Err(Error::contract(format!(
                "networks forecast one target, genome has {} outputs",
                genome.n_outputs()
            )));
        }
        let active = genome.active_nodes();
        let mut order: Vec<usize> = (0..genome.nodes.len())
            .filter(|&i| active.contains(&genome.nodes[i].id))
            .collect();
        order.sort_by(|&a, &b| {
            let (na, nb) = (&genome.nodes[a], &genome.nodes[b]);
            na.depth.total_cmp(&nb.depth).then(na.id.cmp(&nb.id))
        });

        let mut params = Vec::new();
        let mut edge_map = Vec::new();
        let mut slot_of = std::collections::BTreeMap::new();
        for (s, &ni) in order.iter().enumerate() {
            slot_of.insert(genome.nodes[ni].id, s);
        }
        let mut slots: Vec<Slot> = order
            .iter()
            .map(|&ni| {
                let n = &genome.nodes[ni];
                Slot {
                    node_id: n.id,
                    cell: n.cell,
                    input_col: match n.kind {
                        NodeKind::Input(c) => Some(c),
                        _ => None,
                    },
                    offset: 0,
                    in_edges: Vec::new(),
                }
            })
            .collect();
        for (ei, e) in genome.edges.iter().enumerate() {
            if !e.enabled {
                continue;
            }
            let (Some(&src), Some(&dst)) = (slot_of.get(&e.source), slot_of.get(&e.target)) else {
                continue;
            };
            let w = params.len();
            params.push(e.weight);
            edge_map.push((ei, w));
            slots[dst].in_edges.push(InEdge { src, skip: e.time_skip as usize, weight: w });
        }
        let mut node_map = Vec::with_capacity(order.len());
        for (s, &ni) in order.iter().enumerate() {
            slots[s].offset = params.len();
            node_map.push((ni, params.len()));
            params.extend_from_slice(&genome.nodes[ni].params);
        }
        let output_slot = slots
            .iter()
            .position(|s| matches!(genome.node(s.node_id).map(|n| n.kind), Some(NodeKind::Output(0))))
            .ok_or_else(|| Error::contract("genome has no output node"))?;
        Ok(Network { slots, output_slot, n_inputs: genome.n_inputs(), params, edge_map, node_map })
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: &[f64]) {
        self.params.copy_from_slice(params);
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    /// Copies the (trained) parameters back into the genome they came from.
    pub fn write_back(&self, genome: &mut Genome) {
        for &(ei, w) in &self.edge_map {
            genome.edges[ei].weight = self.params[w];
        }
        for &(ni, off) in &self.node_map {
            let n = &mut genome.nodes[ni];
            let len = n.params.len();
            n.params.copy_from_slice(&self.params[off..off + len]);
        }
    }

    pub fn start(&self) -> Rollout {
        Rollout::default()
    }

    /// Advances the unroll by one input row and returns the forecast made at
    /// this step.
    pub fn step(&self, ro: &mut Rollout, row: &[f64], traced: bool) -> Result<f64> {
        if row.len() != self.n_inputs {
            return Err(Error::contract(format!(
                "input row has {} values, network expects {}",
                row.len(),
                self.n_inputs
            )));
        }
        let n = self.slots.len();
        let t = ro.steps;
        let base = t * n;
        for (s, slot) in self.slots.iter().enumerate() {
            let mut x = slot.input_col.map_or(0.0, |c| row[c]);
            for e in &slot.in_edges {
                if e.skip == 0 {
                    x += self.params[e.weight] * ro.outs[base + e.src];
                } else if t >= e.skip {
                    x += self.params[e.weight] * ro.outs[(t - e.skip) * n + e.src];
                }
            }
            let prev = if t == 0 { CellState::ZERO } else { ro.states[base - n + s] };
            let p = &self.params[slot.offset..slot.offset + slot.cell.parameter_count()];
            let trace = cells::forward_unchecked(slot.cell, p, x, prev);
            if !x.is_finite() || !trace.next.is_finite() {
                return Err(Error::NonFinite { step: t, node: slot.node_id });
            }
            ro.outs.push(trace.output());
            ro.states.push(trace.next);
            if traced {
                ro.traces.push(trace);
            }
        }
        ro.steps += 1;
        Ok(ro.outs[base + self.output_slot])
    }

    fn check_arity(&self, sub: &Subsequence) -> Result<()> {
        if sub.step_count() > 0 && sub.parameter_count() != self.n_inputs {
            return Err(Error::contract(format!(
                "subsequence has {} parameters, genome has {} inputs",
                sub.parameter_count(),
                self.n_inputs
            )));
        }
        Ok(())
    }

    /// One forecast per step, starting from zero recurrent state.
    pub fn forward(&self, sub: &Subsequence) -> Result<Vec<f64>> {
        self.check_arity(sub)?;
        let mut ro = self.start();
        sub.inputs.iter().map(|row| self.step(&mut ro, row, false)).collect()
    }

    /// Validation loss of the current parameters on one subsequence.
    pub fn loss(&self, sub: &Subsequence) -> Result<f64> {
        mse(&self.forward(sub)?, &sub.targets)
    }

    /// Loss and its exact gradient with respect to [`Network::params`],
    /// back-propagated through every step and every time-skip edge.
    pub fn gradient(&self, sub: &Subsequence) -> Result<(f64, Vec<f64>)> {
        self.check_arity(sub)?;
        let steps = sub.step_count();
        if steps < 2 {
            return Err(Error::contract("need at least two steps to score a one-step-ahead forecast"));
        }
        let mut ro = self.start();
        let mut preds = Vec::with_capacity(steps);
        for row in &sub.inputs {
            preds.push(self.step(&mut ro, row, true)?);
        }
        let loss = mse(&preds, &sub.targets)?;

        let n = self.slots.len();
        let scale = 2.0 / (steps - 1) as f64;
        let mut d_out = vec![0.0; steps * n];
        for t in 0..steps - 1 {
            d_out[t * n + self.output_slot] = scale * (preds[t] - sub.targets[t + 1]);
        }
        let mut grad = vec![0.0; self.params.len()];
        let mut d_state = vec![CellState::ZERO; n];
        for t in (0..steps).rev() {
            for (s, slot) in self.slots.iter().enumerate().rev() {
                let idx = t * n + s;
                let len = slot.cell.parameter_count();
                let (dx, d_prev) = cells::backward_into(
                    &self.params[slot.offset..slot.offset + len],
                    &ro.traces[idx],
                    d_out[idx],
                    d_state[s],
                    &mut grad[slot.offset..slot.offset + len],
                );
                d_state[s] = d_prev;
                for e in &slot.in_edges {
                    if t < e.skip {
                        continue;
                    }
                    let src_idx = (t - e.skip) * n + e.src;
                    grad[e.weight] += ro.outs[src_idx] * dx;
                    d_out[src_idx] += self.params[e.weight] * dx;
                }
            }
        }
        if !grad.iter().all(|g| g.is_finite()) {
            return Err(Error::TrainingFailure("non-finite gradient".into()));
        }
        Ok((loss, grad))
    }
}

/// Forecasts for every step of `sub` (recurrent state starts at zero).
pub fn forward(genome: &Genome, sub: &Subsequence) -> Result<Vec<f64>> {
    Network::compile(genome)?.forward(sub)
}

/// One-step-ahead mean squared error: `predictions[t]` is scored against
/// `targets[t + 1]`; the last prediction has no target and is dropped.
pub fn mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::contract(format!(
            "{} predictions vs {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    if predictions.len() < 2 {
        return Err(Error::contract("need at least two steps to score a one-step-ahead forecast"));
    }
    let sse: f64 = predictions
        .iter()
        .zip(&targets[1..])
        .map(|(p, y)| (p - y) * (p - y))
        .sum();
    Ok(sse / (predictions.len() - 1) as f64)
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Scales gradients with norm above 1.0 down to 1.0 and boosts non-zero
/// gradients with norm below 0.05 up to 0.05. Direction is never changed.
pub fn rescale_gradient(mut g: Vec<f64>) -> GradientReport {
    let pre_norm = l2_norm(&g);
    let action = if pre_norm > SCALE_THRESHOLD {
        let k = SCALE_THRESHOLD / pre_norm;
        g.iter_mut().for_each(|x| *x *= k);
        RescaleAction::Scaled
    } else if pre_norm > 0.0 && pre_norm < BOOST_THRESHOLD {
        let k = BOOST_THRESHOLD / pre_norm;
        g.iter_mut().for_each(|x| *x *= k);
        RescaleAction::Boosted
    } else {
        RescaleAction::None
    };
    GradientReport { gradient: g, pre_norm, action }
}

/// Loss (before any update) and the rescaled BPTT gradient of `genome` on `sub`.
pub fn bptt_step(genome: &Genome, sub: &Subsequence) -> Result<(f64, GradientReport)> {
    let (loss, grad) = Network::compile(genome)?.gradient(sub)?;
    Ok((loss, rescale_gradient(grad)))
}

/// Nesterov momentum in the reformulated (velocity-shifted) form:
///
/// ```text
/// v' = mu * v - lr * g
/// p' = p - mu * v + (1 + mu) * v'
/// ```
///
/// `gradient` is evaluated at the current parameters. From zero velocity one
/// update moves parameters by `-lr * (1 + mu) * g`.
pub fn nesterov_update(params: &mut [f64], velocity: &mut [f64], gradient: &[f64], lr: f64, mu: f64) {
    assert_eq!(params.len(), velocity.len(), "parameter/velocity length mismatch");
    assert_eq!(params.len(), gradient.len(), "parameter/gradient length mismatch");
    for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(gradient) {
        let prev = *v;
        *v = mu * prev - lr * g;
        *p += -mu * prev + (1.0 + mu) * *v;
    }
}
