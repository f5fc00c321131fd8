#![allow(dead_code)]

use std::collections::BTreeSet;

use onenas::cells::{cell_backward, cell_forward, CellKind, CellState};
use onenas::evo::{apply_mutation, MutationKind, OperatorConfig};
use onenas::genome::{seed_genome, Genome, Innovations};
use onenas::rnn::{Network, Subsequence};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{i}")).collect()
}

/// A random valid genome with at most `max_nodes` nodes, grown from a seed
/// with `inputs` inputs by random structural mutations.
pub fn random_genome(inputs: usize, max_nodes: usize, growth: usize, rng: &mut ChaCha8Rng) -> (Genome, Innovations) {
    let ins = names(inputs);
    let mut g = seed_genome(&ins, &ins[..1], rng).unwrap();
    let mut inn = Innovations::covering([&g]);
    let ops = OperatorConfig::default();
    for _ in 0..growth {
        let kind = *MutationKind::ALL.choose(rng).unwrap();
        if let Some(child) = apply_mutation(kind, &g, &ops, &mut inn, rng) {
            if child.nodes.len() <= max_nodes {
                g = child;
            }
        }
    }
    (g, inn)
}

pub fn random_subsequence(inputs: usize, steps: usize, rng: &mut ChaCha8Rng) -> Subsequence {
    let rows: Vec<Vec<f64>> = (0..steps).map(|_| (0..inputs).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
    let targets = rows.iter().map(|r| r[0]).collect();
    Subsequence::new(rows, targets, 0).unwrap()
}

/// Componentwise relative error with a small absolute floor so that
/// components that are zero up to rounding do not blow up the ratio.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-4;

/// Squared error of each output against `ys`, plus a term on the carried
/// cell state so that the state path is exercised on its own.
fn cell_loss(kind: CellKind, params: &[f64], xs: &[f64], ys: &[f64]) -> f64 {
    let mut state = CellState::ZERO;
    let mut l = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let tr = cell_forward(kind, params, *x, state).unwrap();
        l += 0.5 * (tr.output() - y).powi(2);
        state = tr.next;
    }
    l + 0.5 * state.c * state.c
}

fn cell_grad(kind: CellKind, params: &[f64], xs: &[f64], ys: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut state = CellState::ZERO;
    let mut traces = Vec::new();
    for x in xs {
        let tr = cell_forward(kind, params, *x, state).unwrap();
        state = tr.next;
        traces.push(tr);
    }
    let mut grad = vec![0.0; params.len()];
    let mut d_x = vec![0.0; xs.len()];
    let mut d_state = CellState { h: 0.0, c: state.c };
    for (t, tr) in traces.iter().enumerate().rev() {
        let g = cell_backward(kind, params, tr, tr.output() - ys[t], d_state).unwrap();
        for (a, b) in grad.iter_mut().zip(&g.params) {
            *a += b;
        }
        d_x[t] = g.input;
        d_state = g.prev_state;
    }
    (grad, d_x)
}

fn central<F: FnMut(f64) -> f64>(x: f64, mut f: F) -> f64 {
    (f(x + FD_STEP) - f(x - FD_STEP)) / (2.0 * FD_STEP)
}

/// Worst componentwise relative error (parameters and inputs) over `draws`
/// random 10-step unrolls of one cell kind.
pub fn cell_check(kind: CellKind, draws: usize, r: &mut ChaCha8Rng) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let params: Vec<f64> = (0..kind.parameter_count()).map(|_| r.random_range(-1.0..1.0)).collect();
        let xs: Vec<f64> = (0..10).map(|_| r.random_range(-1.5..1.5)).collect();
        let ys: Vec<f64> = (0..10).map(|_| r.random_range(-1.0..1.0)).collect();
        let (g, dx) = cell_grad(kind, &params, &xs, &ys);
        for i in 0..params.len() {
            let fd = central(params[i], |v| {
                let mut p = params.clone();
                p[i] = v;
                cell_loss(kind, &p, &xs, &ys)
            });
            worst = worst.max(rel_err(g[i], fd));
        }
        for t in 0..xs.len() {
            let fd = central(xs[t], |v| {
                let mut x = xs.clone();
                x[t] = v;
                cell_loss(kind, &params, &x, &ys)
            });
            worst = worst.max(rel_err(dx[t], fd));
        }
    }
    worst
}

/// Worst relative error over `count` random genomes of at most 10 nodes on
/// 10-step subsequences, and the set of recurrent skips they contained.
pub fn genome_check(count: usize, r: &mut ChaCha8Rng) -> (f64, BTreeSet<u32>) {
    let mut worst: f64 = 0.0;
    let mut skips = BTreeSet::new();
    for trial in 0..count {
        let inputs = 1 + trial % 3;
        let (g, _) = random_genome(inputs, 10, 40, r);
        assert!(g.nodes.len() <= 10);
        skips.extend(g.edges.iter().filter(|e| e.enabled && e.time_skip > 0).map(|e| e.time_skip));
        let sub = random_subsequence(inputs, 10, r);
        let mut net = Network::compile(&g).unwrap();
        let (_, grad) = net.gradient(&sub).unwrap();
        let params = net.params().to_vec();
        for i in 0..params.len() {
            let fd = central(params[i], |v| {
                let mut p = params.clone();
                p[i] = v;
                net.set_params(&p);
                net.loss(&sub).unwrap()
            });
            worst = worst.max(rel_err(grad[i], fd));
        }
        net.set_params(&params);
    }
    (worst, skips)
}

/// Every child edge and node shared with `parent` carries the parent's value.
pub fn mutation_lamarckian(parent: &Genome, child: &Genome) -> bool {
    let edges = child
        .edges
        .iter()
        .all(|e| parent.edge_by_key(e.key()).is_none_or(|p| p.weight.to_bits() == e.weight.to_bits()));
    let nodes = child
        .nodes
        .iter()
        .all(|n| parent.node(n.id).filter(|p| p.cell == n.cell).is_none_or(|p| p.params == n.params));
    edges && nodes
}

/// Shared components hold the better parent's value or the mean of both;
/// components from one parent only hold that parent's value; nothing else
/// appears.
pub fn crossover_lamarckian(better: &Genome, other: &Genome, child: &Genome) -> bool {
    let edges = child.edges.iter().all(|e| {
        let w = e.weight;
        match (better.edge_by_key(e.key()), other.edge_by_key(e.key())) {
            (Some(b), Some(o)) => w == b.weight || w == 0.5 * (b.weight + o.weight),
            (Some(b), None) => w == b.weight,
            (None, Some(o)) => w == o.weight,
            (None, None) => false,
        }
    });
    let nodes = child.nodes.iter().all(|n| match (better.node(n.id), other.node(n.id)) {
        (Some(b), Some(o)) if b.cell == o.cell && b.cell == n.cell => {
            let mean: Vec<f64> = b.params.iter().zip(&o.params).map(|(x, y)| 0.5 * (x + y)).collect();
            n.params == b.params || n.params == mean
        }
        (Some(b), _) if b.cell == n.cell => n.params == b.params,
        (None, Some(o)) => n.params == o.params,
        _ => true,
    });
    edges && nodes
}
