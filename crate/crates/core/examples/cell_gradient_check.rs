//! Compares analytic gradients of every cell kind against central finite
//! differences over a short unrolled sequence.
//!
//! cargo run --example cell_gradient_check

use onenas::cells::{cell_backward, cell_forward, CellKind, CellState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Loss = 0.5 * sum of squared outputs over `xs`, unrolled from zero state.
fn loss(kind: CellKind, params: &[f64], xs: &[f64]) -> f64 {
    let mut state = CellState::ZERO;
    let mut l = 0.0;
    for &x in xs {
        let tr = cell_forward(kind, params, x, state).unwrap();
        l += 0.5 * tr.output().powi(2);
        state = tr.next;
    }
    l
}

fn analytic(kind: CellKind, params: &[f64], xs: &[f64]) -> Vec<f64> {
    let mut state = CellState::ZERO;
    let mut traces = Vec::new();
    for &x in xs {
        let tr = cell_forward(kind, params, x, state).unwrap();
        state = tr.next;
        traces.push(tr);
    }
    let mut grad = vec![0.0; params.len()];
    let mut d_state = CellState::ZERO;
    for tr in traces.iter().rev() {
        let g = cell_backward(kind, params, tr, tr.output(), d_state).unwrap();
        for (a, b) in grad.iter_mut().zip(&g.params) {
            *a += b;
        }
        d_state = g.prev_state;
    }
    grad
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-5;
    for kind in CellKind::ALL {
        let params: Vec<f64> = (0..kind.parameter_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let xs: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = analytic(kind, &params, &xs);
        let mut worst: f64 = 0.0;
        for i in 0..params.len() {
            let mut p = params.clone();
            p[i] += h;
            let up = loss(kind, &p, &xs);
            p[i] -= 2.0 * h;
            let down = loss(kind, &p, &xs);
            let fd = (up - down) / (2.0 * h);
            let rel = (g[i] - fd).abs() / g[i].abs().max(fd.abs()).max(1e-8);
            worst = worst.max(rel);
        }
        println!("{:<8} {:>2} params  worst relative error {:.2e}", kind.name(), params.len(), worst);
    }
}
