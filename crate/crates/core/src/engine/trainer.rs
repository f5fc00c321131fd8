use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genome::Genome;
use crate::rnn::{nesterov_update, rescale_gradient, Network, RescaleAction, Subsequence};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub noise_epochs: usize,
    pub noise_fraction: f64,
    pub learning_rate: f64,
    pub momentum: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig { epochs: 10, noise_epochs: 5, noise_fraction: 0.1, learning_rate: 0.001, momentum: 0.9 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RescaleCounts {
    pub none: usize,
    pub scaled: usize,
    pub boosted: usize,
}

impl RescaleCounts {
    pub fn add(&mut self, action: RescaleAction) {
        match action {
            RescaleAction::None => self.none += 1,
            RescaleAction::Scaled => self.scaled += 1,
            RescaleAction::Boosted => self.boosted += 1,
        }
    }

    pub fn merge(&mut self, other: RescaleCounts) {
        self.none += other.none;
        self.scaled += other.scaled;
        self.boosted += other.boosted;
    }

    pub fn total(&self) -> usize {
        self.none + self.scaled + self.boosted
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    /// Mean loss of each epoch, measured before each update.
    pub epoch_losses: Vec<f64>,
    pub rescale: RescaleCounts,
}

/// Copy of `sub` with zero-mean Gaussian noise on every input column, the
/// noise std being `fraction` times that column's std within the window.
pub fn add_input_noise<R: Rng + ?Sized>(sub: &Subsequence, fraction: f64, rng: &mut R) -> Subsequence {
    let mut out = sub.clone();
    if fraction == 0.0 || sub.step_count() == 0 {
        return out;
    }
    let n = sub.step_count() as f64;
    for j in 0..sub.parameter_count() {
        let mean = sub.inputs.iter().map(|r| r[j]).sum::<f64>() / n;
        let std = (sub.inputs.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n).sqrt();
        if std == 0.0 {
            continue;
        }
        let noise = Normal::new(0.0, fraction * std).expect("finite positive std");
        for row in &mut out.inputs {
            row[j] += noise.sample(rng);
        }
    }
    out
}

/// Mean one-step-ahead MSE of `genome` over `subs`.
pub fn evaluate(genome: &Genome, subs: &[Subsequence]) -> Result<f64> {
    if subs.is_empty() {
        return Err(Error::contract("evaluation needs at least one subsequence"));
    }
    let net = Network::compile(genome)?;
    let mut total = 0.0;
    for s in subs {
        total += net.loss(s)?;
    }
    Ok(total / subs.len() as f64)
}

/// Trains `genome` in place with BPTT and Nesterov momentum.
///
/// Each epoch visits `train` in a fresh random order; the final
/// `noise_epochs` epochs see noisy inputs. Velocity starts at zero.
pub fn train_genome<R: Rng + ?Sized>(
    genome: &mut Genome,
    train: &[&Subsequence],
    cfg: &TrainingConfig,
    rng: &mut R,
) -> Result<TrainingReport> {
    let mut net = Network::compile(genome)?;
    let mut params = net.params().to_vec();
    let mut velocity = vec![0.0; params.len()];
    let mut report = TrainingReport::default();
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..cfg.epochs {
        let noisy = epoch >= cfg.epochs - cfg.noise_epochs && cfg.noise_fraction > 0.0;
        order.shuffle(rng);
        let mut epoch_loss = 0.0;
        for &i in &order {
            let (loss, grad) = if noisy {
                net.gradient(&add_input_noise(train[i], cfg.noise_fraction, rng))?
            } else {
                net.gradient(train[i])?
            };
            let g = rescale_gradient(grad);
            report.rescale.add(g.action);
            nesterov_update(&mut params, &mut velocity, &g.gradient, cfg.learning_rate, cfg.momentum);
            if params.iter().any(|p| !p.is_finite()) {
                return Err(Error::TrainingFailure(format!("non-finite weights in epoch {epoch}")));
            }
            net.set_params(&params);
            epoch_loss += loss;
        }
        if !train.is_empty() {
            report.epoch_losses.push(epoch_loss / train.len() as f64);
        }
    }
    net.write_back(genome);
    Ok(report)
}
