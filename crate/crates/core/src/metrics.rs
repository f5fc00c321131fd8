//! Online error metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entry `k` is the RMSE over `residuals[0..=k]`.
pub fn online_rmse_series(residuals: &[f64]) -> Result<Vec<f64>> {
    if residuals.is_empty() {
        return Err(Error::contract("online RMSE needs at least one residual"));
    }
    let mut sse = 0.0;
    Ok(residuals
        .iter()
        .enumerate()
        .map(|(k, r)| {
            sse += r * r;
            (sse / (k + 1) as f64).sqrt()
        })
        .collect())
}

pub fn mean_squared_error(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    if predicted.len() != actual.len() || predicted.is_empty() {
        return Err(Error::contract("mean squared error needs equal, non-empty series"));
    }
    Ok(predicted.iter().zip(actual).map(|(p, a)| (p - a).powi(2)).sum::<f64>() / predicted.len() as f64)
}

/// Per generation of `p` steps, the fraction of steps where the engine's
/// absolute error is strictly below the naive one. Ties go to naive.
pub fn generation_win_rate(engine: &[f64], naive: &[f64], targets: &[f64], p: usize) -> Result<Vec<f64>> {
    if engine.len() != naive.len() || engine.len() != targets.len() {
        return Err(Error::contract("win rate needs aligned series"));
    }
    if p == 0 || !engine.len().is_multiple_of(p) {
        return Err(Error::contract(format!("series length {} is not a multiple of {p}", engine.len())));
    }
    Ok((0..engine.len() / p)
        .map(|g| {
            let wins = (g * p..(g + 1) * p)
                .filter(|&i| (engine[i] - targets[i]).abs() < (naive[i] - targets[i]).abs())
                .count();
            wins as f64 / p as f64
        })
        .collect())
}

/// Running tally of an online forecaster against the naive predictor.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OnlineScore {
    pub sse: f64,
    pub count: usize,
    pub naive_sse: f64,
    pub rmse_over_time: Vec<f64>,
    /// `(wins, steps)` per closed generation.
    pub generations: Vec<(usize, usize)>,
    open: (usize, usize),
}

impl OnlineScore {
    pub fn record(&mut self, predicted: f64, naive: f64, actual: f64) {
        let e = predicted - actual;
        self.sse += e * e;
        self.naive_sse += (naive - actual).powi(2);
        self.count += 1;
        self.rmse_over_time.push((self.sse / self.count as f64).sqrt());
        if e.abs() < (naive - actual).abs() {
            self.open.0 += 1;
        }
        self.open.1 += 1;
    }

    pub fn end_generation(&mut self) {
        self.generations.push(std::mem::take(&mut self.open));
    }

    pub fn mse(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.sse / self.count as f64
        }
    }

    pub fn naive_mse(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.naive_sse / self.count as f64
        }
    }

    pub fn win_rates(&self) -> Vec<f64> {
        self.generations.iter().map(|&(w, n)| if n == 0 { 0.0 } else { w as f64 / n as f64 }).collect()
    }
}
