//! Classical online forecasters and online ARIMA (gradient and Newton step).
//!
//! Every predictor is a causal state machine: [`OnlinePredictor::predict`]
//! forecasts the next value from what has been observed so far, and
//! [`OnlinePredictor::observe`] then reveals it.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eq. 1: the last observed value.
pub fn naive_predict(history: &[f64]) -> Result<f64> {
    history.last().copied().ok_or_else(|| Error::contract("naive prediction needs at least one value"))
}

/// Eq. 2: mean of the last `min(n, len)` values.
pub fn moving_average_predict(history: &[f64], n: usize) -> Result<f64> {
    if history.is_empty() || n == 0 {
        return Err(Error::contract("moving average needs a value and a window of at least 1"));
    }
    let tail = &history[history.len().saturating_sub(n)..];
    Ok(tail.iter().sum::<f64>() / tail.len() as f64)
}

/// Eq. 3: `alpha * x_prev + (1 - alpha) * yhat_prev`.
pub fn exp_smoothing_step(alpha: f64, yhat_prev: f64, x_prev: f64) -> f64 {
    alpha * x_prev + (1.0 - alpha) * yhat_prev
}

pub trait OnlinePredictor: Send {
    fn name(&self) -> &'static str;
    /// Forecast for the next value, or `None` before anything was observed.
    fn predict(&self) -> Option<f64>;
    fn observe(&mut self, x: f64);
}

#[derive(Debug, Clone, Default)]
pub struct Naive {
    last: Option<f64>,
}

impl OnlinePredictor for Naive {
    fn name(&self) -> &'static str {
        "naive"
    }
    fn predict(&self) -> Option<f64> {
        self.last
    }
    fn observe(&mut self, x: f64) {
        self.last = Some(x);
    }
}

#[derive(Debug, Clone)]
pub struct MovingAverage {
    window: usize,
    recent: VecDeque<f64>,
}

impl MovingAverage {
    pub fn new(window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidArgument("moving average window must be at least 1".into()));
        }
        Ok(MovingAverage { window, recent: VecDeque::with_capacity(window) })
    }
}

impl OnlinePredictor for MovingAverage {
    fn name(&self) -> &'static str {
        "moving_average"
    }
    fn predict(&self) -> Option<f64> {
        (!self.recent.is_empty()).then(|| self.recent.iter().sum::<f64>() / self.recent.len() as f64)
    }
    fn observe(&mut self, x: f64) {
        if self.recent.len() == self.window {
            self.recent.pop_front();
        }
        self.recent.push_back(x);
    }
}

/// Simple exponential smoothing, started from the first observation.
#[derive(Debug, Clone)]
pub struct ExpSmoothing {
    alpha: f64,
    next: Option<f64>,
}

impl ExpSmoothing {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        Ok(ExpSmoothing { alpha, next: None })
    }
}

impl OnlinePredictor for ExpSmoothing {
    fn name(&self) -> &'static str {
        "exp_smoothing"
    }
    fn predict(&self) -> Option<f64> {
        self.next
    }
    fn observe(&mut self, x: f64) {
        let prev = self.next.unwrap_or(x);
        self.next = Some(exp_smoothing_step(self.alpha, prev, x));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArimaVariant {
    Ogd,
    Ons,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub ma_window: usize,
    pub alpha: f64,
    pub arima_lags: usize,
    pub arima_d: usize,
    /// Step multiplier. OGD steps by `rate * g / sqrt(t)`, ONS by `rate * A⁻¹ g`.
    pub arima_rate: f64,
    /// ONS second-moment matrix starts as `epsilon * I`.
    pub arima_epsilon: f64,
    /// Coefficients are clamped to `[-radius, radius]` after every update.
    pub arima_radius: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            ma_window: 3,
            alpha: 0.2,
            arima_lags: 8,
            arima_d: 1,
            arima_rate: (-3.0f64).exp(),
            arima_epsilon: 3.16e-6,
            arima_radius: 1.0,
        }
    }
}

/// Online ARIMA with AR part only: forecasts the `d`-times differenced value
/// as a linear combination of the previous `lags` differenced values, then
/// integrates back to the original scale.
#[derive(Debug, Clone)]
pub struct OnlineArima {
    variant: ArimaVariant,
    lags: usize,
    d: usize,
    rate: f64,
    epsilon: f64,
    radius: f64,
    history: VecDeque<f64>,
    coefficients: Vec<f64>,
    a_inv: Vec<f64>,
    updates: usize,
    resets: usize,
}

impl OnlineArima {
    pub fn new(variant: ArimaVariant, cfg: &BaselineConfig) -> Result<Self> {
        if cfg.arima_lags == 0 {
            return Err(Error::InvalidArgument("ARIMA needs at least one lag".into()));
        }
        if !(cfg.arima_rate > 0.0 && cfg.arima_epsilon > 0.0 && cfg.arima_radius > 0.0) {
            return Err(Error::InvalidArgument("ARIMA rate, epsilon and radius must be positive".into()));
        }
        let mut a = OnlineArima {
            variant,
            lags: cfg.arima_lags,
            d: cfg.arima_d,
            rate: cfg.arima_rate,
            epsilon: cfg.arima_epsilon,
            radius: cfg.arima_radius,
            history: VecDeque::with_capacity(cfg.arima_lags + cfg.arima_d + 1),
            coefficients: vec![0.0; cfg.arima_lags],
            a_inv: Vec::new(),
            updates: 0,
            resets: 0,
        };
        a.reset_second_moment();
        Ok(a)
    }

    fn reset_second_moment(&mut self) {
        let k = self.lags;
        self.a_inv = vec![0.0; k * k];
        for i in 0..k {
            self.a_inv[i * k + i] = 1.0 / self.epsilon;
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Times the Newton-step matrix had to be reset after a degenerate update.
    pub fn resets(&self) -> usize {
        self.resets
    }

    /// Lagged differenced values (most recent first) and the integration
    /// baseline, or `None` while the history is still too short.
    fn features(&self) -> Option<(Vec<f64>, f64)> {
        if self.history.len() < self.lags + self.d {
            return None;
        }
        let mut levels: Vec<f64> = self.history.iter().copied().collect();
        let mut baseline = 0.0;
        for _ in 0..self.d {
            baseline += levels.last().copied().unwrap_or(0.0);
            levels = levels.windows(2).map(|w| w[1] - w[0]).collect();
        }
        let x: Vec<f64> = levels.iter().rev().take(self.lags).copied().collect();
        Some((x, baseline))
    }

    fn update(&mut self, x: &[f64], error: f64) {
        self.updates += 1;
        let g: Vec<f64> = x.iter().map(|xi| 2.0 * error * xi).collect();
        match self.variant {
            ArimaVariant::Ogd => {
                let step = self.rate / (self.updates as f64).sqrt();
                for (c, gi) in self.coefficients.iter_mut().zip(&g) {
                    *c -= step * gi;
                }
            }
            ArimaVariant::Ons => {
                let k = self.lags;
                // Sherman-Morrison update of A⁻¹ for A += g gᵀ.
                let ag: Vec<f64> = (0..k).map(|i| (0..k).map(|j| self.a_inv[i * k + j] * g[j]).sum()).collect();
                let denom = 1.0 + g.iter().zip(&ag).map(|(a, b)| a * b).sum::<f64>();
                if !denom.is_finite() || denom <= 0.0 || ag.iter().any(|v| !v.is_finite()) {
                    warn!("online newton step: degenerate second-moment update, resetting");
                    self.resets += 1;
                    self.reset_second_moment();
                } else {
                    for i in 0..k {
                        for j in 0..k {
                            self.a_inv[i * k + j] -= ag[i] * ag[j] / denom;
                        }
                    }
                }
                for i in 0..k {
                    let step: f64 = (0..k).map(|j| self.a_inv[i * k + j] * g[j]).sum();
                    self.coefficients[i] -= self.rate * step;
                }
            }
        }
        for c in &mut self.coefficients {
            *c = c.clamp(-self.radius, self.radius);
        }
    }
}

impl OnlinePredictor for OnlineArima {
    fn name(&self) -> &'static str {
        match self.variant {
            ArimaVariant::Ogd => "arima_ogd",
            ArimaVariant::Ons => "arima_ons",
        }
    }

    fn predict(&self) -> Option<f64> {
        match self.features() {
            Some((x, baseline)) => Some(baseline + x.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum::<f64>()),
            None => self.history.back().copied(),
        }
    }

    fn observe(&mut self, value: f64) {
        if let Some((x, baseline)) = self.features() {
            let pred = baseline + x.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum::<f64>();
            self.update(&x, pred - value);
        }
        if self.history.len() == self.lags + self.d {
            self.history.pop_front();
        }
        self.history.push_back(value);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Naive,
    MovingAverage,
    ExpSmoothing,
    ArimaOgd,
    ArimaOns,
}

impl Method {
    pub const ALL: [Method; 5] =
        [Method::Naive, Method::MovingAverage, Method::ExpSmoothing, Method::ArimaOgd, Method::ArimaOns];

    pub fn name(self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::MovingAverage => "moving_average",
            Method::ExpSmoothing => "exp_smoothing",
            Method::ArimaOgd => "arima_ogd",
            Method::ArimaOns => "arima_ons",
        }
    }

    pub fn build(self, cfg: &BaselineConfig) -> Result<Box<dyn OnlinePredictor>> {
        Ok(match self {
            Method::Naive => Box::new(Naive::default()),
            Method::MovingAverage => Box::new(MovingAverage::new(cfg.ma_window)?),
            Method::ExpSmoothing => Box::new(ExpSmoothing::new(cfg.alpha)?),
            Method::ArimaOgd => Box::new(OnlineArima::new(ArimaVariant::Ogd, cfg)?),
            Method::ArimaOns => Box::new(OnlineArima::new(ArimaVariant::Ons, cfg)?),
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Method::Naive),
            "ma" | "moving_average" => Ok(Method::MovingAverage),
            "exp" | "exp_smoothing" => Ok(Method::ExpSmoothing),
            "arima" | "arima_ogd" => Ok(Method::ArimaOgd),
            "arima_ons" => Ok(Method::ArimaOns),
            _ => Err(Error::InvalidArgument(format!("unknown baseline method `{s}`"))),
        }
    }
}

/// One scored forecast.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub step_index: usize,
    pub actual: f64,
    pub predicted: f64,
}

/// Runs a predictor over `series`, forecasting every step from index 1 on.
pub fn run_predictor(predictor: &mut dyn OnlinePredictor, series: &[f64]) -> Vec<Forecast> {
    let mut out = Vec::with_capacity(series.len().saturating_sub(1));
    for (step_index, &actual) in series.iter().enumerate() {
        if let Some(predicted) = predictor.predict() {
            out.push(Forecast { step_index, actual, predicted });
        }
        predictor.observe(actual);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn closed_forms() {
        assert_eq!(naive_predict(&[5.0]).unwrap(), 5.0);
        assert_eq!(naive_predict(&[1.0, 2.0, 3.0]).unwrap(), 3.0);
        assert!(naive_predict(&[]).is_err());
        assert_eq!(moving_average_predict(&[1.0, 2.0, 3.0], 3).unwrap(), 2.0);
        assert_eq!(moving_average_predict(&[4.0], 3).unwrap(), 4.0);
        assert_abs_diff_eq!(exp_smoothing_step(0.2, 10.0, 20.0), 12.0, epsilon = 1e-12);
    }

    #[test]
    fn exp_smoothing_recurrence() {
        let xs: Vec<f64> = (1..=10).map(f64::from).collect();
        let got = run_predictor(&mut ExpSmoothing::new(0.5).unwrap(), &xs);
        let mut y = xs[0];
        for (k, f) in got.iter().enumerate() {
            y = 0.5 * xs[k] + 0.5 * y;
            assert_abs_diff_eq!(f.predicted, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn alpha_near_one_tracks_naive() {
        let xs = [3.0, -1.0, 4.0, 1.5, 9.0];
        let e = run_predictor(&mut ExpSmoothing::new(1.0 - 1e-12).unwrap(), &xs);
        for f in e {
            assert_abs_diff_eq!(f.predicted, xs[f.step_index - 1], epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_coefficients_give_the_integration_baseline() {
        let cfg = BaselineConfig { arima_lags: 2, arima_d: 1, ..Default::default() };
        let mut a = OnlineArima::new(ArimaVariant::Ogd, &cfg).unwrap();
        for x in [1.0, 4.0, 2.0] {
            a.observe(x);
        }
        a.coefficients = vec![0.0; 2];
        assert_eq!(a.predict(), Some(2.0));
    }

    #[test]
    fn ogd_first_step_is_the_squared_loss_gradient() {
        let cfg = BaselineConfig { arima_lags: 1, arima_d: 0, arima_rate: 0.01, arima_radius: 10.0, ..Default::default() };
        let mut a = OnlineArima::new(ArimaVariant::Ogd, &cfg).unwrap();
        a.observe(2.0);
        a.coefficients = vec![0.3];
        let pred = a.predict().unwrap();
        assert_abs_diff_eq!(pred, 0.6, epsilon = 1e-15);
        a.observe(1.0);
        let expected = 0.3 - 0.01 * 2.0 * (0.6 - 1.0) * 2.0;
        assert_abs_diff_eq!(a.coefficients()[0], expected, epsilon = 1e-15);
    }

    #[test]
    fn coefficients_stay_in_the_box() {
        for variant in [ArimaVariant::Ogd, ArimaVariant::Ons] {
            let cfg = BaselineConfig { arima_rate: 50.0, ..Default::default() };
            let mut a = OnlineArima::new(variant, &cfg).unwrap();
            for t in 0..500 {
                a.observe(((t * 7919) % 113) as f64 * if t % 2 == 0 { 1e3 } else { -1e3 });
                assert!(a.coefficients().iter().all(|c| c.abs() <= 1.0));
            }
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            assert_eq!(m.build(&BaselineConfig::default()).unwrap().name(), m.name());
        }
    }
}
