//! Time series ingestion, online normalization, slicing and synthetic streams.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
}

/// A rectangular `[steps × parameters]` series with one designated target.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub names: Vec<String>,
    /// Row-major: `rows[step][parameter]`.
    pub rows: Vec<Vec<f64>>,
    pub target: String,
}

impl TimeSeries {
    pub fn new(names: Vec<String>, rows: Vec<Vec<f64>>, target: &str) -> Result<Self> {
        if !names.iter().any(|n| n == target) {
            return Err(Error::InvalidArgument(format!("target `{target}` is not one of {names:?}")));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != names.len()) {
            return Err(Error::InvalidArgument(format!(
                "row {i} has {} values, expected {}",
                rows[i].len(),
                names.len()
            )));
        }
        Ok(TimeSeries { names, rows, target: target.to_string() })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn target_index(&self) -> usize {
        self.names.iter().position(|n| *n == self.target).expect("checked at construction")
    }

    pub fn column(&self, index: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[index]).collect()
    }

    pub fn target_values(&self) -> Vec<f64> {
        self.column(self.target_index())
    }

    /// Whole-series descriptive statistics. Not used for normalization, which
    /// only ever looks at the past.
    pub fn stats(&self) -> Vec<ColumnStats> {
        (0..self.names.len())
            .map(|j| {
                let col = self.column(j);
                let n = col.len().max(1) as f64;
                let mean = col.iter().sum::<f64>() / n;
                let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                ColumnStats {
                    min: col.iter().copied().fold(f64::INFINITY, f64::min),
                    max: col.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    mean,
                    std: var.sqrt(),
                }
            })
            .collect()
    }

    /// First `steps` rows.
    pub fn truncated(&self, steps: usize) -> TimeSeries {
        TimeSeries { names: self.names.clone(), rows: self.rows[..steps.min(self.len())].to_vec(), target: self.target.clone() }
    }
}

fn data_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Data { path: path.to_path_buf(), message: message.into() }
}

/// Reads a headed numeric CSV. Values are taken as-is (no cleaning).
pub fn load_csv(path: impl AsRef<Path>, target: &str) -> Result<TimeSeries> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path).map_err(|e| data_err(path, e.to_string()))?;
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| data_err(path, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if names.is_empty() || names.iter().all(String::is_empty) {
        return Err(data_err(path, "empty file"));
    }
    if !names.iter().any(|n| n == target) {
        return Err(data_err(path, format!("missing target column `{target}` (columns: {})", names.join(", "))));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row_no = i + 2;
        let record = record.map_err(|e| data_err(path, format!("row {row_no}: {e}")))?;
        if record.len() != names.len() {
            return Err(data_err(path, format!("row {row_no}: {} values, expected {}", record.len(), names.len())));
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(j, cell)| {
                cell.trim().parse::<f64>().map_err(|_| {
                    data_err(path, format!("row {row_no}, column `{}`: not a number: `{cell}`", names[j]))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(data_err(path, "no data rows"));
    }
    TimeSeries::new(names, rows, target)
}

/// Writes the series with shortest round-trip float formatting.
pub fn write_csv(series: &TimeSeries, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&series.names)?;
    for row in &series.rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Running per-column min-max scaling to `[0, 1]`.
///
/// The statistics at step `s` cover rows `0..=s` only. A column that has been
/// constant so far maps to 0.5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineNormalizer {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub seen: usize,
}

impl OnlineNormalizer {
    pub fn new(columns: usize) -> Self {
        OnlineNormalizer { min: vec![f64::INFINITY; columns], max: vec![f64::NEG_INFINITY; columns], seen: 0 }
    }

    pub fn observe(&mut self, row: &[f64]) {
        for (j, &v) in row.iter().enumerate() {
            self.min[j] = self.min[j].min(v);
            self.max[j] = self.max[j].max(v);
        }
        self.seen += 1;
    }

    pub fn normalize_value(&self, column: usize, v: f64) -> f64 {
        let (lo, hi) = (self.min[column], self.max[column]);
        if hi > lo {
            (v - lo) / (hi - lo)
        } else {
            0.5
        }
    }

    pub fn normalize(&self, row: &[f64]) -> Vec<f64> {
        row.iter().enumerate().map(|(j, &v)| self.normalize_value(j, v)).collect()
    }

    pub fn denormalize(&self, column: usize, v: f64) -> f64 {
        let (lo, hi) = (self.min[column], self.max[column]);
        if hi > lo {
            lo + v * (hi - lo)
        } else {
            lo
        }
    }

    /// Observes `row`, then scales it with the updated statistics.
    pub fn push(&mut self, row: &[f64]) -> Vec<f64> {
        self.observe(row);
        self.normalize(row)
    }
}

/// Normalizes a whole stream causally, row by row.
pub fn normalize_online(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let Some(first) = rows.first() else { return Vec::new() };
    let mut norm = OnlineNormalizer::new(first.len());
    rows.iter().map(|r| norm.push(r)).collect()
}

/// Consecutive non-overlapping windows of `p` rows. Returns the windows and
/// the number of trailing rows dropped.
pub fn slice_stream<T: Clone>(rows: &[T], p: usize) -> Result<(Vec<Vec<T>>, usize)> {
    if p < 2 {
        return Err(Error::InvalidArgument(format!("window length must be at least 2, got {p}")));
    }
    let windows: Vec<Vec<T>> = rows.chunks_exact(p).map(<[T]>::to_vec).collect();
    let rest = rows.len() % p;
    if rest > 0 {
        warn!("discarding {rest} trailing rows that do not fill a window of {p}");
    }
    Ok((windows, rest))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    NoisySine,
    Ar2,
    MackeyGlass,
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SynthKind::NoisySine => "noisy_sine",
            SynthKind::Ar2 => "ar2",
            SynthKind::MackeyGlass => "mackey_glass",
        })
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noisy_sine" | "sine" => Ok(SynthKind::NoisySine),
            "ar2" => Ok(SynthKind::Ar2),
            "mackey_glass" => Ok(SynthKind::MackeyGlass),
            _ => Err(Error::InvalidArgument(format!("unknown synthetic series `{s}`"))),
        }
    }
}

/// Knobs for the synthetic generators; unused fields are ignored by a kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub period: f64,
    pub amplitude: f64,
    pub noise: f64,
    pub phi: [f64; 2],
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams { period: 40.0, amplitude: 1.0, noise: 0.1, phi: [0.5, -0.3] }
    }
}

/// Single-column sine wave with additive Gaussian noise: column `value`.
pub fn noisy_sine(steps: usize, params: &SynthParams, seed: u64) -> TimeSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, params.noise).expect("noise std must be non-negative");
    let phase = 2.0 * std::f64::consts::PI / params.period;
    let rows = (0..steps)
        .map(|t| vec![params.amplitude * (phase * t as f64).sin() + noise.sample(&mut rng)])
        .collect();
    TimeSeries { names: vec!["value".into()], rows, target: "value".into() }
}

/// `x_t = phi1 x_{t-1} + phi2 x_{t-2} + e_t` with `e_t ~ N(0, noise²)`.
pub fn ar2(steps: usize, params: &SynthParams, seed: u64) -> TimeSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, params.noise).expect("noise std must be non-negative");
    let [a, b] = params.phi;
    let burn_in = 100;
    let (mut x1, mut x2) = (0.0, 0.0);
    let mut rows = Vec::with_capacity(steps);
    for t in 0..steps + burn_in {
        let x = a * x1 + b * x2 + noise.sample(&mut rng);
        x2 = x1;
        x1 = x;
        if t >= burn_in {
            rows.push(vec![x]);
        }
    }
    TimeSeries { names: vec!["value".into()], rows, target: "value".into() }
}

/// Mackey-Glass delay system (tau 17) sampled once per unit time, with
/// optional observation noise.
pub fn mackey_glass(steps: usize, params: &SynthParams, seed: u64) -> TimeSeries {
    const TAU: usize = 17;
    const SUB: usize = 10;
    let (beta, gamma, n) = (0.2, 0.1, 10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, params.noise).expect("noise std must be non-negative");
    let dt = 1.0 / SUB as f64;
    let lag = TAU * SUB;
    let burn_in = 300;
    let mut hist: Vec<f64> = vec![1.2; lag + 1];
    let mut rows = Vec::with_capacity(steps);
    for t in 0..(steps + burn_in) {
        for _ in 0..SUB {
            let x = *hist.last().expect("non-empty");
            let xd = hist[hist.len() - 1 - lag];
            hist.push(x + dt * (beta * xd / (1.0 + xd.powf(n)) - gamma * x));
        }
        if hist.len() > 4 * lag {
            hist.drain(..hist.len() - lag - 1);
        }
        if t >= burn_in {
            rows.push(vec![*hist.last().expect("non-empty") + noise.sample(&mut rng)]);
        }
    }
    TimeSeries { names: vec!["value".into()], rows, target: "value".into() }
}

pub fn synth(kind: SynthKind, steps: usize, params: &SynthParams, seed: u64) -> Result<TimeSeries> {
    if !(params.noise >= 0.0) || !params.noise.is_finite() {
        return Err(Error::InvalidArgument("noise must be a finite non-negative number".into()));
    }
    if kind == SynthKind::NoisySine && !(params.period > 0.0) {
        return Err(Error::InvalidArgument("sine period must be positive".into()));
    }
    Ok(match kind {
        SynthKind::NoisySine => noisy_sine(steps, params, seed),
        SynthKind::Ar2 => ar2(steps, params, seed),
        SynthKind::MackeyGlass => mackey_glass(steps, params, seed),
    })
}
