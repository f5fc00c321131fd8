//! Folds a run directory into summary tables and plot-ready CSV.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{read_generations, read_predictions, GenerationReport, PredictionRow, GENERATIONS_FILE, PREDICTIONS_FILE};
use crate::error::{Error, Result};
use crate::metrics::online_rmse_series;

pub const RMSE_FILE: &str = "rmse_over_time.csv";
pub const WIN_RATE_FILE: &str = "win_rate.csv";
pub const GENERATION_SUMMARY_FILE: &str = "generation_summary.csv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub steps: usize,
    pub mse: f64,
    pub rmse: f64,
    /// MSE over the second half of the steps.
    pub late_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub generations: usize,
    pub steps_per_generation: usize,
    pub methods: Vec<MethodSummary>,
    pub mean_win_rate: f64,
    pub first_quartile_win_rate: f64,
    pub last_quartile_win_rate: f64,
    pub extinctions: usize,
    pub final_best_fitness: Option<f64>,
    pub final_best_hidden_nodes: usize,
    pub final_best_edges: usize,
}

/// Everything `report` derives from one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub summary: Summary,
    /// Per method, cumulative RMSE at the end of each generation.
    pub rmse_by_generation: BTreeMap<String, Vec<f64>>,
    pub win_rates: Vec<f64>,
    pub generations: Vec<GenerationReport>,
}

fn by_method(rows: Vec<PredictionRow>) -> BTreeMap<String, Vec<PredictionRow>> {
    let mut out: BTreeMap<String, Vec<PredictionRow>> = BTreeMap::new();
    for r in rows {
        out.entry(r.method.clone()).or_default().push(r);
    }
    for v in out.values_mut() {
        v.sort_by_key(|r| r.step_index);
    }
    out
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Recomputes every metric from `generations.jsonl` and `predictions.csv`.
pub fn build_report(dir: &Path) -> Result<Report> {
    let generations = read_generations(&dir.join(GENERATIONS_FILE))?;
    let methods = by_method(read_predictions(&dir.join(PREDICTIONS_FILE))?);
    let Some(first) = generations.first() else {
        return Err(Error::Data { path: dir.join(GENERATIONS_FILE), message: "no generations logged".into() });
    };
    let p = first.predictions.len();
    let g = generations.len();
    let mut rmse_by_generation = BTreeMap::new();
    let mut summaries = Vec::new();
    for (name, rows) in &methods {
        if rows.len() != g * p {
            return Err(Error::Data {
                path: dir.join(PREDICTIONS_FILE),
                message: format!("method {name} has {} rows, expected {}", rows.len(), g * p),
            });
        }
        let residuals: Vec<f64> = rows.iter().map(|r| r.predicted - r.actual).collect();
        let rmse = online_rmse_series(&residuals)?;
        rmse_by_generation.insert(name.clone(), (1..=g).map(|k| rmse[k * p - 1]).collect());
        let sq: Vec<f64> = residuals.iter().map(|e| e * e).collect();
        let mse = mean(&sq);
        summaries.push(MethodSummary {
            method: name.clone(),
            steps: rows.len(),
            mse,
            rmse: mse.sqrt(),
            late_mse: mean(&sq[sq.len() / 2..]),
        });
    }
    let win_rates = match (methods.get("onenas"), methods.get("naive")) {
        (Some(e), Some(n)) => e
            .chunks(p)
            .zip(n.chunks(p))
            .map(|(e, n)| {
                let wins = e.iter().zip(n).filter(|(e, n)| (e.predicted - e.actual).abs() < (n.predicted - n.actual).abs()).count();
                wins as f64 / p as f64
            })
            .collect(),
        _ => Vec::new(),
    };
    let q = (win_rates.len() / 4).max(1).min(win_rates.len());
    let last = generations.last().expect("non-empty");
    let summary = Summary {
        generations: g,
        steps_per_generation: p,
        methods: summaries,
        mean_win_rate: mean(&win_rates),
        first_quartile_win_rate: mean(&win_rates[..q]),
        last_quartile_win_rate: mean(&win_rates[win_rates.len() - q..]),
        extinctions: generations.iter().filter(|r| r.extinct_island.is_some()).count(),
        final_best_fitness: last.global_best_fitness,
        final_best_hidden_nodes: last.global_best_hidden_nodes,
        final_best_edges: last.global_best_edges,
    };
    Ok(Report { summary, rmse_by_generation, win_rates, generations })
}

/// Writes the report tables into `out`.
pub fn write_report(report: &Report, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    let p = report.summary.steps_per_generation;

    let mut w = csv::Writer::from_path(out.join(RMSE_FILE))?;
    let names: Vec<&String> = report.rmse_by_generation.keys().collect();
    let mut header = vec!["generation".to_string(), "step_index".to_string()];
    header.extend(names.iter().map(|n| n.to_string()));
    w.write_record(&header)?;
    for k in 0..report.summary.generations {
        let mut row = vec![k.to_string(), ((k + 1) * p).to_string()];
        row.extend(names.iter().map(|n| report.rmse_by_generation[*n][k].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(out.join(WIN_RATE_FILE))?;
    w.write_record(["generation", "win_rate"])?;
    for (k, r) in report.win_rates.iter().enumerate() {
        w.write_record([k.to_string(), r.to_string()])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(out.join(GENERATION_SUMMARY_FILE))?;
    w.write_record(["generation", "mse", "naive_mse", "best_fitness", "hidden_nodes", "edges", "extinct_island"])?;
    for r in &report.generations {
        w.write_record([
            r.generation.to_string(),
            mean(&r.squared_errors).to_string(),
            mean(&r.naive_squared_errors).to_string(),
            r.global_best_fitness.map_or_else(String::new, |f| f.to_string()),
            r.global_best_hidden_nodes.to_string(),
            r.global_best_edges.to_string(),
            r.extinct_island.map_or_else(String::new, |i| i.to_string()),
        ])?;
    }
    w.flush()?;

    fs::write(out.join(SUMMARY_FILE), serde_json::to_string_pretty(&report.summary)?)?;
    Ok(())
}
