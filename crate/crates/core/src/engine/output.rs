use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::EngineConfig;
use super::run::{GenerationReport, GenerationTiming, PredictionRecord};
use crate::codec;
use crate::error::{Error, Result};
use crate::genome::Genome;

pub const GENERATIONS_FILE: &str = "generations.jsonl";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const TIMINGS_FILE: &str = "timings.jsonl";

/// One row of `predictions.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub step_index: usize,
    pub actual: f64,
    pub predicted: f64,
    pub method: String,
}

/// Streams run artifacts into a directory as generations complete.
pub struct RunWriter {
    dir: PathBuf,
    generations: BufWriter<File>,
    timings: BufWriter<File>,
    predictions: csv::Writer<File>,
}

fn num(x: f64) -> String {
    x.to_string()
}

impl RunWriter {
    pub fn create(dir: &Path, config: &EngineConfig) -> Result<Self> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("config.toml"), config.to_toml_string())?;
        let mut predictions = csv::Writer::from_path(dir.join(PREDICTIONS_FILE))?;
        predictions.write_record(["step_index", "actual", "predicted", "method"])?;
        Ok(RunWriter {
            dir: dir.to_path_buf(),
            generations: BufWriter::new(File::create(dir.join(GENERATIONS_FILE))?),
            timings: BufWriter::new(File::create(dir.join(TIMINGS_FILE))?),
            predictions,
        })
    }

    pub fn write_generation(
        &mut self,
        report: &GenerationReport,
        records: &[PredictionRecord],
        timing: &GenerationTiming,
    ) -> Result<()> {
        serde_json::to_writer(&mut self.generations, report)?;
        self.generations.write_all(b"\n")?;
        serde_json::to_writer(&mut self.timings, timing)?;
        self.timings.write_all(b"\n")?;
        for (method, pick) in [("onenas", true), ("naive", false)] {
            for r in records {
                let value = if pick { r.predicted } else { r.naive };
                self.predictions.write_record([r.step_index.to_string(), num(r.actual), num(value), method.to_string()])?;
            }
        }
        Ok(())
    }

    pub fn write_checkpoint(&mut self, generation: usize, best: &Genome) -> Result<()> {
        let dir = self.dir.join("checkpoints");
        fs::create_dir_all(&dir)?;
        fs::write(dir.join(format!("generation_{generation:06}.genome")), codec::encode(best))?;
        Ok(())
    }

    pub fn finish(&mut self, best: &Genome) -> Result<()> {
        self.generations.flush()?;
        self.timings.flush()?;
        self.predictions.flush()?;
        fs::write(self.dir.join("best.genome"), codec::encode(best))?;
        Ok(())
    }
}

/// Writes baseline forecasts in the same schema as the engine.
pub fn write_prediction_rows(path: &Path, rows: &[PredictionRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["step_index", "actual", "predicted", "method"])?;
    for r in rows {
        w.write_record([r.step_index.to_string(), num(r.actual), num(r.predicted), r.method.clone()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_generations(path: &Path) -> Result<Vec<GenerationReport>> {
    let file = File::open(path).map_err(|e| Error::Data { path: path.into(), message: e.to_string() })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Data {
            path: path.into(),
            message: format!("line {}: {e}", i + 1),
        })?);
    }
    Ok(out)
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Data { path: path.into(), message: e.to_string() })?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Data { path: path.into(), message: e.to_string() }))
        .collect()
}
