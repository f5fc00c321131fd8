use std::path::Path;
use std::time::{Duration, Instant};

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};

use super::config::{ClockMode, EngineConfig};
use super::output::RunWriter;
use super::pool::HistoricalPool;
use super::trainer::{RescaleCounts, TrainingConfig};
use super::workers::{worker_pool_train, Task, WorkContext};
use crate::data::{OnlineNormalizer, TimeSeries};
use crate::error::{Error, Result};
use crate::genome::{seed_genome, Genome};
use crate::metrics::OnlineScore;
use crate::population::PopulationState;
use crate::rng::{derive_seed, rng_for, Stream};
use crate::rnn::{Network, Subsequence};

/// One online forecast. `read_upto` is the highest stream index the
/// predictor had read when it produced the value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub generation: usize,
    pub step_index: usize,
    pub read_upto: usize,
    pub actual: f64,
    pub predicted: f64,
    pub naive: f64,
}

/// Deterministic per-generation summary (one line of `generations.jsonl`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub generation: usize,
    pub predictions: Vec<f64>,
    pub squared_errors: Vec<f64>,
    pub naive_squared_errors: Vec<f64>,
    /// Steps whose forecast fell back to the last value after a numeric failure.
    pub prediction_fallbacks: usize,
    pub predictor_id: u64,
    pub global_best_id: u64,
    pub global_best_fitness: Option<f64>,
    pub global_best_hidden_nodes: usize,
    pub global_best_edges: usize,
    pub island_bests: Vec<Option<f64>>,
    pub island_ranking: Vec<usize>,
    pub extinct_island: Option<usize>,
    pub trained: usize,
    pub evaluated: usize,
    pub failed: usize,
    pub cold_start: bool,
    pub rescale: RescaleCounts,
    pub pool_size: usize,
}

/// Wall-clock measurements, kept apart from the deterministic report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationTiming {
    pub generation: usize,
    pub evolve_seconds: f64,
    pub predict_seconds: f64,
    pub total_seconds: f64,
    pub tasks_per_worker: Vec<usize>,
    pub deadline_miss: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub reports: Vec<GenerationReport>,
    pub predictions: Vec<PredictionRecord>,
    pub timings: Vec<GenerationTiming>,
    pub score: OnlineScore,
    pub state: PopulationState,
    pub pool_size: usize,
}

/// Hands out stream rows and remembers the furthest one handed out.
struct StreamReader<'a> {
    rows: &'a [Vec<f64>],
    high_water: Option<usize>,
}

impl<'a> StreamReader<'a> {
    fn read(&mut self, i: usize) -> &'a [f64] {
        self.high_water = Some(self.high_water.map_or(i, |h| h.max(i)));
        &self.rows[i]
    }
}

struct WindowOutput {
    records: Vec<PredictionRecord>,
    window: Subsequence,
    fallbacks: usize,
    seconds: f64,
}

/// Forecasts rows `t*p+1 ..= (t+1)*p` of the stream one step at a time,
/// reading each input row only when it "arrives".
fn predict_window(
    net: Option<&Network>,
    warm: Option<&Subsequence>,
    rows: &[Vec<f64>],
    target: usize,
    norm: &mut OnlineNormalizer,
    generation: usize,
    p: usize,
    pace: Option<Duration>,
) -> Result<WindowOutput> {
    let started = Instant::now();
    let mut reader = StreamReader { rows, high_water: None };
    let mut ro = net.map(Network::start);
    if let (Some(net), Some(ro), Some(prev)) = (net, ro.as_mut(), warm) {
        for x in &prev.inputs {
            if net.step(ro, x, false).is_err() {
                *ro = net.start();
                break;
            }
        }
    }
    let (mut inputs, mut targets) = (Vec::with_capacity(p), Vec::with_capacity(p));
    let mut records = Vec::with_capacity(p);
    let mut fallbacks = 0;
    for r in generation * p..(generation + 1) * p {
        if let Some(d) = pace {
            std::thread::sleep(d);
        }
        let row = reader.read(r);
        let x = norm.push(row);
        let naive = row[target];
        let out = match (net, ro.as_mut()) {
            (Some(net), Some(ro)) => net.step(ro, &x, false).ok().filter(|v| v.is_finite()),
            _ => None,
        };
        let predicted = match out {
            Some(v) => norm.denormalize(target, v),
            None => {
                // A failed step poisons the rest of the unroll.
                ro = None;
                fallbacks += 1;
                naive
            }
        };
        records.push(PredictionRecord {
            generation,
            step_index: r + 1,
            read_upto: reader.high_water.expect("a row was just read"),
            actual: rows[r + 1][target],
            predicted,
            naive,
        });
        targets.push(x[target]);
        inputs.push(x);
    }
    Ok(WindowOutput {
        records,
        window: Subsequence::new(inputs, targets, generation * p)?,
        fallbacks,
        seconds: started.elapsed().as_secs_f64(),
    })
}

struct EvolveOutput {
    trained: usize,
    evaluated: usize,
    failed: usize,
    cold_start: bool,
    rescale: RescaleCounts,
    tasks_per_worker: Vec<usize>,
    seconds: f64,
}

fn evolve(
    state: &mut PopulationState,
    pool: &HistoricalPool,
    cfg: &EngineConfig,
    training: &TrainingConfig,
    generation: usize,
) -> Result<EvolveOutput> {
    let started = Instant::now();
    let mut rng = rng_for(cfg.seed, Stream::Offspring, &[generation as u64]);
    let task_seed = |g: &Genome| derive_seed(cfg.seed, Stream::Training, &[generation as u64, g.id]);
    let mut tasks = Vec::new();
    let mut layout = Vec::with_capacity(state.islands.len());
    for i in 0..state.islands.len() {
        let kids = state.generate_offspring(i, generation, &mut rng)?;
        let isl = &state.islands[i];
        layout.push((isl.elite.len(), kids.len()));
        for g in &isl.elite {
            tasks.push(Task { genome: g.clone(), train: false, seed: task_seed(g) });
        }
        for g in kids {
            tasks.push(Task { seed: task_seed(&g), genome: g, train: true });
        }
    }
    let ctx = WorkContext {
        pool,
        num_train_sets: cfg.num_train_sets,
        num_validation_sets: cfg.num_validation_sets,
        training,
    };
    let (results, stats) = worker_pool_train(tasks, ctx, cfg.workers)?;
    let mut out = EvolveOutput {
        trained: 0,
        evaluated: results.len(),
        failed: results.iter().filter(|r| r.failure.is_some()).count(),
        cold_start: results.iter().any(|r| r.cold_start),
        rescale: RescaleCounts::default(),
        tasks_per_worker: stats.tasks_per_worker,
        seconds: 0.0,
    };
    let mut it = results.into_iter();
    for (isl, (n_elite, n_kids)) in state.islands.iter_mut().zip(layout) {
        isl.elite = it.by_ref().take(n_elite).map(|r| r.genome).collect();
        isl.generated = it
            .by_ref()
            .take(n_kids)
            .map(|r| {
                if let Some(rep) = &r.training {
                    out.trained += 1;
                    out.rescale.merge(rep.rescale);
                }
                r.genome
            })
            .collect();
    }
    state.select_all()?;
    out.seconds = started.elapsed().as_secs_f64();
    Ok(out)
}

/// Number of whole generations `series` can feed, given one extra step for
/// the final forecast target.
pub fn generations_available(series: &TimeSeries, p: usize) -> usize {
    series.len().saturating_sub(1) / p
}

fn run_inner(config: &EngineConfig, series: &TimeSeries, mut writer: Option<&mut RunWriter>) -> Result<RunOutcome> {
    config.validate()?;
    let p = config.steps_per_generation;
    let available = generations_available(series, p);
    let generations = config.generations.min(available);
    if generations < config.generations {
        warn!(
            "stream holds {} steps: running {generations} of {} generations, {} trailing steps unused",
            series.len(),
            config.generations,
            series.len() - generations * p
        );
    }
    if generations == 0 {
        return Err(Error::InvalidArgument(format!("stream of {} steps is shorter than one generation", series.len())));
    }
    let target = series.target_index();
    let seed = seed_genome(&series.names, std::slice::from_ref(&series.target), &mut rng_for(config.seed, Stream::Seed, &[]))?;
    let mut state = PopulationState::new(&seed, config.population())?;
    let mut pool = HistoricalPool::new();
    let mut norm = OnlineNormalizer::new(series.names.len());
    let training = TrainingConfig {
        epochs: config.epochs,
        noise_epochs: config.noise_epochs,
        noise_fraction: config.noise_fraction,
        learning_rate: config.learning_rate,
        momentum: config.momentum,
    };
    let pace = (config.mode == ClockMode::Paced).then(|| Duration::from_millis(config.pace_ms));
    let mut outcome = RunOutcome {
        reports: Vec::with_capacity(generations),
        predictions: Vec::with_capacity(generations * p),
        timings: Vec::with_capacity(generations),
        score: OnlineScore::default(),
        state: state.clone(),
        pool_size: 0,
    };

    for t in 0..generations {
        let started = Instant::now();
        let predictor = state.global_best.clone();
        let net = match Network::compile(&predictor) {
            Ok(n) => Some(n),
            Err(e) => {
                warn!("generation {t}: predictor {} does not compile ({e}); using last values", predictor.id);
                None
            }
        };
        let (window, evo) = std::thread::scope(|s| {
            let warm = if config.warm_start { pool.all().last() } else { None };
            let norm = &mut norm;
            let handle = s.spawn(move || predict_window(net.as_ref(), warm, &series.rows, target, norm, t, p, pace));
            let evo = if pool.is_empty() {
                debug!("generation {t}: empty pool, nothing to train yet");
                Ok(None)
            } else {
                evolve(&mut state, &pool, config, &training, t).map(Some)
            };
            (handle.join().expect("prediction thread does not panic"), evo)
        });
        let window = window?;
        let evo = evo?;

        let island_ranking = state.rank_islands().unwrap_or_default();
        let island_bests = state.islands.iter().map(|i| i.best().and_then(|g| g.fitness)).collect();
        let extinct_island = state.maybe_extinct(t, &mut rng_for(config.seed, Stream::Repopulation, &[t as u64]));
        pool.push(window.window)?;

        for rec in &window.records {
            outcome.score.record(rec.predicted, rec.naive, rec.actual);
        }
        outcome.score.end_generation();
        let best = &state.global_best;
        let active = best.active_nodes();
        let report = GenerationReport {
            generation: t,
            predictions: window.records.iter().map(|r| r.predicted).collect(),
            squared_errors: window.records.iter().map(|r| (r.predicted - r.actual).powi(2)).collect(),
            naive_squared_errors: window.records.iter().map(|r| (r.naive - r.actual).powi(2)).collect(),
            prediction_fallbacks: window.fallbacks,
            predictor_id: predictor.id,
            global_best_id: best.id,
            global_best_fitness: best.fitness,
            global_best_hidden_nodes: best.nodes.iter().filter(|n| n.is_hidden() && n.enabled && active.contains(&n.id)).count(),
            global_best_edges: best.enabled_edge_count(),
            island_bests,
            island_ranking,
            extinct_island,
            trained: evo.as_ref().map_or(0, |e| e.trained),
            evaluated: evo.as_ref().map_or(0, |e| e.evaluated),
            failed: evo.as_ref().map_or(0, |e| e.failed),
            cold_start: evo.as_ref().is_some_and(|e| e.cold_start),
            rescale: evo.as_ref().map_or_else(RescaleCounts::default, |e| e.rescale),
            pool_size: pool.len(),
        };
        let total = started.elapsed();
        let deadline_miss = pace.is_some_and(|d| total > d * p as u32);
        if deadline_miss {
            warn!("generation {t}: took {:.3}s, longer than its arrival window", total.as_secs_f64());
        }
        let timing = GenerationTiming {
            generation: t,
            evolve_seconds: evo.as_ref().map_or(0.0, |e| e.seconds),
            predict_seconds: window.seconds,
            total_seconds: total.as_secs_f64(),
            tasks_per_worker: evo.map(|e| e.tasks_per_worker).unwrap_or_default(),
            deadline_miss,
        };
        if t % 50 == 0 || t + 1 == generations {
            info!(
                "generation {t}: best fitness {:?}, online mse {:.6} (naive {:.6})",
                report.global_best_fitness,
                outcome.score.mse(),
                outcome.score.naive_mse()
            );
        }
        if let Some(w) = writer.as_deref_mut() {
            w.write_generation(&report, &window.records, &timing)?;
            if config.checkpoint_every > 0 && (t + 1) % config.checkpoint_every == 0 {
                w.write_checkpoint(t + 1, &state.global_best)?;
            }
        }
        outcome.reports.push(report);
        outcome.predictions.extend(window.records);
        outcome.timings.push(timing);
    }
    if let Some(w) = writer {
        w.finish(&state.global_best)?;
    }
    outcome.pool_size = pool.len();
    outcome.state = state;
    Ok(outcome)
}

/// Runs the engine over `series`, keeping everything in memory.
pub fn run(config: &EngineConfig, series: &TimeSeries) -> Result<RunOutcome> {
    run_inner(config, series, None)
}

/// Runs the engine and streams the run log, predictions, timings and
/// checkpoints into `dir`.
pub fn run_to_dir(config: &EngineConfig, series: &TimeSeries, dir: &Path) -> Result<RunOutcome> {
    let mut writer = RunWriter::create(dir, config)?;
    run_inner(config, series, Some(&mut writer))
}
