use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use log::warn;
use serde::{Deserialize, Serialize};

use super::pool::HistoricalPool;
use super::trainer::{evaluate, train_genome, TrainingConfig, TrainingReport};
use crate::error::Result;
use crate::genome::Genome;
use crate::rng::Rng;
use crate::rnn::Subsequence;
use rand::SeedableRng;

/// One unit of work: optionally train a genome, then score it on the
/// validation windows.
#[derive(Debug, Clone)]
pub struct Task {
    pub genome: Genome,
    pub train: bool,
    /// Seeds training-data selection, visit order and noise. Derived from
    /// the genome, never from the worker that picks the task up.
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct TaskResult {
    /// The genome with trained weights and its fitness set.
    pub genome: Genome,
    pub training: Option<TrainingReport>,
    pub cold_start: bool,
    pub failure: Option<String>,
    pub worker: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WorkerStats {
    pub tasks_per_worker: Vec<usize>,
    pub wall_seconds: f64,
}

/// What the workers read: the pool plus selection sizes and training knobs.
#[derive(Debug, Clone, Copy)]
pub struct WorkContext<'a> {
    pub pool: &'a HistoricalPool,
    pub num_train_sets: usize,
    pub num_validation_sets: usize,
    pub training: &'a TrainingConfig,
}

fn run_task(task: &Task, ctx: &WorkContext<'_>, validation: &[Subsequence]) -> Result<(Genome, Option<TrainingReport>, bool)> {
    let mut genome = task.genome.clone();
    let mut rng = Rng::seed_from_u64(task.seed);
    let mut report = None;
    let mut cold = false;
    if task.train {
        let sel = ctx.pool.get_training_data(ctx.num_train_sets, ctx.num_validation_sets, &mut rng)?;
        cold = sel.cold_start;
        let subs: Vec<&Subsequence> = sel.indices.iter().map(|&i| ctx.pool.get(i)).collect();
        report = Some(train_genome(&mut genome, &subs, ctx.training, &mut rng)?);
    }
    let fitness = evaluate(&genome, validation)?;
    genome.fitness = Some(if fitness.is_nan() { f64::INFINITY } else { fitness });
    Ok((genome, report, cold))
}

/// Trains and evaluates every task on `workers` threads pulling from a shared
/// queue. Results come back in task order. A task that errors or panics
/// yields its input genome with infinite fitness.
pub fn worker_pool_train(tasks: Vec<Task>, ctx: WorkContext<'_>, workers: usize) -> Result<(Vec<TaskResult>, WorkerStats)> {
    let start = Instant::now();
    let validation = ctx.pool.get_validation_data(ctx.num_validation_sets)?;
    let next = AtomicUsize::new(0);
    let workers = workers.max(1);
    let mut per_worker: Vec<Vec<(usize, TaskResult)>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let (tasks, next, ctx) = (&tasks, &next, &ctx);
                s.spawn(move || {
                    let mut done = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        let Some(task) = tasks.get(i) else { break };
                        let outcome = catch_unwind(AssertUnwindSafe(|| run_task(task, ctx, validation)));
                        let result = match outcome {
                            Ok(Ok((genome, training, cold_start))) => {
                                TaskResult { genome, training, cold_start, failure: None, worker: w }
                            }
                            Ok(Err(e)) => failed(task, e.to_string(), w),
                            Err(p) => {
                                let msg = p
                                    .downcast_ref::<&str>()
                                    .map(|s| s.to_string())
                                    .or_else(|| p.downcast_ref::<String>().cloned())
                                    .unwrap_or_else(|| "worker panicked".into());
                                failed(task, msg, w)
                            }
                        };
                        done.push((i, result));
                    }
                    done
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker loop does not panic")).collect()
    });
    let stats = WorkerStats {
        tasks_per_worker: per_worker.iter().map(Vec::len).collect(),
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    let mut results: Vec<(usize, TaskResult)> = per_worker.drain(..).flatten().collect();
    results.sort_by_key(|(i, _)| *i);
    Ok((results.into_iter().map(|(_, r)| r).collect(), stats))
}

fn failed(task: &Task, message: String, worker: usize) -> TaskResult {
    warn!("genome {} failed: {message}", task.genome.id);
    let mut genome = task.genome.clone();
    genome.fitness = Some(f64::INFINITY);
    TaskResult { genome, training: None, cold_start: false, failure: Some(message), worker }
}
