//! The online generation loop.
//!
//! Each generation the current global best forecasts the incoming window on
//! its own thread while the coordinator breeds offspring and a worker pool
//! trains and scores them. Once both sides finish, elites are selected, the
//! worst island may be repopulated, and the new window joins the pool.

mod config;
mod output;
mod pool;
mod run;
mod trainer;
mod workers;

pub use config::{ClockMode, EngineConfig};
pub use output::{read_generations, read_predictions, write_prediction_rows, PredictionRow, RunWriter, GENERATIONS_FILE, PREDICTIONS_FILE, TIMINGS_FILE};
pub use pool::{HistoricalPool, TrainingSelection};
pub use run::{generations_available, run, run_to_dir, GenerationReport, GenerationTiming, PredictionRecord, RunOutcome};
pub use trainer::{add_input_noise, evaluate, train_genome, RescaleCounts, TrainingConfig, TrainingReport};
pub use workers::{worker_pool_train, Task, TaskResult, WorkContext, WorkerStats};
