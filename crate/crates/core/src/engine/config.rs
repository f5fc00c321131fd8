use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{load_csv, synth, SynthKind, SynthParams, TimeSeries};
use crate::error::{Error, Result};
use crate::evo::OperatorConfig;
use crate::population::PopulationConfig;
use crate::rnn::{DEFAULT_LEARNING_RATE, DEFAULT_MOMENTUM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    /// Consume the stream as fast as training allows.
    #[default]
    Replay,
    /// Each step arrives `pace_ms` after the previous one.
    Paced,
}

/// Everything a run needs, as one flat table. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub generations: usize,
    /// Stream steps per generation (and subsequence length).
    pub steps_per_generation: usize,
    pub num_train_sets: usize,
    pub num_validation_sets: usize,
    pub islands: usize,
    pub elite_capacity: usize,
    pub generated_per_island: usize,
    /// 0 disables extinction.
    pub extinct_frequency: usize,
    pub epochs: usize,
    /// The last `noise_epochs` epochs train on noisy copies of the inputs.
    pub noise_epochs: usize,
    pub noise_fraction: f64,
    pub mutation_rate: f64,
    pub intra_crossover_rate: f64,
    pub inter_crossover_rate: f64,
    pub min_time_skip: u32,
    pub max_time_skip: u32,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Replay the previous window through the predictor before forecasting,
    /// instead of starting each window from zero state.
    pub warm_start: bool,
    pub workers: usize,
    pub seed: u64,
    /// Write the global best genome every this many generations; 0 disables.
    pub checkpoint_every: usize,
    pub mode: ClockMode,
    pub pace_ms: u64,
    /// CSV input for the command-line runner.
    pub data: Option<PathBuf>,
    pub target: Option<String>,
    /// Synthetic input for the command-line runner when `data` is unset.
    pub synth: Option<SynthKind>,
    pub synth_seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig::island_repopulation(10, 100)
    }
}

impl EngineConfig {
    fn base() -> Self {
        EngineConfig {
            generations: 2000,
            steps_per_generation: 25,
            num_train_sets: 600,
            num_validation_sets: 100,
            islands: 10,
            elite_capacity: 5,
            generated_per_island: 10,
            extinct_frequency: 100,
            epochs: 10,
            noise_epochs: 5,
            noise_fraction: 0.10,
            mutation_rate: 0.3,
            intra_crossover_rate: 0.3,
            inter_crossover_rate: 0.4,
            min_time_skip: 1,
            max_time_skip: 10,
            learning_rate: DEFAULT_LEARNING_RATE,
            momentum: DEFAULT_MOMENTUM,
            warm_start: false,
            workers: 1,
            seed: 42,
            checkpoint_every: 0,
            mode: ClockMode::Replay,
            pace_ms: 0,
            data: None,
            target: None,
            synth: None,
            synth_seed: 0,
        }
    }

    /// One island of 50 elites and 100 generated genomes, 0.4 mutation and
    /// 0.6 crossover, no extinction.
    pub fn single_population() -> Self {
        EngineConfig {
            islands: 1,
            elite_capacity: 50,
            generated_per_island: 100,
            extinct_frequency: 0,
            mutation_rate: 0.4,
            intra_crossover_rate: 0.6,
            inter_crossover_rate: 0.0,
            ..Self::base()
        }
    }

    /// `islands` islands of 5 elites and 10 generated genomes each.
    pub fn island_repopulation(islands: usize, extinct_frequency: usize) -> Self {
        EngineConfig { islands, extinct_frequency, ..Self::base() }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: EngineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    /// The stream this config names: the CSV in `data`, or else a synthetic
    /// series (noisy sine unless `synth` says otherwise) just long enough for
    /// every generation.
    pub fn series(&self) -> Result<TimeSeries> {
        match &self.data {
            Some(path) => {
                let target = self
                    .target
                    .as_deref()
                    .ok_or_else(|| Error::Config("`data` is set but `target` is not".into()))?;
                load_csv(path, target)
            }
            None => {
                let kind = self.synth.unwrap_or(SynthKind::NoisySine);
                let steps = self.generations * self.steps_per_generation + 1;
                synth(kind, steps, &SynthParams::default(), self.synth_seed)
            }
        }
    }

    pub fn operators(&self) -> OperatorConfig {
        let mut ops = OperatorConfig::islands();
        ops.mutation_rate = self.mutation_rate;
        ops.intra_crossover_rate = self.intra_crossover_rate;
        ops.inter_crossover_rate = self.inter_crossover_rate;
        ops.min_time_skip = self.min_time_skip;
        ops.max_time_skip = self.max_time_skip;
        ops
    }

    pub fn population(&self) -> PopulationConfig {
        PopulationConfig {
            islands: self.islands,
            elite_capacity: self.elite_capacity,
            generated_per_island: self.generated_per_island,
            extinct_frequency: self.extinct_frequency,
            operators: self.operators(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.steps_per_generation < 2 {
            return fail("steps_per_generation must be at least 2");
        }
        if self.num_validation_sets == 0 || self.num_train_sets == 0 {
            return fail("num_train_sets and num_validation_sets must be at least 1");
        }
        if self.noise_epochs > self.epochs {
            return fail("noise_epochs cannot exceed epochs");
        }
        if self.workers == 0 {
            return fail("workers must be at least 1");
        }
        if !(self.noise_fraction >= 0.0 && self.noise_fraction.is_finite()) {
            return fail("noise_fraction must be a finite non-negative number");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return fail("momentum must lie in [0, 1)");
        }
        if self.mode == ClockMode::Paced && self.pace_ms == 0 {
            return fail("paced mode needs pace_ms > 0");
        }
        self.population().validate()
    }
}
