//! Online neuroevolution of recurrent networks for streaming time series.
//!
//! The crate evolves EXAMM-style recurrent genomes across islands while the
//! current best network forecasts each incoming window of the stream. See the
//! `examples/` directory for runnable entry points.

pub mod baselines;
pub mod cells;
pub mod codec;
pub mod data;
pub mod engine;
mod error;
pub mod evo;
pub mod genome;
pub mod metrics;
pub mod population;
pub mod report;
pub mod rng;
pub mod rnn;

pub use error::{Error, Result};
