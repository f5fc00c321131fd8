//! Runs the full online loop on a synthetic stream and writes the run
//! directory (generations.jsonl, predictions.csv, timings, best genome),
//! then folds it into report tables.
//!
//! cargo run --release --example online_forecast -- [out_dir] [generations]

use std::path::PathBuf;

use onenas::engine::{run_to_dir, EngineConfig};
use onenas::report::{build_report, write_report};

fn main() -> onenas::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "runs/online_forecast".into()));
    let generations: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(150);

    let config = EngineConfig {
        generations,
        num_train_sets: 10,
        num_validation_sets: 20,
        elite_capacity: 2,
        generated_per_island: 1,
        extinct_frequency: 50,
        learning_rate: 0.1,
        checkpoint_every: 50,
        ..EngineConfig::island_repopulation(10, 50)
    };
    let series = config.series()?;
    let outcome = run_to_dir(&config, &series, &out)?;
    println!(
        "{} generations: online mse {:.5} vs naive {:.5}; {} extinctions",
        outcome.reports.len(),
        outcome.score.mse(),
        outcome.score.naive_mse(),
        outcome.state.extinctions.len()
    );

    let report = build_report(&out)?;
    write_report(&report, &out)?;
    let s = &report.summary;
    println!(
        "win rate vs naive: first quartile {:.3}, last quartile {:.3}",
        s.first_quartile_win_rate, s.last_quartile_win_rate
    );
    println!("tables written to {}", out.display());
    Ok(())
}
