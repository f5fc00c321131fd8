//! Drives the island population directly on a fixed pool of windows: breed,
//! train, select, and wipe out the worst island every few generations.
//!
//! cargo run --release --example island_repopulation

use onenas::data::{normalize_online, slice_stream, synth, SynthKind, SynthParams};
use onenas::engine::{worker_pool_train, HistoricalPool, Task, TrainingConfig, WorkContext};
use onenas::genome::seed_genome;
use onenas::population::{PopulationConfig, PopulationState};
use onenas::rng::{derive_seed, rng_for, Stream};
use onenas::rnn::Subsequence;
use onenas::evo::OperatorConfig;

fn main() -> onenas::Result<()> {
    let series = synth(SynthKind::MackeyGlass, 30 * 25 + 1, &SynthParams::default(), 2)?;
    let (windows, _) = slice_stream(&normalize_online(&series.rows), 25)?;
    let mut pool = HistoricalPool::new();
    for (k, w) in windows.into_iter().enumerate() {
        let targets = w.iter().map(|r| r[0]).collect();
        pool.push(Subsequence::new(w, targets, k * 25)?)?;
    }

    let seed = 9;
    let first = seed_genome(&series.names, &series.names, &mut rng_for(seed, Stream::Seed, &[]))?;
    let config = PopulationConfig {
        islands: 4,
        elite_capacity: 3,
        generated_per_island: 3,
        extinct_frequency: 5,
        operators: OperatorConfig::islands(),
    };
    let mut state = PopulationState::new(&first, config)?;
    let training = TrainingConfig { epochs: 4, noise_epochs: 2, learning_rate: 0.05, ..TrainingConfig::default() };
    let ctx = WorkContext { pool: &pool, num_train_sets: 8, num_validation_sets: 5, training: &training };

    for t in 1..=20 {
        let mut rng = rng_for(seed, Stream::Offspring, &[t as u64]);
        let mut tasks = Vec::new();
        let mut layout = Vec::new();
        for i in 0..state.islands.len() {
            let kids = state.generate_offspring(i, t, &mut rng)?;
            layout.push((state.islands[i].elite.len(), kids.len()));
            for g in state.islands[i].elite.iter().cloned() {
                tasks.push(Task { seed: derive_seed(seed, Stream::Training, &[t as u64, g.id]), genome: g, train: false });
            }
            for g in kids {
                tasks.push(Task { seed: derive_seed(seed, Stream::Training, &[t as u64, g.id]), genome: g, train: true });
            }
        }
        let (results, _) = worker_pool_train(tasks, ctx, 2)?;
        let mut it = results.into_iter();
        for (isl, (ne, nk)) in state.islands.iter_mut().zip(layout) {
            isl.elite = it.by_ref().take(ne).map(|r| r.genome).collect();
            isl.generated = it.by_ref().take(nk).map(|r| r.genome).collect();
        }
        state.select_all()?;
        let bests: Vec<String> = state
            .islands
            .iter()
            .map(|i| i.best().and_then(|g| g.fitness).map_or("-".into(), |f| format!("{f:.5}")))
            .collect();
        let wiped = state.maybe_extinct(t - 1, &mut rng_for(seed, Stream::Repopulation, &[t as u64]));
        println!(
            "generation {t:>2}: island bests [{}]{}",
            bests.join(", "),
            wiped.map_or(String::new(), |i| format!("  -> island {i} repopulated"))
        );
    }
    let best = &state.global_best;
    println!("global best: genome {} fitness {:?}, {} hidden nodes", best.id, best.fitness, best.hidden_count());
    Ok(())
}
