//! Trains one hand-grown genome with BPTT and Nesterov momentum on windows of
//! a noisy sine and prints the loss per epoch.
//!
//! cargo run --release --example train_single_genome

use onenas::data::{normalize_online, slice_stream, synth, SynthKind, SynthParams};
use onenas::engine::{evaluate, train_genome, TrainingConfig};
use onenas::evo::{apply_mutation, MutationKind, OperatorConfig};
use onenas::genome::{seed_genome, Innovations};
use onenas::rnn::Subsequence;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> onenas::Result<()> {
    let series = synth(SynthKind::NoisySine, 40 * 25 + 1, &SynthParams::default(), 11)?;
    let rows = normalize_online(&series.rows);
    let (windows, _) = slice_stream(&rows, 25)?;
    let subs: Vec<Subsequence> = windows
        .into_iter()
        .enumerate()
        .map(|(k, w)| {
            let targets = w.iter().map(|r| r[0]).collect();
            Subsequence::new(w, targets, k * 25)
        })
        .collect::<onenas::Result<_>>()?;
    let (train, valid) = subs.split_at(30);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut g = seed_genome(&series.names, &series.names, &mut rng)?;
    let mut inn = Innovations::covering([&g]);
    let ops = OperatorConfig::default();
    for kind in [MutationKind::AddNode, MutationKind::AddRecurrentEdge, MutationKind::AddRecurrentEdge, MutationKind::AddNode] {
        if let Some(child) = apply_mutation(kind, &g, &ops, &mut inn, &mut rng) {
            g = child;
        }
    }
    println!("genome: {} hidden nodes, {} edges", g.hidden_count(), g.enabled_edge_count());
    println!("validation mse before: {:.6}", evaluate(&g, valid)?);

    let cfg = TrainingConfig { epochs: 20, noise_epochs: 10, learning_rate: 0.05, ..TrainingConfig::default() };
    let refs: Vec<&Subsequence> = train.iter().collect();
    let report = train_genome(&mut g, &refs, &cfg, &mut rng)?;
    for (e, l) in report.epoch_losses.iter().enumerate() {
        println!("epoch {:>2}: mean training loss {l:.6}", e + 1);
    }
    println!(
        "gradient rescaling: {} untouched, {} scaled down, {} boosted",
        report.rescale.none, report.rescale.scaled, report.rescale.boosted
    );
    println!("validation mse after:  {:.6}", evaluate(&g, valid)?);
    Ok(())
}
