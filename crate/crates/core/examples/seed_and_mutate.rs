//! Builds a seed genome, applies a run of random mutations and crossovers,
//! and prints the resulting structure in the text checkpoint format.
//!
//! cargo run --example seed_and_mutate -- [steps] [seed]

use onenas::codec;
use onenas::evo::{crossover, mutate, OperatorConfig};
use onenas::genome::{seed_genome, validate, Innovations};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> onenas::Result<()> {
    let mut args = std::env::args().skip(1);
    let steps: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(30);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let inputs = vec!["wind_speed".to_string(), "power".to_string()];
    let outputs = vec!["power".to_string()];
    let seed_g = seed_genome(&inputs, &outputs, &mut rng)?;
    let mut inn = Innovations::covering([&seed_g]);
    let cfg = OperatorConfig::default();

    let mut a = seed_g.clone();
    let mut b = seed_g.clone();
    for step in 0..steps {
        let (child, kind) = mutate(if step % 2 == 0 { &a } else { &b }, &cfg, &mut inn, &mut rng);
        println!("step {step:>2}: {kind:?} -> {} nodes, {} enabled edges", child.nodes.len(), child.enabled_edge_count());
        if step % 2 == 0 {
            a = child;
        } else {
            b = child;
        }
    }
    let child = crossover(&a, &b, &cfg, &mut rng)?;
    let problems = validate(&child);
    println!(
        "crossover child: {} nodes, {} edges, {} violations",
        child.nodes.len(),
        child.edges.len(),
        problems.len()
    );
    println!("\n{}", codec::encode(&child));
    Ok(())
}
