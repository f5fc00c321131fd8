//! Scores every classical online predictor on the three synthetic streams.
//!
//! cargo run --release --example baselines_comparison -- [steps]

use onenas::baselines::{run_predictor, BaselineConfig, Method};
use onenas::data::{synth, SynthKind, SynthParams};

fn main() -> onenas::Result<()> {
    let steps: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5000);
    let cfg = BaselineConfig::default();
    print!("{:<14}", "stream");
    for m in Method::ALL {
        print!("{:>15}", m.name());
    }
    println!();
    for kind in [SynthKind::NoisySine, SynthKind::Ar2, SynthKind::MackeyGlass] {
        let values = synth(kind, steps, &SynthParams::default(), 1)?.target_values();
        print!("{:<14}", kind.to_string());
        for m in Method::ALL {
            let mut p = m.build(&cfg)?;
            let f = run_predictor(p.as_mut(), &values);
            let mse = f.iter().map(|x| (x.predicted - x.actual).powi(2)).sum::<f64>() / f.len() as f64;
            print!("{:>15.6}", mse.sqrt());
        }
        println!();
    }
    println!("(online RMSE over {steps} steps)");
    Ok(())
}
