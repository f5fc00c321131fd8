//! Online ARIMA on an AR(2) process: watch the OGD and ONS coefficient
//! estimates converge towards the true (0.5, -0.3).
//!
//! cargo run --release --example online_arima

use onenas::baselines::{ArimaVariant, BaselineConfig, OnlineArima, OnlinePredictor};
use onenas::data::{synth, SynthKind, SynthParams};

fn main() -> onenas::Result<()> {
    let params = SynthParams { noise: std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1.0), ..SynthParams::default() };
    let values = synth(SynthKind::Ar2, 5000, &params, 4)?.target_values();
    let cfg = BaselineConfig { arima_lags: 2, arima_d: 0, ..BaselineConfig::default() };
    println!("true coefficients: {:?}", params.phi);
    for variant in [ArimaVariant::Ogd, ArimaVariant::Ons] {
        let mut model = OnlineArima::new(variant, &cfg)?;
        let mut sse = 0.0;
        let mut n = 0;
        for (t, &x) in values.iter().enumerate() {
            if let Some(p) = model.predict() {
                sse += (p - x).powi(2);
                n += 1;
            }
            model.observe(x);
            if (t + 1) % 1000 == 0 {
                let c = model.coefficients();
                println!("{variant:?} step {:>4}: coefficients [{:+.4}, {:+.4}]  rmse {:.4}", t + 1, c[0], c[1], (sse / n as f64).sqrt());
            }
        }
    }
    Ok(())
}
