use std::fs;

use onenas::codec;
use onenas::data::{synth, SynthKind, SynthParams};
use onenas::engine::{run, run_to_dir, ClockMode, EngineConfig, GENERATIONS_FILE, PREDICTIONS_FILE};
use onenas::report::build_report;

fn small(generations: usize) -> EngineConfig {
    EngineConfig {
        generations,
        steps_per_generation: 10,
        num_train_sets: 4,
        num_validation_sets: 3,
        islands: 3,
        elite_capacity: 2,
        generated_per_island: 2,
        extinct_frequency: 7,
        epochs: 2,
        noise_epochs: 1,
        learning_rate: 0.05,
        seed: 5,
        ..EngineConfig::default()
    }
}

#[test]
fn every_prediction_reads_only_the_past() {
    for warm_start in [false, true] {
        let cfg = EngineConfig { warm_start, ..small(30) };
        let series = synth(SynthKind::MackeyGlass, 301, &SynthParams::default(), 1).unwrap();
        let out = run(&cfg, &series).unwrap();
        assert_eq!(out.predictions.len(), 300);
        for (k, p) in out.predictions.iter().enumerate() {
            assert_eq!(p.step_index, k + 1);
            assert!(p.read_upto < p.step_index);
            assert_eq!(p.actual, series.rows[p.step_index][0]);
            assert_eq!(p.naive, series.rows[p.step_index - 1][0]);
        }
        assert_eq!(out.state.extinctions.len(), 30 / 7);
    }
}

#[test]
fn pool_grows_by_one_window_per_generation() {
    let series = synth(SynthKind::NoisySine, 201, &SynthParams::default(), 2).unwrap();
    let out = run(&small(20), &series).unwrap();
    for (t, r) in out.reports.iter().enumerate() {
        assert_eq!(r.pool_size, t + 1);
        assert_eq!(r.predictions.len(), 10);
        assert_eq!(r.squared_errors.len(), 10);
        assert_eq!(r.failed, 0);
    }
    assert!(out.reports[1].cold_start);
    assert!(!out.reports[19].cold_start);
}

#[test]
fn worker_count_does_not_change_results() {
    let series = synth(SynthKind::Ar2, 151, &SynthParams::default(), 3).unwrap();
    let one = run(&small(15), &series).unwrap();
    let four = run(&EngineConfig { workers: 4, ..small(15) }, &series).unwrap();
    assert_eq!(one.reports, four.reports);
    assert_eq!(one.predictions, four.predictions);
    assert!(four.timings.iter().skip(1).all(|t| t.tasks_per_worker.len() == 4));
}

#[test]
fn run_directory_is_reproducible_and_self_consistent() {
    let series = synth(SynthKind::NoisySine, 251, &SynthParams::default(), 4).unwrap();
    let cfg = EngineConfig { checkpoint_every: 10, ..small(25) };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out = run_to_dir(&cfg, &series, a.path()).unwrap();
    run_to_dir(&cfg, &series, b.path()).unwrap();
    for f in [GENERATIONS_FILE, PREDICTIONS_FILE, "best.genome", "config.toml", "checkpoints/generation_000020.genome"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
    let saved = codec::decode(&fs::read_to_string(a.path().join("best.genome")).unwrap()).unwrap();
    assert_eq!(saved, out.state.global_best);
    assert_eq!(EngineConfig::load(a.path().join("config.toml")).unwrap(), cfg);

    // The report recomputes the run-time metrics exactly from the logs.
    let report = build_report(a.path()).unwrap();
    let onenas = report.summary.methods.iter().find(|m| m.method == "onenas").unwrap();
    assert_eq!(onenas.mse, out.score.mse());
    assert_eq!(report.win_rates, out.score.win_rates());
    let last = *report.rmse_by_generation["onenas"].last().unwrap();
    assert_eq!(last, *out.score.rmse_over_time.last().unwrap());
    assert_eq!(report.summary.extinctions, 25 / 7);
}

#[test]
fn paced_mode_waits_for_each_step() {
    let series = synth(SynthKind::NoisySine, 41, &SynthParams::default(), 5).unwrap();
    let cfg = EngineConfig { mode: ClockMode::Paced, pace_ms: 2, ..small(4) };
    let out = run(&cfg, &series).unwrap();
    for t in &out.timings {
        assert!(t.predict_seconds >= 0.002 * 10.0 * 0.9);
        assert!(t.total_seconds >= t.predict_seconds);
    }
    assert!(EngineConfig { pace_ms: 0, ..cfg }.validate().is_err());
}

#[test]
fn config_rejects_unknown_keys_and_bad_values() {
    assert!(EngineConfig::from_toml_str("generations = 3\nfoo = 1").is_err());
    assert!(EngineConfig::from_toml_str("noise_epochs = 11").is_err());
    assert!(EngineConfig::from_toml_str("steps_per_generation = 1").is_err());
    let cfg = EngineConfig::from_toml_str("generations = 3\nislands = 1\nextinct_frequency = 0").unwrap();
    assert_eq!(cfg.generations, 3);
    assert_eq!(cfg.num_train_sets, 600);
}
