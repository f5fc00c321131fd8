//! Acceptance suite: one pass/fail line per criterion.
//!
//! Runs as its own binary (`cargo test --release --test acceptance`) and exits
//! non-zero when any criterion fails. The qualitative criteria (6, 7, 8b) share
//! one batch of ten-seed runs on the same noisy-sine stream.

mod common;

use std::collections::BTreeSet;
use std::time::Instant;

use common::{cell_check, crossover_lamarckian, genome_check, mutation_lamarckian, random_genome, rng, FD_TOL};
use onenas::baselines::{run_predictor, ArimaVariant, BaselineConfig, ExpSmoothing, MovingAverage, Naive, OnlineArima, OnlinePredictor};
use onenas::cells::CellKind;
use onenas::data::{normalize_online, slice_stream, synth, SynthKind, SynthParams, TimeSeries};
use onenas::engine::{run, run_to_dir, worker_pool_train, EngineConfig, HistoricalPool, RunOutcome, Task, TrainingConfig, WorkContext, GENERATIONS_FILE, PREDICTIONS_FILE};
use onenas::evo::{crossover, mutate, OperatorConfig};
use onenas::genome::{seed_genome, validate, Genome};
use onenas::population::{PopulationConfig, PopulationState};
use onenas::rng::{derive_seed, Stream};
use onenas::rnn::{l2_norm, rescale_gradient, Subsequence};
use rand::Rng;

/// Generations of the qualitative runs.
const GENERATIONS: usize = 1000;
const P: usize = 25;
const SEEDS: std::ops::RangeInclusive<u64> = 1..=10;
const STREAM_SEED: u64 = 0;

struct Verdict {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn report(v: &Verdict) {
    println!("criterion {:<3} {} {}: {}", v.id, if v.pass { "PASS" } else { "FAIL" }, v.title, v.detail);
}

fn c1_gradients() -> Verdict {
    let t = Instant::now();
    let mut r = rng(101);
    let mut worst: f64 = 0.0;
    for kind in CellKind::ALL {
        worst = worst.max(cell_check(kind, 100, &mut r));
    }
    let (g_worst, skips) = genome_check(20, &mut r);
    let secs = t.elapsed().as_secs_f64();
    Verdict {
        id: "1",
        title: "gradient correctness",
        pass: worst < FD_TOL && g_worst < FD_TOL && secs < 120.0,
        detail: format!(
            "worst rel. error {worst:.1e} over 6 cell kinds x 100 draws, {g_worst:.1e} over 20 genomes (skips {skips:?}); {secs:.1}s"
        ),
    }
}

fn c2_operators() -> Verdict {
    let t = Instant::now();
    let mut r = rng(202);
    let cfg = OperatorConfig::default();
    let (g0, mut inn) = random_genome(3, 12, 0, &mut r);
    let mut pool: Vec<Genome> = vec![g0.clone()];
    let (mut violations, mut broken, mut counts) = (0usize, 0usize, [0usize; 3]);
    let pop_cfg = PopulationConfig {
        islands: 3,
        elite_capacity: 3,
        generated_per_island: 3,
        extinct_frequency: 1,
        operators: OperatorConfig::islands(),
    };
    let mut state = PopulationState::new(&g0, pop_cfg).unwrap();
    for n in 0..10_000 {
        match r.random_range(0..10) {
            0 => {
                // Repopulate an island from the current global best.
                for (k, isl) in state.islands.iter_mut().enumerate() {
                    for g in &mut isl.elite {
                        g.fitness = Some(k as f64 + 1.0);
                    }
                }
                state.select_all().unwrap();
                let best = state.global_best.clone();
                let island = r.random_range(0..state.islands.len());
                state.repopulate(island, n, &mut r);
                for g in &state.islands[island].elite {
                    violations += validate(g).len();
                    broken += usize::from(!mutation_lamarckian(&best, g));
                    pool.push(g.clone());
                }
                counts[2] += 1;
            }
            1..=3 if pool.len() >= 2 => {
                let (a, b) = (r.random_range(0..pool.len()), r.random_range(0..pool.len()));
                let child = crossover(&pool[a], &pool[b], &cfg, &mut r).unwrap();
                violations += validate(&child).len();
                broken += usize::from(!crossover_lamarckian(&pool[a], &pool[b], &child));
                pool.push(child);
                counts[1] += 1;
            }
            _ => {
                let parent = pool[r.random_range(0..pool.len())].clone();
                let (child, _) = mutate(&parent, &cfg, &mut inn, &mut r);
                violations += validate(&child).len();
                broken += usize::from(!mutation_lamarckian(&parent, &child));
                pool.push(child);
                counts[0] += 1;
            }
        }
        while pool.len() > 60 {
            let i = r.random_range(0..pool.len());
            pool.swap_remove(i);
        }
        // Keep the repopulation state's innovation ids ahead of the free pool's.
        inn = onenas::genome::Innovations::covering(pool.iter().chain(state.islands.iter().flat_map(|i| i.elite.iter())));
        state.innovations = inn.clone();
    }
    let secs = t.elapsed().as_secs_f64();
    Verdict {
        id: "2",
        title: "operator closure",
        pass: violations == 0 && broken == 0 && secs < 120.0,
        detail: format!(
            "{} mutations, {} crossovers, {} repopulations: {violations} violations, {broken} Lamarckian breaks; {secs:.1}s",
            counts[0], counts[1], counts[2]
        ),
    }
}

fn c3_baselines() -> Verdict {
    let xs = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0];
    let expected: [(&str, Box<dyn OnlinePredictor>, Vec<f64>); 3] = [
        ("naive", Box::new(Naive::default()), vec![3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0]),
        (
            "ma3",
            Box::new(MovingAverage::new(3).unwrap()),
            vec![3.0, 2.0, 8.0 / 3.0, 2.0, 10.0 / 3.0, 5.0, 16.0 / 3.0, 17.0 / 3.0, 13.0 / 3.0],
        ),
        (
            "exp0.2",
            Box::new(ExpSmoothing::new(0.2).unwrap()),
            vec![3.0, 2.6, 2.88, 2.504, 3.0032, 4.20256, 3.762048, 4.2096384, 4.36771072],
        ),
    ];
    let mut worst: f64 = 0.0;
    for (_, mut p, want) in expected {
        let got: Vec<f64> = run_predictor(p.as_mut(), &xs).iter().map(|f| f.predicted).collect();
        worst = worst.max(if got.len() == want.len() {
            got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        } else {
            f64::INFINITY
        });
    }
    let mut r = rng(303);
    let mut mismatches = 0;
    for _ in 0..100 {
        let len = r.random_range(2..200);
        let s: Vec<f64> = (0..len).map(|_| r.random_range(-100.0..100.0)).collect();
        let a = run_predictor(&mut Naive::default(), &s);
        let b = run_predictor(&mut MovingAverage::new(1).unwrap(), &s);
        mismatches += usize::from(a != b);
    }
    Verdict {
        id: "3",
        title: "baseline exactness",
        pass: worst <= 1e-12 && mismatches == 0,
        detail: format!("max deviation from hand values {worst:.1e}; naive != MA(1) on {mismatches}/100 series"),
    }
}

fn c4_rescale() -> Verdict {
    let cases = [(vec![1.2, -1.6], 1.0), (vec![0.3, 0.4], 0.5), (vec![0.006, -0.008], 0.05)];
    let mut pass = true;
    let mut norms = Vec::new();
    for (g, want) in cases {
        let out = rescale_gradient(g.clone()).gradient;
        let n = l2_norm(&out);
        let k = out[0] / g[0];
        let same_direction = k > 0.0 && (out[1] - k * g[1]).abs() <= 1e-15;
        pass &= (n - want).abs() <= 1e-15 && same_direction;
        norms.push(format!("{:.1e}->{n}", l2_norm(&g)));
    }
    Verdict { id: "4", title: "gradient rescaling", pass, detail: format!("norms {}", norms.join(", ")) }
}

fn c5_causality() -> Verdict {
    let f = 50;
    let cfg = EngineConfig {
        generations: 200,
        num_train_sets: 5,
        num_validation_sets: 5,
        islands: 4,
        elite_capacity: 2,
        generated_per_island: 2,
        extinct_frequency: f,
        epochs: 2,
        noise_epochs: 1,
        learning_rate: 0.03,
        warm_start: true,
        seed: 55,
        ..EngineConfig::default()
    };
    let series = synth(SynthKind::MackeyGlass, 200 * P + 1, &SynthParams::default(), 5).unwrap();
    let out = run(&cfg, &series).unwrap();
    let leaks = out.predictions.iter().filter(|p| p.read_upto >= p.step_index).count();
    let events = out.reports.iter().filter(|r| r.extinct_island.is_some()).count();
    Verdict {
        id: "5",
        title: "causality audit",
        pass: leaks == 0 && out.predictions.len() == 200 * P && events == 200 / f && out.state.extinctions.len() == events,
        detail: format!("{} predictions, {leaks} read at or past their target; {events} repopulations (expected {})", out.predictions.len(), 200 / f),
    }
}

fn sine_stream() -> TimeSeries {
    synth(SynthKind::NoisySine, GENERATIONS * P + 1, &SynthParams::default(), STREAM_SEED).unwrap()
}

fn qualitative_config(seed: u64, islands: bool) -> EngineConfig {
    let base = EngineConfig {
        generations: GENERATIONS,
        steps_per_generation: P,
        num_train_sets: 10,
        num_validation_sets: 20,
        learning_rate: 0.03,
        warm_start: true,
        seed,
        ..EngineConfig::default()
    };
    if islands {
        EngineConfig { islands: 10, elite_capacity: 1, generated_per_island: 2, extinct_frequency: 100, ..base }
    } else {
        // Same total population (30) and offspring per generation in one island.
        let single = EngineConfig::single_population();
        EngineConfig {
            islands: 1,
            elite_capacity: 10,
            generated_per_island: 20,
            extinct_frequency: 0,
            mutation_rate: single.mutation_rate,
            intra_crossover_rate: single.intra_crossover_rate,
            inter_crossover_rate: single.inter_crossover_rate,
            ..base
        }
    }
}

struct Summary {
    late_mse: f64,
    late_naive_mse: f64,
    first_quartile: f64,
    last_quartile: f64,
    mse: f64,
    rmse: f64,
    secs: f64,
}

fn summarize(out: &RunOutcome, secs: f64) -> Summary {
    let half = out.predictions.len() / 2;
    let late = &out.predictions[half..];
    let n = late.len() as f64;
    let wr = out.score.win_rates();
    let q = wr.len() / 4;
    Summary {
        late_mse: late.iter().map(|r| (r.predicted - r.actual).powi(2)).sum::<f64>() / n,
        late_naive_mse: late.iter().map(|r| (r.naive - r.actual).powi(2)).sum::<f64>() / n,
        first_quartile: wr[..q].iter().sum::<f64>() / q as f64,
        last_quartile: wr[wr.len() - q..].iter().sum::<f64>() / q as f64,
        mse: out.score.mse(),
        rmse: *out.score.rmse_over_time.last().unwrap(),
        secs,
    }
}

fn qualitative_runs(series: &TimeSeries, islands: bool) -> Vec<Summary> {
    SEEDS
        .map(|seed| {
            let t = Instant::now();
            let out = run(&qualitative_config(seed, islands), series).unwrap();
            let s = summarize(&out, t.elapsed().as_secs_f64());
            println!(
                "    {} seed {seed:>2}: late mse {:.5} (naive {:.5}), win rate {:.3} -> {:.3}, rmse {:.4}, {:.0}s",
                if islands { "islands" } else { "single " },
                s.late_mse,
                s.late_naive_mse,
                s.first_quartile,
                s.last_quartile,
                s.rmse,
                s.secs
            );
            s
        })
        .collect()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn c6(isl: &[Summary]) -> Verdict {
    let a = isl.iter().filter(|s| s.late_mse < s.late_naive_mse).count();
    let b = isl.iter().filter(|s| s.last_quartile > s.first_quartile).count();
    Verdict {
        id: "6",
        title: "online learning on noisy sine",
        pass: a >= 8 && b >= 8,
        detail: format!(
            "(a) late-half mse below naive in {a}/10 seeds; (b) final-quartile win rate above first-quartile in {b}/10; {GENERATIONS} generations, {:.0}s total",
            isl.iter().map(|s| s.secs).sum::<f64>()
        ),
    }
}

fn c7(isl: &[Summary], single: &[Summary]) -> Verdict {
    let mi = median(isl.iter().map(|s| s.mse).collect());
    let ms = median(single.iter().map(|s| s.mse).collect());
    Verdict {
        id: "7",
        title: "islands + repopulation vs single population",
        pass: mi < ms,
        detail: format!("median final online mse {mi:.5} (10 islands, f=100) vs {ms:.5} (one island, same population 30)"),
    }
}

fn c8a() -> (bool, String) {
    let params = SynthParams { noise: 1.0, ..SynthParams::default() };
    let cfg = BaselineConfig { arima_lags: 2, arima_d: 0, ..BaselineConfig::default() };
    let mut ok = 0;
    let mut worst: f64 = 0.0;
    for seed in SEEDS {
        let xs = synth(SynthKind::Ar2, 5000, &params, seed).unwrap().target_values();
        let mut m = OnlineArima::new(ArimaVariant::Ogd, &cfg).unwrap();
        for x in &xs {
            m.observe(*x);
        }
        let err = m.coefficients().iter().zip(params.phi).map(|(c, t)| (c - t).abs()).fold(0.0, f64::max);
        worst = worst.max(err);
        ok += usize::from(err <= 0.1);
    }
    (ok >= 8, format!("(a) AR(2) coefficients within 0.1 in {ok}/10 seeds (worst error {worst:.3})"))
}

fn c8(isl: &[Summary], series: &TimeSeries) -> Verdict {
    let (a_pass, a_detail) = c8a();
    let values = series.target_values();
    let mut ogd = OnlineArima::new(ArimaVariant::Ogd, &BaselineConfig::default()).unwrap();
    let f = run_predictor(&mut ogd, &values[..GENERATIONS * P + 1]);
    let arima = (f.iter().map(|x| (x.predicted - x.actual).powi(2)).sum::<f64>() / f.len() as f64).sqrt();
    let wins = isl.iter().filter(|s| s.rmse <= arima).count();
    Verdict {
        id: "8",
        title: "online ARIMA sanity",
        pass: a_pass && wins >= 7,
        detail: format!("{a_detail}; (b) ONE-NAS final rmse <= ARIMA-OGD's {arima:.4} in {wins}/10 seeds"),
    }
}

fn c9_scaling() -> Verdict {
    let series = synth(SynthKind::NoisySine, 40 * P, &SynthParams::default(), 9).unwrap();
    let (windows, _) = slice_stream(&normalize_online(&series.rows), P).unwrap();
    let mut pool = HistoricalPool::new();
    for (k, w) in windows.into_iter().enumerate() {
        let targets = w.iter().map(|r| r[0]).collect();
        pool.push(Subsequence::new(w, targets, k * P).unwrap()).unwrap();
    }
    let mut r = rng(909);
    let seed = seed_genome(&series.names, &series.names, &mut r).unwrap();
    let tasks: Vec<Task> = (0..100u64)
        .map(|id| {
            let (mut g, _) = random_genome(1, 12, 30, &mut r);
            g.id = id;
            g.input_names = seed.input_names.clone();
            g.output_names = seed.output_names.clone();
            Task { seed: derive_seed(9, Stream::Training, &[0, id]), genome: g, train: true }
        })
        .collect();
    let training = TrainingConfig::default();
    let ctx = WorkContext { pool: &pool, num_train_sets: 10, num_validation_sets: 5, training: &training };
    let t = Instant::now();
    let (one, _) = worker_pool_train(tasks.clone(), ctx, 1).unwrap();
    let t1 = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let (eight, stats) = worker_pool_train(tasks, ctx, 8).unwrap();
    let t8 = t.elapsed().as_secs_f64();
    let same = one.iter().zip(&eight).all(|(a, b)| a.genome.fitness.map(f64::to_bits) == b.genome.fitness.map(f64::to_bits));
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let ratio = t8 / t1;
    Verdict {
        id: "9",
        title: "worker scaling",
        pass: ratio <= 0.35 && same,
        detail: format!(
            "8 workers {t8:.2}s vs 1 worker {t1:.2}s (ratio {ratio:.2}, needs <= 0.35) on {cores} available core(s); tasks per worker {:?}; fitness identical across worker counts: {same}",
            stats.tasks_per_worker
        ),
    }
}

fn c10_determinism() -> Verdict {
    let cfg = EngineConfig {
        generations: 80,
        num_train_sets: 6,
        num_validation_sets: 5,
        islands: 4,
        elite_capacity: 2,
        generated_per_island: 2,
        extinct_frequency: 20,
        epochs: 3,
        noise_epochs: 1,
        workers: 1,
        seed: 1010,
        ..EngineConfig::default()
    };
    let series = synth(SynthKind::MackeyGlass, 80 * P + 1, &SynthParams::default(), 10).unwrap();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        run_to_dir(&cfg, &series, d.path()).unwrap();
    }
    let mut identical = BTreeSet::new();
    for f in [GENERATIONS_FILE, PREDICTIONS_FILE] {
        let a = std::fs::read(dirs[0].path().join(f)).unwrap();
        let b = std::fs::read(dirs[1].path().join(f)).unwrap();
        if a == b && !a.is_empty() {
            identical.insert(f);
        }
    }
    Verdict {
        id: "10",
        title: "determinism",
        pass: identical.len() == 2,
        detail: format!("byte-identical across two runs: {identical:?}"),
    }
}

fn main() {
    let mut verdicts = Vec::new();
    for check in [c1_gradients, c2_operators, c3_baselines, c4_rescale, c5_causality] {
        let v = check();
        report(&v);
        verdicts.push(v);
    }
    let series = sine_stream();
    println!("    running {} x {GENERATIONS}-generation noisy-sine runs per configuration", SEEDS.count());
    let isl = qualitative_runs(&series, true);
    let v = c6(&isl);
    report(&v);
    verdicts.push(v);
    let single = qualitative_runs(&series, false);
    for v in [c7(&isl, &single), c8(&isl, &series), c9_scaling(), c10_determinism()] {
        report(&v);
        verdicts.push(v);
    }
    println!();
    for v in &verdicts {
        report(v);
    }
    let failed = verdicts.iter().filter(|v| !v.pass).count();
    println!("\n{} of {} criteria passed", verdicts.len() - failed, verdicts.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
