use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use onenas::baselines::{run_predictor, BaselineConfig, Method};
use onenas::data::{load_csv, synth, write_csv, SynthKind, SynthParams, TimeSeries};
use onenas::engine::{run_to_dir, write_prediction_rows, ClockMode, EngineConfig, PredictionRow, PREDICTIONS_FILE};
use onenas::report::{build_report, write_report};

#[derive(Parser)]
#[command(name = "onenas", version, about = "Online neuroevolution of RNNs for streaming time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run ONE-NAS over a stream.
    Run(RunArgs),
    /// Run a classical online predictor over a stream.
    Baseline(BaselineArgs),
    /// Write a synthetic series as CSV.
    Synth(SynthArgs),
    /// Summarize a run directory into CSV tables.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config; defaults apply to missing keys, unknown keys are rejected.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value = "runs/onenas")]
    out_dir: PathBuf,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<ClockMode>,
    #[arg(long)]
    pace_ms: Option<u64>,
    #[arg(long)]
    generations: Option<usize>,
    /// CSV stream; overrides `data` in the config.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    target: Option<String>,
}

#[derive(Args)]
struct StreamArgs {
    /// CSV stream to read.
    #[arg(long, conflicts_with = "synth")]
    data: Option<PathBuf>,
    /// Target column of the CSV.
    #[arg(long, default_value = "value")]
    target: String,
    /// Synthetic stream to generate instead of reading a CSV.
    #[arg(long)]
    synth: Option<SynthKind>,
    #[arg(long, default_value_t = 5001)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BaselineArgs {
    /// naive, ma, exp, arima (OGD) or arima_ons.
    #[arg(long)]
    method: Method,
    #[command(flatten)]
    stream: StreamArgs,
    /// TOML with baseline settings (ma_window, alpha, arima_lags, ...).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "runs/baseline")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value = "noisy_sine")]
    kind: SynthKind,
    #[arg(long, default_value_t = 5001)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    period: Option<f64>,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding generations.jsonl and predictions.csv.
    run_dir: PathBuf,
    /// Where to write the tables; defaults to the run directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<ClockMode, String> {
    match s {
        "replay" => Ok(ClockMode::Replay),
        "paced" => Ok(ClockMode::Paced),
        _ => Err(format!("expected `replay` or `paced`, got `{s}`")),
    }
}

fn stream(args: &StreamArgs) -> onenas::Result<TimeSeries> {
    match (&args.data, args.synth) {
        (Some(path), _) => load_csv(path, &args.target),
        (None, kind) => synth(kind.unwrap_or(SynthKind::NoisySine), args.steps, &SynthParams::default(), args.seed),
    }
}

fn cmd_run(args: RunArgs) -> onenas::Result<()> {
    let mut cfg = match &args.config {
        Some(path) => EngineConfig::load(path)?,
        None => EngineConfig::default(),
    };
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.workers {
        cfg.workers = v;
    }
    if let Some(v) = args.mode {
        cfg.mode = v;
    }
    if let Some(v) = args.pace_ms {
        cfg.pace_ms = v;
    }
    if let Some(v) = args.generations {
        cfg.generations = v;
    }
    if args.data.is_some() {
        cfg.data = args.data;
    }
    if args.target.is_some() {
        cfg.target = args.target;
    }
    cfg.validate()?;
    let series = cfg.series()?;
    info!("running {} generations over {} steps into {}", cfg.generations, series.len(), args.out_dir.display());
    let out = run_to_dir(&cfg, &series, &args.out_dir)?;
    println!(
        "generations {}  online mse {:.6}  naive mse {:.6}  best fitness {:?}",
        out.reports.len(),
        out.score.mse(),
        out.score.naive_mse(),
        out.state.global_best.fitness
    );
    Ok(())
}

fn cmd_baseline(args: BaselineArgs) -> onenas::Result<()> {
    let cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| onenas::Error::Config(format!("{}: {e}", path.display())))?;
            toml::from_str::<BaselineConfig>(&text).map_err(|e| onenas::Error::Config(format!("{}: {e}", path.display())))?
        }
        None => BaselineConfig::default(),
    };
    let series = stream(&args.stream)?;
    let mut predictor = args.method.build(&cfg)?;
    let forecasts = run_predictor(predictor.as_mut(), &series.target_values());
    let rows: Vec<PredictionRow> = forecasts
        .iter()
        .map(|f| PredictionRow {
            step_index: f.step_index,
            actual: f.actual,
            predicted: f.predicted,
            method: args.method.name().to_string(),
        })
        .collect();
    std::fs::create_dir_all(&args.out_dir)?;
    write_prediction_rows(&args.out_dir.join(PREDICTIONS_FILE), &rows)?;
    let mse = rows.iter().map(|r| (r.predicted - r.actual).powi(2)).sum::<f64>() / rows.len().max(1) as f64;
    println!("{}: {} forecasts, mse {:.6}, rmse {:.6}", args.method, rows.len(), mse, mse.sqrt());
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> onenas::Result<()> {
    let mut params = SynthParams::default();
    if let Some(v) = args.period {
        params.period = v;
    }
    if let Some(v) = args.amplitude {
        params.amplitude = v;
    }
    if let Some(v) = args.noise {
        params.noise = v;
    }
    let series = synth(args.kind, args.steps, &params, args.seed)?;
    if let Some(parent) = args.out.parent() {
        std::fs::create_dir_all(parent)?;
    }
    write_csv(&series, &args.out)?;
    println!("wrote {} steps of {} to {}", series.len(), args.kind, args.out.display());
    Ok(())
}

fn cmd_report(args: ReportArgs) -> onenas::Result<()> {
    let report = build_report(&args.run_dir)?;
    let out = args.out_dir.unwrap_or_else(|| args.run_dir.clone());
    write_report(&report, &out)?;
    let s = &report.summary;
    println!("generations {}  steps/generation {}  extinctions {}", s.generations, s.steps_per_generation, s.extinctions);
    for m in &s.methods {
        println!("  {:<10} mse {:.6}  rmse {:.6}  late mse {:.6}", m.method, m.mse, m.rmse, m.late_mse);
    }
    println!(
        "  win rate vs naive: mean {:.3}, first quartile {:.3}, last quartile {:.3}",
        s.mean_win_rate, s.first_quartile_win_rate, s.last_quartile_win_rate
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Baseline(a) => cmd_baseline(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
