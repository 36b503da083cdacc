use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use dyntree::harness::{emit_metrics, load_stream, run, LabelColumn, Mode, StreamConfig};
use dyntree::FeasibilityParams;

#[derive(Parser)]
#[command(
    name = "dyntree",
    version,
    about = "Streaming evaluation of the dynamic decision tree"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one stream over a CSV dataset and report prequential F1 and timing.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Input model: incremental, sw or ru.
    #[arg(long)]
    mode: Mode,
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Label column, by header name or zero-based index.
    #[arg(long)]
    label: LabelColumn,
    /// Label value mapped to class 1; every other value is class 0.
    #[arg(long)]
    positive: String,
    #[arg(long, allow_negative_numbers = true)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    beta: f64,
    /// Leaf size threshold.
    #[arg(long, default_value_t = 1)]
    k: u64,
    /// Maximum depth, or `inf`.
    #[arg(long, default_value = "10", value_parser = parse_depth)]
    h: Depth,
    /// Window length (sliding-window mode).
    #[arg(long)]
    window: Option<usize>,
    /// Examples used for the initial build.
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Check feasibility after every update and fail on the first violation.
    #[arg(long)]
    verify: bool,
    /// Write the JSON summary here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the per-step series `t,yhat,y,nanos` as CSV.
    #[arg(long)]
    series: Option<PathBuf>,
}

/// Depth bound; `None` is unbounded.
#[derive(Clone, Copy)]
struct Depth(Option<usize>);

fn parse_depth(s: &str) -> std::result::Result<Depth, String> {
    match s {
        "inf" | "none" => Ok(Depth(None)),
        _ => s
            .parse()
            .map(|h| Depth(Some(h)))
            .map_err(|e| format!("{e}")),
    }
}

fn run_command(args: RunArgs) -> Result<()> {
    let params = FeasibilityParams::new(args.alpha, args.beta, args.k, args.h.0, args.epsilon)?;
    let config = StreamConfig {
        mode: args.mode,
        window: args.window,
        warmup: args.warmup,
        params,
        seed: args.seed,
        dataset_path: Some(args.data.clone()),
        label_column: args.label,
        positive_class: args.positive,
        verify: args.verify,
    };
    config.validate()?;
    let data = load_stream(&args.data, &config.label_column, &config.positive_class)
        .with_context(|| format!("loading {}", args.data.display()))?;
    let metrics = run(&data.schema, &data.examples, &config)?;
    match &args.out {
        Some(out) => emit_metrics(&metrics, &config, out, args.series.as_deref())
            .with_context(|| format!("writing {}", out.display()))?,
        None => {
            println!(
                "{}",
                serde_json::to_string_pretty(&metrics.summary(&config))?
            );
            if let Some(series) = &args.series {
                let file = std::fs::File::create(series)
                    .with_context(|| format!("writing {}", series.display()))?;
                dyntree::harness::write_series(&metrics, file)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run_command(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
