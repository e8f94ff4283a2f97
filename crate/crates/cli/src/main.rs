mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};

/// Bayesian, label-efficient assessment of classifier predictions.
#[derive(Debug, Parser)]
#[command(name = "bayes-assess", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a prediction file and write it as normalized JSONL.
    Ingest(IngestArgs),
    /// Generate a labeled synthetic pool.
    Synth(SynthArgs),
    /// Run labeling sessions against the labels in a pool.
    Run(RunArgs),
    /// Score trajectories against the pool's full labels.
    Eval(EvalArgs),
    /// Posterior summaries and plot data for one trajectory.
    Report(ReportArgs),
    /// Start the HTTP labeling service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    /// jsonl or csv; guessed from the extension when absent.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// JSON spec file; flags below override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Comma-separated per-class accuracies.
    #[arg(long, value_delimiter = ',')]
    profile: Option<Vec<f64>>,
    /// With --low/--high: evenly spaced accuracies for this many classes.
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    low: f64,
    #[arg(long, default_value_t = 0.95)]
    high: f64,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    offset: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    pool: PathBuf,
    /// Trajectory JSONL; the effective config goes next to it as
    /// `<out>.config.json`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    /// A label count or `until-stopped`.
    #[arg(long)]
    budget: Option<String>,
    /// Strategy kind, e.g. `thompson` or `random`.
    #[arg(long)]
    strategy: Option<String>,
    /// Worker threads for independent runs; all cores when absent.
    #[arg(long)]
    jobs: Option<usize>,
    /// Apply the benchmark stopping rule using the pool's labels.
    #[arg(long)]
    stop: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Fully labeled pool the trajectories were run on.
    #[arg(long)]
    truth_from: PathBuf,
    /// One trajectory file per method; repeat the flag to compare methods.
    #[arg(long, required = true)]
    traj: Vec<PathBuf>,
    /// Config of the trajectories; defaults to each file's sidecar.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Method the others are tested against; `random` when present.
    #[arg(long)]
    baseline: Option<String>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    pool: PathBuf,
    #[arg(long)]
    traj: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Which run of a multi-run file.
    #[arg(long, default_value_t = 0)]
    run: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for CSV/JSON plot data.
    #[arg(long)]
    plots: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long)]
    pool: PathBuf,
    /// Default config for sessions created with an empty body.
    #[arg(long)]
    config: PathBuf,
    /// Require `Authorization: Bearer <token>`.
    #[arg(long)]
    token: Option<String>,
    /// Persist sessions here and reload them on start.
    #[arg(long)]
    state_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Synth(a) => commands::synth(a),
        Command::Run(a) => commands::run(a),
        Command::Eval(a) => commands::eval(a),
        Command::Report(a) => commands::report(a),
        Command::Serve(a) => commands::serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<commands::ConfigMissing>().is_some() {
                eprintln!("\n{}", Cli::command().render_usage());
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
