mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use entgeo::experiment::{threads_from_env, DeltaPair, Stage};
use entgeo::model::{ground_state_entropy, DEFAULT_DEGENERACY_TOL};
use entgeo::{ground_space, io, tfim_terms, BackendKind, Boundary, Error, ExperimentConfig, LogBase, TfimParams};

use plot::{Metric, PlotKind, PlotSpec};

const EXIT_INVALID: u8 = 2;
const EXIT_ABORTS: u8 = 3;
const EXIT_INTERNAL: u8 = 1;

#[derive(Parser)]
#[command(name = "entgeo", version, about = "Entanglement and state-space geometry of VQE circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an ensemble of trials and write layers, deltas, training and metadata.
    Run(RunArgs),
    /// Recompute summary.csv and corr.csv from a run directory.
    Stats(StatsArgs),
    /// Render an SVG plot from output CSVs.
    Plot(PlotArgs),
    /// Exact diagonalization of the TFIM.
    Ed(EdArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed (overrides `base_seed`).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// `statevector` or `mps`.
    #[arg(long, value_parser = parse_backend)]
    backend: Option<BackendKind>,
    /// Comma-separated, e.g. `init,opt`.
    #[arg(long, value_delimiter = ',', value_parser = parse_stage)]
    stages: Option<Vec<Stage>>,
}

#[derive(Args)]
struct StatsArgs {
    /// Run directory containing layers.csv.
    input: PathBuf,
    /// Where to write summary.csv and corr.csv; defaults to the input directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write only the correlations with the final layer's deltas removed.
    #[arg(long)]
    exclude_final_layer: bool,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long, value_enum)]
    kind: PlotKind,
    /// Input CSV files; one series per file (and stage) for curve plots.
    #[arg(long = "input", required = true, num_args = 1..)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_parser = parse_stage)]
    stage: Option<Stage>,
    #[arg(long, value_enum, default_value = "entropy")]
    metric: Metric,
    /// `entropy_gd` or `entropy_gpf`.
    #[arg(long, value_parser = parse_pair, default_value = "entropy_gd")]
    pair: DeltaPair,
    #[arg(long)]
    exclude_final_layer: bool,
    /// Maximum number of scatter markers drawn.
    #[arg(long, default_value_t = plot::DEFAULT_POINT_CAP)]
    cap: usize,
    #[arg(long)]
    no_band: bool,
    #[arg(long)]
    xlabel: Option<String>,
    #[arg(long)]
    ylabel: Option<String>,
    #[arg(long)]
    title: Option<String>,
}

#[derive(Args)]
struct EdArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    j: f64,
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    #[arg(long, value_parser = parse_boundary, default_value = "periodic")]
    boundary: Boundary,
    /// `e` or `2`.
    #[arg(long, value_parser = parse_log_base, default_value = "e")]
    log_base: LogBase,
}

fn parse_backend(s: &str) -> Result<BackendKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_stage(s: &str) -> Result<Stage, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_pair(s: &str) -> Result<DeltaPair, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_boundary(s: &str) -> Result<Boundary, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_log_base(s: &str) -> Result<LogBase, String> {
    match s {
        "e" => Ok(LogBase::E),
        "2" => Ok(LogBase::Two),
        other => Err(format!("unknown log base `{other}`")),
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::InvalidInput(_) | Error::Io(_) | Error::Csv(_) | Error::Json(_) => EXIT_INVALID,
            Error::DimensionGuard { .. } | Error::UndefinedCorrelation(_) => EXIT_INVALID,
            _ => EXIT_INTERNAL,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn invalid(message: String) -> Failure {
    Failure {
        code: EXIT_INVALID,
        message,
    }
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| invalid(format!("{}: {e}", args.config.display())))?;
    let mut cfg = ExperimentConfig::from_toml(&text)?;
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(b) = args.backend {
        cfg.backend = b;
    }
    if let Some(s) = &args.stages {
        cfg.stages = s.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_run(args: &RunArgs) -> CmdResult {
    let cfg = load_config(args)?;
    let threads = threads_from_env()?;
    let dir = cfg.output_dir.clone();
    let results = io::run_to_dir(&cfg, threads, &dir)?;
    for a in &results.aborts {
        eprintln!("trial {} aborted: {}", a.trial, a.reason);
    }
    let frac = results.abort_fraction();
    if frac > cfg.max_abort_fraction {
        return Err(Failure {
            code: EXIT_ABORTS,
            message: format!(
                "{} of {} trials aborted ({frac:.3} > max_abort_fraction {})",
                results.aborts.len(),
                cfg.trials,
                cfg.max_abort_fraction
            ),
        });
    }
    eprintln!("wrote {} trials to {}", cfg.trials - results.aborts.len(), dir.display());
    Ok(())
}

fn cmd_stats(args: &StatsArgs) -> CmdResult {
    let out = args.out.clone().unwrap_or_else(|| args.input.clone());
    let res = io::run_stats(&args.input, &out, args.exclude_final_layer)?;
    for d in &res.diagnostics {
        eprintln!("{d}");
    }
    Ok(())
}

fn cmd_plot(args: &PlotArgs) -> CmdResult {
    let mut spec = PlotSpec::new(args.kind, args.inputs.clone(), args.output.clone());
    spec.point_cap = args.cap;
    spec.x_label = args.xlabel.clone();
    spec.y_label = args.ylabel.clone();
    spec.title = args.title.clone();
    spec.band = !args.no_band;
    spec.metric = args.metric;
    spec.pair = args.pair;
    spec.stage = args.stage;
    spec.exclude_final = args.exclude_final_layer;
    plot::write(&spec)?;
    Ok(())
}

fn cmd_ed(args: &EdArgs) -> CmdResult {
    let p = TfimParams::new(args.n, args.j, args.h, args.boundary)?;
    let gs = ground_space(&tfim_terms(&p).dense_matrix()?, DEFAULT_DEGENERACY_TOL)?;
    let entropy = ground_state_entropy(&gs, args.n / 2, args.log_base)?;
    let gap = gs.gap().map(|g| g.to_string()).unwrap_or_default();
    println!("N,J,h,boundary,E0,m,gap,entropy");
    println!(
        "{},{},{},{},{},{},{},{}",
        args.n,
        args.j,
        args.h,
        args.boundary,
        gs.energy,
        gs.degeneracy(),
        gap,
        entropy
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Plot(a) => cmd_plot(a),
        Command::Ed(a) => cmd_ed(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
