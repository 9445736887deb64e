//! `a2sbnn`: theta-sweep experiment runner.
//!
//! Exit codes: 0 on success, 1 on configuration errors, 2 on numeric or
//! I/O failures during the run.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use sbnn_cli::{config::ExperimentConfig, plots, report, sweep};

#[derive(Parser)]
#[command(name = "a2sbnn", about = "Copula-initialized spatial network calibration sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the theta sweep and write metrics, fields, residuals, and plots.
    Run(RunArgs),
    /// Check a config file against the schema and value constraints.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Calibrate a single theta instead of the configured grid.
    #[arg(long, conflicts_with = "theta_grid")]
    theta: Option<f64>,
    /// Comma-separated thetas replacing the configured grid.
    #[arg(long, value_delimiter = ',')]
    theta_grid: Option<Vec<f64>>,
    /// Run a single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    /// Side length of the spatial grid.
    #[arg(long)]
    grid_size: Option<usize>,
    /// Calibration iterations per cell.
    #[arg(long)]
    iterations: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Force plot rendering on.
    #[arg(long, conflicts_with = "no_plots")]
    emit_plots: bool,
    /// Force plot rendering off.
    #[arg(long)]
    no_plots: bool,
}

enum AppError {
    Config(String),
    Runtime(String),
}

impl From<sbnn_core::Error> for AppError {
    fn from(e: sbnn_core::Error) -> Self {
        AppError::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are successful exits
            if e.use_stderr() {
                let _ = e.print();
                return ExitCode::from(1);
            }
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };

    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Validate { config } => validate(&config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(AppError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn validate(path: &PathBuf) -> Result<(), AppError> {
    let cfg = ExperimentConfig::from_file(path).map_err(AppError::Config)?;
    cfg.validate().map_err(AppError::Config)?;
    println!("config ok: {}", path.display());
    Ok(())
}

fn run(args: RunArgs) -> Result<(), AppError> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path).map_err(AppError::Config)?,
        None => ExperimentConfig::default(),
    };

    if let Some(theta) = args.theta {
        cfg.theta_grid = vec![theta];
    }
    if let Some(grid) = args.theta_grid {
        cfg.theta_grid = grid;
    }
    if let Some(seed) = args.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(side) = args.grid_size {
        cfg.field.grid_side = side;
    }
    if let Some(iters) = args.iterations {
        cfg.calibration.iterations = iters;
    }
    if let Some(out) = args.out {
        cfg.output_dir = out;
    }
    if args.emit_plots {
        cfg.emit_plots = true;
    }
    if args.no_plots {
        cfg.emit_plots = false;
    }
    cfg.validate().map_err(AppError::Config)?;

    // fail on an unwritable output directory before any computation
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| AppError::Runtime(format!("cannot create {}: {e}", cfg.output_dir.display())))?;
    let probe = cfg.output_dir.join(".write_probe");
    std::fs::write(&probe, b"ok")
        .map_err(|e| AppError::Runtime(format!("output directory not writable: {e}")))?;
    let _ = std::fs::remove_file(&probe);

    let output = sweep::run_sweep(&cfg)?;
    report::write_report(&output, &cfg.output_dir)?;
    if cfg.emit_plots {
        plots::render_plots(&output, &cfg.output_dir)?;
    }

    print!("{}", report::summary_table(&output));
    println!("artifacts written to {}", cfg.output_dir.display());
    Ok(())
}
