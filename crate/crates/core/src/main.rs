use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser};
use torsion_lab::model::BoundaryCondition;
use torsion_lab::report::{run, RunConfig, RunError, Subcommand};
use torsion_lab::scalar::ScalarMode;

/// Analytic and Reidemeister torsion on manifolds with boundary.
///
/// Exit status: 0 on success, 1 on input error, 2 when a tolerance check fails.
/// `TORSION_LAB_WORKERS` sets the number of worker threads.
#[derive(Parser, Debug)]
#[command(name = "torsion-lab", version, allow_negative_numbers = true)]
struct Cli {
    #[arg(value_enum)]
    command: Subcommand,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args, Debug)]
struct Flags {
    /// Named geometry (interval, flat_disc, curved_cap, product_collar) or a JSON geometry file.
    #[arg(long)]
    geometry: Option<String>,
    #[arg(long)]
    length: Option<f64>,
    #[arg(long, value_enum)]
    bc: Option<BoundaryCondition>,
    #[arg(long)]
    rank: Option<u32>,
    /// Cells of the interval cell structure.
    #[arg(long)]
    cells: Option<usize>,
    /// Eigenvalues per series for `spectrum`.
    #[arg(long)]
    count: Option<usize>,
    /// Absolute and relative quadrature tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long, value_enum)]
    scalar: Option<ScalarMode>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// JSON config file; its keys override the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn resolve(cli: Cli) -> Result<RunConfig, RunError> {
    let f = cli.flags;
    let mut config = RunConfig { subcommand: cli.command, geometry: f.geometry, output: f.output, ..RunConfig::default() };
    if let Some(v) = f.length {
        config.length = v;
    }
    if let Some(v) = f.bc {
        config.boundary_condition = v;
    }
    if let Some(v) = f.rank {
        config.rank = v;
    }
    if let Some(v) = f.cells {
        config.cells = v;
    }
    if let Some(v) = f.count {
        config.spectrum_count = v;
    }
    if let Some(v) = f.tolerance {
        config.quadrature.abs_tol = v;
        config.quadrature.rel_tol = v;
    }
    if let Some(v) = f.scalar {
        config.scalar_mode = v;
    }
    if let Some(v) = f.seed {
        config.seed = v;
    }
    if let Some(path) = f.config {
        let text = std::fs::read_to_string(&path).map_err(|e| RunError::Input(format!("{}: {e}", path.display())))?;
        config = config.merged_with(&text)?;
    }
    Ok(config)
}

fn set_workers() -> Result<(), RunError> {
    let Ok(value) = std::env::var("TORSION_LAB_WORKERS") else { return Ok(()) };
    let n: usize = value.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| RunError::Input(format!("TORSION_LAB_WORKERS={value}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| RunError::Input(e.to_string()))
}

fn execute(cli: Cli) -> Result<i32, RunError> {
    set_workers()?;
    let config = resolve(cli)?;
    let outcome = run(&config)?;
    let json = serde_json::to_string_pretty(&outcome.report).expect("serializable") + "\n";
    match (&config.output, &outcome.text) {
        (Some(path), text) => {
            std::fs::write(path, json).map_err(|e| RunError::Input(format!("{}: {e}", path.display())))?;
            if let Some(t) = text {
                print!("{t}");
            }
        }
        (None, Some(t)) if config.subcommand == Subcommand::Spectrum => print!("{t}"),
        (None, Some(t)) => {
            print!("{t}");
            print!("{json}");
        }
        (None, None) => print!("{json}"),
    }
    for f in &outcome.failures {
        eprintln!("tolerance failure: {f}");
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
