use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cnt_bie::config::RunConfig;
use cnt_bie::pipeline::{cmd_field, cmd_gen, cmd_run, cmd_solve, RunPaths};
use cnt_bie::Error;

/// Steady heat conduction in a square ring with thin superconducting inclusions.
#[derive(Debug, Parser)]
#[command(name = "cnt-bie", version)]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,

    /// Override one configuration key, e.g. `--set gmres.maxit=50`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Place inclusions and write the geometry file.
    Gen {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve on a geometry file and write the solution file and a report.
    Solve {
        #[arg(long)]
        geometry: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Sample, render and check a stored solution.
    Field {
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Generate, solve and sample in one go.
    Run,
    /// Print the resolved configuration and its hash.
    Config,
}

const EXIT_VALIDATION: u8 = 3;
const EXIT_CAPACITY: u8 = 4;
const EXIT_CONVERGENCE: u8 = 5;
const EXIT_IO: u8 = 6;

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Capacity { .. } => EXIT_CAPACITY,
        Error::Convergence { .. } => EXIT_CONVERGENCE,
        Error::Io { .. } => EXIT_IO,
        Error::InvalidInput(_)
        | Error::Dimension { .. }
        | Error::Geometry(_)
        | Error::Validation(_) => EXIT_VALIDATION,
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    match &cli.config {
        Some(path) => RunConfig::load(path, &cli.overrides),
        None => RunConfig::from_toml_str("", &cli.overrides),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let cfg = load_config(&cli)?;
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    }
    let paths = RunPaths::in_dir(&cfg.outputs.dir);
    match cli.command {
        Command::Gen { out } => {
            let out = out.unwrap_or(paths.geometry);
            let layout = cmd_gen(&cfg, &out)?;
            println!("wrote {} ({} inclusions)", out.display(), layout.m());
        }
        Command::Solve {
            geometry,
            out,
            report,
        } => {
            let out = out.unwrap_or(paths.solution);
            let report = report.unwrap_or(paths.solve_report);
            let solved = cmd_solve(
                &cfg,
                &geometry.unwrap_or(paths.geometry),
                &out,
                &report,
            )?;
            print!("{}", solved.report);
            println!("wrote {} and {}", out.display(), report.display());
        }
        Command::Field { solution, out_dir } => {
            let out_dir = out_dir.unwrap_or_else(|| cfg.outputs.dir.clone());
            let field = cmd_field(&cfg, &solution.unwrap_or(paths.solution), &out_dir)?;
            print!("{}", field.report.to_text());
            for f in &field.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Run => {
            let (solved, field) = cmd_run(&cfg)?;
            print!("{}", solved.report);
            print!("{}", field.report.to_text());
        }
        Command::Config => {
            println!("# config_hash {}", cfg.hash());
            print!("{}", cfg.to_toml_string());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
