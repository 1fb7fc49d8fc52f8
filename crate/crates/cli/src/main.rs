use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use spinaht_cli::{config, presets, runner, RunError};

/// Batch simulator for dipolar decoupling and selective recoupling studies.
#[derive(Parser)]
#[command(name = "spinaht", version, about)]
struct Cli {
    /// Size of the worker thread pool (defaults to the core count).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override the configured base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and execute a run configuration.
    Run {
        /// Path to the JSON configuration.
        config: PathBuf,
        /// Output directory (overrides config and SPINAHT_OUTDIR).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a configuration and report diagnostics without running.
    Validate { config: PathBuf },
    /// Run a named built-in configuration (fig2, table1, recouple3,
    /// mrev16-offsets).
    Preset {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the preset configuration instead of running it.
        #[arg(long)]
        show: bool,
    },
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

fn load_config(path: &PathBuf) -> Result<config::RunConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("warning: could not size thread pool: {e}");
        }
    }

    match cli.command {
        Command::Validate { config: path } => match load_config(&path) {
            Err(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(EXIT_VALIDATION)
            }
            Ok(cfg) => {
                let diags = config::validate(&cfg);
                if diags.is_empty() {
                    println!("ok");
                    ExitCode::SUCCESS
                } else {
                    for d in &diags {
                        eprintln!("{d}");
                    }
                    ExitCode::from(EXIT_VALIDATION)
                }
            }
        },
        Command::Run { config: path, out } => match load_config(&path) {
            Err(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(EXIT_VALIDATION)
            }
            Ok(cfg) => execute(&cfg, out, cli.seed),
        },
        Command::Preset { name, out, show } => match presets::preset_text(&name) {
            None => {
                eprintln!(
                    "error: unknown preset {name:?}; available: {}",
                    presets::PRESET_NAMES.join(", ")
                );
                ExitCode::from(EXIT_VALIDATION)
            }
            Some(text) => {
                if show {
                    println!("{text}");
                    return ExitCode::SUCCESS;
                }
                let cfg = presets::preset(&name).expect("preset parses");
                execute(&cfg, out, cli.seed)
            }
        },
    }
}

fn execute(cfg: &config::RunConfig, out: Option<PathBuf>, seed: Option<u64>) -> ExitCode {
    match runner::run(cfg, out.as_deref(), seed) {
        Ok(summary) => {
            for p in &summary.outputs {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(RunError::Validation(diags)) => {
            for d in &diags {
                eprintln!("{d}");
            }
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
