use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sinkbridge::cli::{exit_code, execute, Command, ExperimentConfig, RunOptions, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "sinkbridge", version, about = "Sinkhorn, Schrodinger bridges and Riccati flows")]
struct Cli {
    #[command(subcommand)]
    command: Option<Sub>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Experiment config (JSON); defaults to the built-in config for the subcommand
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path prefix
    #[arg(long, global = true)]
    out: Option<String>,
    /// Overrides the config seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run only criteria whose name contains NAME (verify)
    #[arg(long, global = true, value_name = "NAME")]
    filter: Option<String>,
    /// Print the machine-readable summary (verify)
    #[arg(long, global = true)]
    json: bool,
    /// Override one tolerance; repeatable
    #[arg(long = "tol-override", global = true, value_name = "KEY=VAL")]
    tol_override: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Iterate the Riccati map and compare with its decay envelope
    Riccati,
    /// Closed-form bridge, Sinkhorn trace, small-noise limit and proximal sampler
    Gaussian,
    /// Log-domain Sinkhorn on a grid with entropy diagnostics
    Discrete,
    /// Contraction constants and envelope checks
    Bounds,
    /// Run the acceptance suite
    Verify,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Riccati => Command::Riccati,
            Sub::Gaussian => Command::Gaussian,
            Sub::Discrete => Command::Discrete,
            Sub::Bounds => Command::Bounds,
            Sub::Verify => Command::Verify,
        }
    }
}

fn configure_threads() -> Result<(), String> {
    if let Ok(v) = std::env::var("SINKBRIDGE_THREADS") {
        let n: usize = v.parse().map_err(|_| format!("SINKBRIDGE_THREADS must be a positive integer, got {v:?}"))?;
        if n == 0 {
            return Err("SINKBRIDGE_THREADS must be at least 1".into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_USAGE as u8);
    }
    let c = &cli.common;
    let cfg = match (&c.config, cli.command) {
        (Some(path), sub) => match ExperimentConfig::load(path) {
            Ok(cfg) => match sub {
                Some(s) if Command::from(s) != cfg.command => {
                    eprintln!("error: config is for {:?} but subcommand is {:?}", cfg.command.name(), Command::from(s).name());
                    return ExitCode::from(EXIT_USAGE as u8);
                }
                _ => cfg,
            },
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(exit_code(&e) as u8);
            }
        },
        (None, Some(s)) => ExperimentConfig::embedded(s.into()),
        (None, None) => {
            eprintln!("error: give a subcommand or --config PATH (see --help)");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    let opts = RunOptions {
        out: c.out.clone(),
        seed: c.seed,
        filter: c.filter.clone(),
        json: c.json,
        tol_overrides: c.tol_override.clone(),
        base_dir: c.config.as_ref().and_then(|p| p.parent().map(|d| d.to_path_buf())),
    };
    match execute(&cfg, &opts) {
        Ok(out) => {
            print!("{}", out.stdout);
            for f in &out.files {
                eprintln!("wrote {}", f.display());
            }
            ExitCode::from(out.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
