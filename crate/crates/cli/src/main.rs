use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tfdmagic_cli::{execute, CliError, Format, Mode, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "tfdmagic", version, about = "Stabilizer Renyi entropy of SYK thermofield doubles")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true, env = "TFDMAGIC_CONFIG")]
    config: Option<PathBuf>,

    /// Output directory (overrides `io.out_dir`).
    #[arg(long, global = true, env = "TFDMAGIC_OUT")]
    out: Option<PathBuf>,

    /// Worker threads.
    #[arg(long, global = true, env = "TFDMAGIC_WORKERS", default_value_t = 1)]
    workers: usize,

    /// Disorder seed (overrides `model.seed`).
    #[arg(long, global = true, env = "TFDMAGIC_SEED")]
    seed: Option<u64>,

    /// Table format (overrides `io.format`).
    #[arg(long, global = true, env = "TFDMAGIC_FORMAT", value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Disorder-averaged exact diagonalization curves.
    Ed,
    /// Both saddles of the replica action along a time sweep.
    Saddle,
    /// Slope spectral form factor and the prediction derived from it.
    Sff,
    /// Transition times over several couplings and the boundary fit.
    PhaseDiagram,
    /// Exact identity checks of both engines.
    Verify,
    /// Fit a curve written by an earlier run.
    Fit,
}

impl From<Command> for Mode {
    fn from(c: Command) -> Self {
        match c {
            Command::Ed => Mode::Ed,
            Command::Saddle => Mode::Saddle,
            Command::Sff => Mode::Sff,
            Command::PhaseDiagram => Mode::PhaseDiagram,
            Command::Verify => Mode::Verify,
            Command::Fit => Mode::Fit,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = cli.out {
        cfg.io.out_dir = o;
    }
    if let Some(s) = cli.seed {
        cfg.model.seed = s;
    }
    if let Some(f) = cli.format {
        cfg.io.format = f;
    }
    if cli.workers == 0 {
        return Err(CliError::validation("workers", "--workers must be at least 1"));
    }
    let outcome = execute(cli.command.into(), &cfg, cli.workers)?;
    for f in &outcome.files {
        println!("{}", f.display());
    }
    match outcome.verification_failed {
        Some(msg) => Err(CliError::verification(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "reason": e.reason, "message": e.message });
            eprintln!("error: {line}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
