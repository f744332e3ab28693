use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wkb_cli::config::{check_epsilons, parse_config, parse_f64_list, ConfigError, ConfigIssue};
use wkb_cli::{execute, CliError, Command, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "wkb", version, about = "Semiclassical WKB hierarchy solvers on periodic boxes")]
struct Cli {
    /// Configuration file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed of the built-in data and the property suite.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the sweep (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Replaces the epsilon list, e.g. "0.5, 0.25, 0.125".
    #[arg(long, global = true)]
    epsilon_override: Option<String>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Sub {
    /// Single integration with diagnostics and final snapshots.
    Run,
    /// Epsilon sweep with rate fits.
    Sweep,
    /// Picard iteration certificate.
    Picard,
    /// Property suite of the norms and the product estimate.
    CheckSpaces,
    /// Density and momentum from a snapshot or a Grenier run.
    Observables,
    /// Resolved parameters, selected M and horizon.
    Info,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Run => Command::Run,
            Sub::Sweep => Command::Sweep,
            Sub::Picard => Command::Picard,
            Sub::CheckSpaces => Command::CheckSpaces,
            Sub::Observables => Command::Observables,
            Sub::Info => Command::Info,
        }
    }
}

fn override_issue(key: &str, message: String) -> CliError {
    CliError::Config(ConfigError(vec![ConfigIssue {
        line: None,
        key: Some(key.into()),
        message,
    }]))
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
                path: path.clone(),
                message: e.to_string(),
            })?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        cfg.jobs = jobs;
    }
    if let Some(list) = &cli.epsilon_override {
        let eps = parse_f64_list(list).map_err(|e| override_issue("--epsilon-override", e))?;
        check_epsilons(&eps).map_err(|e| override_issue("--epsilon-override", e))?;
        cfg.epsilons = eps;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("WKB_LOG", "warn")).init();
    let cli = Cli::parse();
    let command = Command::from(cli.command);
    let result = load(&cli).and_then(|cfg| execute(command, &cfg));
    match result {
        Ok(outcome) => {
            // A closed stdout (e.g. piped into `head`) is not an error of the run.
            let mut out = std::io::stdout().lock();
            for (k, v) in &outcome.summary {
                let _ = writeln!(out, "{k} = {v}");
            }
            for path in &outcome.artifacts {
                let _ = writeln!(out, "wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.machine_line());
            ExitCode::FAILURE
        }
    }
}
