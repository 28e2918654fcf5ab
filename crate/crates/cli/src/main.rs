//! `lamelab run <subcommand> [config] [out]`
//!
//! Exit codes: 0 success, 2 invalid input (including an unusable output
//! directory), 3 numerical failure (no convergence, eigensolver breakdown,
//! all sweep points resonant).

// `!(x <= bound)` is deliberate throughout: a NaN must fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Config;
use output::Output;

#[derive(Parser)]
#[command(name = "lamelab", version, about = "Batch experiments for the perturbed Lamé operator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its CSV/.dat files and manifest.
    Run {
        /// decompose | operator-check | identities | constants | spectrum | resolvent-sweep
        subcommand: String,
        /// Config file (alternative to --config).
        config_path: Option<PathBuf>,
        /// Output directory (alternative to --out).
        out_dir: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the `seed` key of the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

enum Failure {
    Invalid(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl From<lamelab::Error> for Failure {
    fn from(e: lamelab::Error) -> Self {
        use lamelab::Error::*;
        match e {
            NoConvergence { .. } | Eigensolver(_) | EmptySweep(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

fn pick(positional: Option<PathBuf>, flag: Option<PathBuf>, what: &str) -> Result<PathBuf, Failure> {
    match (positional, flag) {
        (Some(_), Some(_)) => Err(Failure::Invalid(format!("{what} given both positionally and as a flag"))),
        (Some(p), None) | (None, Some(p)) => Ok(p),
        (None, None) => Err(Failure::Invalid(format!("missing {what}"))),
    }
}

fn execute(cmd: Command) -> Result<Vec<String>, Failure> {
    let Command::Run {
        subcommand,
        config_path,
        out_dir,
        config,
        out,
        seed,
        threads,
    } = cmd;
    if !commands::SUBCOMMANDS.contains(&subcommand.as_str()) {
        return Err(Failure::Invalid(format!(
            "unknown subcommand `{subcommand}` (expected one of {})",
            commands::SUBCOMMANDS.join(", ")
        )));
    }
    let config_path = pick(config_path, config, "config path")?;
    let out_dir = pick(out_dir, out, "output directory")?;
    let text = std::fs::read_to_string(&config_path)
        .map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", config_path.display())))?;
    let mut cfg = Config::parse(&text).map_err(Failure::Invalid)?;
    if let Some(s) = seed {
        cfg = cfg.with_seed(s);
    }
    if let Some(t) = threads {
        if t == 0 {
            return Err(Failure::Invalid("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Invalid(e.to_string()))?;
    }
    output::probe_dir(&out_dir)
        .map_err(|e| Failure::Invalid(format!("output directory {} is not writable: {e}", out_dir.display())))?;

    let mut out = Output::default();
    commands::run(&subcommand, &cfg, &mut out)?;
    out.manifest(&subcommand, cfg.seed, &cfg.echo);
    out.write_all(&out_dir)
        .map_err(|e| Failure::Invalid(format!("writing to {} failed: {e}", out_dir.display())))?;
    Ok(out.names().map(|n| out_dir.join(n).display().to_string()).collect())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(files) => {
            for f in files {
                println!("{f}");
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            let (Failure::Invalid(msg) | Failure::Numerical(msg)) = &f;
            eprintln!("lamelab: {msg}");
            ExitCode::from(f.code())
        }
    }
}
