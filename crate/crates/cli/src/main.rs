//! `mnv`: scattering transforms, mNV evolution, residual reports, the
//! symbolic derivation and a verification suite.
//!
//! Exit codes: 0 success, 1 a check or threshold failed, 2 solver
//! non-convergence, 3 I/O or malformed file, 4 derivation mismatch, 64 bad
//! usage or arguments.

mod commands;
mod config;
mod potential;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_method, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "mnv", version, about = "DS II scattering transforms and the mNV equation")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every subcommand; they override the config file.
#[derive(Debug, Args)]
struct Common {
    /// `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Half width of the z-grid.
    #[arg(long = "z-l", global = true)]
    z_l: Option<f64>,
    /// Points per side of the z-grid.
    #[arg(long = "z-n", global = true)]
    z_n: Option<usize>,
    /// Half width of the k-grid.
    #[arg(long = "k-l", global = true)]
    k_l: Option<f64>,
    /// Points per side of the k-grid.
    #[arg(long = "k-n", global = true)]
    k_n: Option<usize>,
    /// Relative residual target of each solve.
    #[arg(long = "solver-tol", global = true)]
    solver_tol: Option<f64>,
    #[arg(long = "max-iterations", global = true)]
    max_iterations: Option<usize>,
    /// `born` or `krylov`.
    #[arg(long, global = true)]
    method: Option<String>,
    /// Comma-separated output formats: `bin`, `csv`.
    #[arg(long, global = true)]
    formats: Option<String>,
}

/// Where the input field comes from.
#[derive(Debug, Args, Clone)]
pub struct Source {
    /// Field file in the binary format.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Built-in potential, e.g. `gaussian:0.3,1,0` or `gauss2:...`.
    #[arg(long)]
    pub potential: Option<String>,
    /// Shorthand for `gaussian:A,1,0`.
    #[arg(long)]
    pub amplitude: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Direct (`--direct`) or inverse (`--inverse`) scattering transform.
    Transform(commands::TransformArgs),
    /// `u(t) = I(e^{itφ} R(u₀))`.
    Evolve(commands::EvolveArgs),
    /// Residual of the mNV equation along the evolved solution.
    Residual(commands::ResidualArgs),
    /// Large-k coefficients, brackets and the equation of motion.
    Derive(commands::DeriveArgs),
    /// Property checks with measured values.
    Verify(commands::VerifyArgs),
}

fn build_config(common: &Common, base: RunConfig) -> anyhow::Result<RunConfig> {
    let mut cfg = base;
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path)?;
        cfg.apply_pairs(&config::parse_pairs(&text)?)?;
    }
    if let Some(v) = common.z_l {
        cfg.z_l = v;
    }
    if let Some(v) = common.z_n {
        cfg.z_n = v;
    }
    if let Some(v) = common.k_l {
        cfg.k_l = v;
    }
    if let Some(v) = common.k_n {
        cfg.k_n = v;
    }
    if let Some(v) = common.solver_tol {
        cfg.tolerance = v;
    }
    if let Some(v) = common.max_iterations {
        cfg.max_iterations = v;
    }
    if let Some(v) = &common.method {
        cfg.method = parse_method(v)?;
    }
    if let Some(v) = &common.formats {
        let mut pairs = std::collections::BTreeMap::new();
        pairs.insert("formats".to_string(), v.clone());
        cfg.apply_pairs(&pairs)?;
    }
    if let Some(v) = &common.out {
        cfg.out = v.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    if let Some(n) = cli.common.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    let base = match cli.command {
        Command::Verify(_) => commands::verify_defaults(),
        _ => RunConfig::default(),
    };
    let cfg = build_config(&cli.common, base)?;
    match cli.command {
        Command::Transform(a) => commands::transform(cfg, a),
        Command::Evolve(a) => commands::evolve(cfg, a),
        Command::Residual(a) => commands::residual(cfg, a),
        Command::Derive(a) => commands::derive(cfg, a),
        Command::Verify(a) => commands::verify(cfg, a),
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(core) = cause.downcast_ref::<mnv_core::Error>() {
            return match core {
                mnv_core::Error::NonConvergence { .. } => 2,
                mnv_core::Error::Io(_) | mnv_core::Error::Format(_) => 3,
                mnv_core::Error::Derivation(_) => 4,
                _ => 64,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 3;
        }
    }
    64
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(64) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
