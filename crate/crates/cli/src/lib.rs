//! Command-line driver: phantoms, forward projection, inversion, escape
//! sweeps, flat atlases and reduction, each configured by a TOML file.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod phantoms;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "nilxray", version, about = "Geodesic X-ray transforms on 2-step nilpotent groups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML configuration; every section is optional.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output file; defaults to a per-command name in the working directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads (default 1). Results do not depend on this.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Overrides the principal tolerance of the command.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Write a phantom descriptor.
    Phantom,
    /// Sample the X-ray transform of a planar phantom on a (θ, p) grid.
    Forward,
    /// Reconstruct a planar field from a sinogram.
    Invert,
    /// Check the escape bound on random and constructed geodesics of N_q.
    Escape,
    /// Find totally geodesic flats through given tangent vectors.
    Flats,
    /// Reconstruct a field on a group by restriction to flats.
    Reduce,
    /// Summarise reconstruction reports and escape sweeps.
    Report,
}

impl Command {
    pub fn default_output(self) -> &'static str {
        match self {
            Command::Phantom => "phantom.json",
            Command::Forward => "sinogram.csv",
            Command::Invert => "reconstruction.json",
            Command::Escape => "escape.csv",
            Command::Flats => "atlas.json",
            Command::Reduce => "reduction.json",
            Command::Report => "report.json",
        }
    }
}

/// Runs a command and returns the path written.
pub fn run(cli: &Cli) -> CliResult<PathBuf> {
    let mut config = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    if cli.tol.is_some() {
        config.tol = cli.tol;
    }
    if cli.workers.is_some() {
        config.workers = cli.workers;
    }
    if cli.out.is_some() {
        config.out = cli.out.clone();
    }
    config.validate()?;
    let out = config
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(cli.command.default_output()));
    let ctx = Context {
        seed: config.seed.unwrap_or(0),
        out: out.clone(),
        config,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.config.workers.unwrap_or(1))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Phantom => commands::cmd_phantom(&ctx),
        Command::Forward => commands::cmd_forward(&ctx),
        Command::Invert => commands::cmd_invert(&ctx),
        Command::Escape => commands::cmd_escape(&ctx),
        Command::Flats => commands::cmd_flats(&ctx),
        Command::Reduce => commands::cmd_reduce(&ctx),
        Command::Report => commands::cmd_report(&ctx),
    })?;
    Ok(out)
}
