//! `mmflow`: toy-scale multi-modality flow matching pipeline.
//!
//! Subcommands cover the whole loop: `synth` writes toy datasets, `train`
//! fits a flow family, `sample` integrates it from the prior, `eval` scores
//! samples against references, and `surface` runs the molecular surface
//! sampler standalone. Exit codes: 0 success, 2 config error, 3 data error,
//! 4 numeric failure.

mod commands;
mod config;
mod dataset;
mod errors;
mod fsio;

use clap::{Args, Parser, Subcommand};
use config::RunConfig;
use errors::CliError;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "mmflow", version, about = "Multi-modality flow matching: toy synthesis, training, sampling, evaluation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the toy datasets
    Synth(CommonArgs),
    /// Train the selected flow family on a synth dataset
    Train(CommonArgs),
    /// Integrate the learned field from the prior
    Sample(CommonArgs),
    /// Score sampled surfaces against references
    Eval(CommonArgs),
    /// Run the molecular surface sampler standalone
    Surface(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key=value config file
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed for all random sub-streams
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: Option<String>,
    /// Flow family: pos|so3|torus|cat|con|joint
    #[arg(long)]
    flow: Option<String>,
    /// Euler integration steps
    #[arg(long, value_name = "N")]
    steps: Option<usize>,
    /// Write trajectory frames at these times (bare flag: every step)
    #[arg(long, num_args = 0..=1, default_missing_value = "all", value_name = "T0,T1,...")]
    trajectory: Option<String>,
    /// Classifier-free guidance strength
    #[arg(long, value_name = "W")]
    guidance: Option<f64>,
    /// Condition label: null|cyclic|disulfide
    #[arg(long)]
    condition: Option<String>,
    /// Additional config overrides
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn build_config(a: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(p) = &a.config {
        cfg.apply_file(p)?;
    }
    for kv in &a.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| {
            CliError::Config(format!("--set expects KEY=VALUE, found `{kv}`"))
        })?;
        cfg.apply(k.trim(), v.trim())?;
    }
    if let Some(s) = a.seed {
        cfg.apply("seed", &s.to_string())?;
    }
    if let Some(o) = &a.out {
        cfg.apply("out", o)?;
    }
    if let Some(f) = &a.flow {
        cfg.apply("flow", f)?;
    }
    if let Some(n) = a.steps {
        cfg.apply("steps", &n.to_string())?;
    }
    if let Some(t) = &a.trajectory {
        cfg.apply("trajectory", t)?;
    }
    if let Some(w) = a.guidance {
        cfg.apply("guidance", &w.to_string())?;
    }
    if let Some(c) = &a.condition {
        cfg.apply("condition", c)?;
    }
    Ok(cfg)
}

fn main() {
    let cli = Cli::parse();
    let (args, run): (&CommonArgs, fn(&RunConfig) -> Result<(), CliError>) = match &cli.cmd {
        Cmd::Synth(a) => (a, commands::synth::run),
        Cmd::Train(a) => (a, commands::train::run),
        Cmd::Sample(a) => (a, commands::sample::run),
        Cmd::Eval(a) => (a, commands::eval::run),
        Cmd::Surface(a) => (a, commands::surface_cmd::run),
    };
    match build_config(args).and_then(|cfg| run(&cfg)) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("mmflow: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
