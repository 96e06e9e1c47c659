//! Subcommand implementations.

pub mod eval;
pub mod sample;
pub mod surface_cmd;
pub mod synth;
pub mod train;

use crate::config::{Flow, RunConfig};
use crate::errors::CliError;
use crate::fsio::{ensure_dir, write_atomic};
use mmflow::nn::ConditionLabel;
use std::path::{Path, PathBuf};

/// Categorical state space actually in effect: the joint flow's chemistry
/// channel is pinned to donor/acceptor/neutral plus mask, so `states` only
/// applies to the standalone categorical flow.
pub fn effective_states(cfg: &RunConfig) -> usize {
    if cfg.flow == Flow::Joint {
        mmflow::nn::loss::CAT_STATE_SPACE
    } else {
        cfg.states
    }
}

pub fn out_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = PathBuf::from(&cfg.out);
    ensure_dir(&dir)?;
    Ok(dir)
}

pub fn write_echo(cfg: &RunConfig, dir: &Path) -> Result<(), CliError> {
    write_atomic(&dir.join("config.echo"), cfg.echo().as_bytes())
}

pub fn label_from_index(i: usize) -> ConditionLabel {
    match i {
        0 => ConditionLabel::Null,
        1 => ConditionLabel::Cyclic,
        _ => ConditionLabel::Disulfide,
    }
}

pub fn require_path<'a>(value: &'a str, what: &str) -> Result<&'a Path, CliError> {
    if value.is_empty() {
        return Err(CliError::Config(format!("this command requires {what}")));
    }
    Ok(Path::new(value))
}
