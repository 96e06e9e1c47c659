//! `surface`: runs the molecular surface sampler standalone on an atom file.

use crate::config::RunConfig;
use crate::errors::CliError;
use crate::fsio::write_atomic;
use mmflow::rng::substream;
use mmflow::surface::build_surface;
use mmflow::surface::io::{format_surface, read_atoms};

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let out = super::out_dir(cfg)?;
    let data = super::require_path(&cfg.data, "data=PATH (an atom file)")?;
    let atoms = read_atoms(data)?;
    let mut rng = substream(cfg.seed, "synth");
    let points = build_surface(&atoms, cfg.probe, cfg.surface_points, &mut rng)?;
    write_atomic(&out.join("surface.txt"), format_surface(&points).as_bytes())?;
    super::write_echo(cfg, &out)
}
