//! `synth`: writes the toy datasets every other command consumes.

use crate::config::RunConfig;
use crate::dataset::rotation_row_major;
use crate::errors::CliError;
use crate::fsio::{format_table, write_atomic};
use mmflow::rng::substream;
use mmflow::surface::io::format_atoms;
use mmflow::toy;

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let out = super::out_dir(cfg)?;
    let mut rng = substream(cfg.seed, "synth");

    let rows: Vec<Vec<f64>> = (0..cfg.n_samples)
        .map(|_| {
            let (x, y) = toy::eight_gaussian_sample(cfg.ring_radius, cfg.ring_sigma, &mut rng);
            vec![x, y]
        })
        .collect();
    write_atomic(&out.join("gauss2d.txt"), format_table("x y", &rows).as_bytes())?;

    let rows: Vec<Vec<f64>> = (0..cfg.n_samples)
        .map(|_| rotation_row_major(&toy::so3_target_sample(cfg.spread, &mut rng)).to_vec())
        .collect();
    write_atomic(
        &out.join("so3.txt"),
        format_table("rotation matrix, row-major", &rows).as_bytes(),
    )?;

    let rows: Vec<Vec<f64>> =
        (0..cfg.n_samples).map(|_| vec![toy::multinomial_sample(&mut rng) as f64]).collect();
    write_atomic(&out.join("cat.txt"), format_table("symbol", &rows).as_bytes())?;

    let rows: Vec<Vec<f64>> = (0..cfg.n_samples)
        .map(|_| toy::torus_sample(cfg.spread, &mut rng).to_vec())
        .collect();
    write_atomic(
        &out.join("torus.txt"),
        format_table("chi1 chi2 chi3 chi4", &rows).as_bytes(),
    )?;

    let rows: Vec<Vec<f64>> =
        (0..cfg.n_samples).map(|_| toy::con_sample(cfg.spread, &mut rng).to_vec()).collect();
    write_atomic(&out.join("con.txt"), format_table("tau0 tau1", &rows).as_bytes())?;

    let atoms = toy::synth_atoms(cfg.n_residues, &mut rng);
    write_atomic(&out.join("atoms.txt"), format_atoms(&atoms).as_bytes())?;

    let rows: Vec<Vec<f64>> = (0..cfg.n_samples)
        .map(|i| {
            let right = i % 2 == 1;
            let (x, y) = toy::two_cluster_sample(right, &mut rng);
            vec![x, y, if right { 2.0 } else { 1.0 }]
        })
        .collect();
    write_atomic(
        &out.join("two_cluster.txt"),
        format_table("x y condition", &rows).as_bytes(),
    )?;

    super::write_echo(cfg, &out)
}
