//! `eval`: scores sampled surfaces against references and writes the JSON
//! report plus a gnuplot-ready per-sample table.

use crate::config::RunConfig;
use crate::errors::CliError;
use crate::fsio::{list_txt, write_atomic};
use mmflow::geom3d::kabsch_rmsd;
use mmflow::metrics::{chamfer, normal_consistency, voxel_iou, MetricReport};
use mmflow::surface::io::read_surface;
use mmflow::surface::SurfacePoint;
use nalgebra::Vector3;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let out = super::out_dir(cfg)?;
    let samples = super::require_path(&cfg.samples, "samples=PATH")?;
    let reference = super::require_path(&cfg.reference, "reference=PATH")?;
    let pairs = pair_files(samples, reference)?;

    let mut rows = Vec::with_capacity(pairs.len());
    let mut dat = String::from("# idx chamfer nc iou rmsd aar\n");
    for (i, (sp, rp)) in pairs.iter().enumerate() {
        let pred = read_surface(sp)?;
        let gt = read_surface(rp)?;
        let row = score_pair(&pred, &gt, cfg.spacing)
            .map_err(|e| amend(e, sp))?;
        let _ = writeln!(
            dat,
            "{i} {} {} {} {} {}",
            row.chamfer, row.nc, row.iou, row.rmsd, row.aar
        );
        rows.push(row);
    }

    let n = rows.len() as f64;
    let report = MetricReport {
        chamfer: rows.iter().map(|r| r.chamfer).sum::<f64>() / n,
        nc: rows.iter().map(|r| r.nc).sum::<f64>() / n,
        iou: rows.iter().map(|r| r.iou).sum::<f64>() / n,
        rmsd: rows.iter().map(|r| r.rmsd).sum::<f64>() / n,
        aar: rows.iter().map(|r| r.aar).sum::<f64>() / n,
    };
    write_atomic(&out.join("report.json"), report.to_json().as_bytes())?;
    write_atomic(&out.join("metrics.dat"), dat.as_bytes())?;
    super::write_echo(cfg, &out)
}

fn amend(e: CliError, path: &Path) -> CliError {
    match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
        CliError::Numeric(m) => CliError::Numeric(format!("{}: {m}", path.display())),
    }
}

fn score_pair(
    pred: &[SurfacePoint],
    gt: &[SurfacePoint],
    spacing: f64,
) -> Result<MetricReport, CliError> {
    let pp: Vec<Vector3<f64>> = pred.iter().map(|p| p.pos).collect();
    let gp: Vec<Vector3<f64>> = gt.iter().map(|p| p.pos).collect();
    let pt: Vec<usize> = pred.iter().map(|p| p.upsilon.index()).collect();
    let gt_t: Vec<usize> = gt.iter().map(|p| p.upsilon.index()).collect();
    Ok(MetricReport {
        chamfer: chamfer(&pp, &gp)?,
        nc: normal_consistency(pred, gt)?,
        iou: voxel_iou(&pp, &gp, spacing)?,
        rmsd: kabsch_rmsd(&pp, &gp).map_err(|e| CliError::Data(e.to_string()))?.0,
        aar: mmflow::metrics::aar(&pt, &gt_t)?,
    })
}

/// Resolves the sample/reference arguments into scored pairs: two files
/// form one pair, two directories are matched by file name.
fn pair_files(samples: &Path, reference: &Path) -> Result<Vec<(PathBuf, PathBuf)>, CliError> {
    if samples.is_file() && reference.is_file() {
        return Ok(vec![(samples.to_path_buf(), reference.to_path_buf())]);
    }
    if samples.is_dir() && reference.is_dir() {
        let files = list_txt(samples)?;
        if files.is_empty() {
            return Err(CliError::Data(format!("{}: no .txt files", samples.display())));
        }
        let mut pairs = Vec::with_capacity(files.len());
        for s in files {
            let name = s.file_name().expect("listing returned files").to_owned();
            let r = reference.join(&name);
            if !r.is_file() {
                return Err(CliError::Data(format!("missing reference {}", r.display())));
            }
            pairs.push((s, r));
        }
        return Ok(pairs);
    }
    for p in [samples, reference] {
        if !p.exists() {
            return Err(CliError::Data(format!("{}: no such file or directory", p.display())));
        }
    }
    Err(CliError::Config(
        "samples and reference must both be files or both be directories".into(),
    ))
}
