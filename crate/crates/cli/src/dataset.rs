//! Typed readers for the dataset files produced by `synth`.

use crate::errors::CliError;
use crate::fsio::read_table;
use mmflow::geom3d::Rotation;
use nalgebra::Matrix3;
use ndarray::Array1;
use std::path::Path;

/// Planar or spatial positions with per-row condition labels. Two-column
/// files are lifted into the `z = 0` plane with the null label; an optional
/// third column carries the condition index (0 null, 1 cyclic, 2 disulfide).
pub struct PosDataset {
    pub points: Vec<Array1<f64>>,
    pub labels: Vec<usize>,
}

pub fn load_pos(path: &Path) -> Result<PosDataset, CliError> {
    let rows = match read_table(path, 2) {
        Ok(r) => r,
        Err(_) => read_table(path, 3)?,
    };
    if rows.is_empty() {
        return Err(CliError::Data(format!("{}: empty dataset", path.display())));
    }
    let mut points = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        points.push(Array1::from(vec![row[0], row[1], 0.0]));
        let lab = if row.len() == 3 { row[2] } else { 0.0 };
        if lab.fract() != 0.0 || !(0.0..3.0).contains(&lab) {
            return Err(CliError::Data(format!(
                "{}: row {}: condition label {lab} outside 0..3",
                path.display(),
                i + 1
            )));
        }
        labels.push(lab as usize);
    }
    Ok(PosDataset { points, labels })
}

pub fn load_rotations(path: &Path) -> Result<Vec<Rotation>, CliError> {
    let rows = read_table(path, 9)?;
    if rows.is_empty() {
        return Err(CliError::Data(format!("{}: empty dataset", path.display())));
    }
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let m = Matrix3::new(r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8]);
            Rotation::from_matrix(m).map_err(|e| {
                CliError::Data(format!("{}: row {}: {e}", path.display(), i + 1))
            })
        })
        .collect()
}

pub fn load_angles(path: &Path) -> Result<Vec<[f64; 4]>, CliError> {
    let rows = read_table(path, 4)?;
    if rows.is_empty() {
        return Err(CliError::Data(format!("{}: empty dataset", path.display())));
    }
    Ok(rows.iter().map(|r| [r[0], r[1], r[2], r[3]]).collect())
}

/// Categorical symbols, each below the data-symbol count `states - 1`.
pub fn load_symbols(path: &Path, states: usize) -> Result<Vec<usize>, CliError> {
    let rows = read_table(path, 1)?;
    if rows.is_empty() {
        return Err(CliError::Data(format!("{}: empty dataset", path.display())));
    }
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let v = r[0];
            if v.fract() != 0.0 || v < 0.0 || v >= (states - 1) as f64 {
                return Err(CliError::Data(format!(
                    "{}: row {}: symbol {v} outside 0..{}",
                    path.display(),
                    i + 1,
                    states - 1
                )));
            }
            Ok(v as usize)
        })
        .collect()
}

pub fn load_pairs(path: &Path) -> Result<Vec<Array1<f64>>, CliError> {
    let rows = read_table(path, 2)?;
    if rows.is_empty() {
        return Err(CliError::Data(format!("{}: empty dataset", path.display())));
    }
    Ok(rows.iter().map(|r| Array1::from(r.clone())).collect())
}

/// Flattens a rotation matrix in row-major order, the on-disk and network
/// input convention.
pub fn rotation_row_major(r: &Rotation) -> [f64; 9] {
    let m = r.matrix();
    [
        m[(0, 0)],
        m[(0, 1)],
        m[(0, 2)],
        m[(1, 0)],
        m[(1, 1)],
        m[(1, 2)],
        m[(2, 0)],
        m[(2, 1)],
        m[(2, 2)],
    ]
}
