//! Line-oriented text formats for atoms and surface points.
//!
//! Atom files carry one atom per line:
//! `element x y z vdw residue_index residue_type is_calpha charge`.
//! Surface files carry one point per line:
//! `x y z nx ny nz tau0 tau1 upsilon` with upsilon one of `D`, `A`, `N`.
//! Full-line `#` comments and blank lines are skipped in both.

use super::{Atom, Element, FephLabel, SurfaceError, SurfacePoint};
use nalgebra::Vector3;
use std::fmt::Write as _;
use std::path::Path;

fn io_err(path: &Path, source: std::io::Error) -> SurfaceError {
    SurfaceError::Io { path: path.display().to_string(), source }
}

fn fmt_err(path: &Path, line: usize, msg: impl Into<String>) -> SurfaceError {
    SurfaceError::Format { path: path.display().to_string(), line, msg: msg.into() }
}

fn parse_f64(path: &Path, line: usize, field: &str, s: &str) -> Result<f64, SurfaceError> {
    s.parse::<f64>()
        .map_err(|_| fmt_err(path, line, format!("bad {field} value {s:?}")))
}

fn parse_usize(path: &Path, line: usize, field: &str, s: &str) -> Result<usize, SurfaceError> {
    s.parse::<usize>()
        .map_err(|_| fmt_err(path, line, format!("bad {field} value {s:?}")))
}

/// Lines worth parsing: trimmed content with 1-based line numbers, comments
/// and blanks removed.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_atoms(text: &str, path: &Path) -> Result<Vec<Atom>, SurfaceError> {
    let mut atoms = Vec::new();
    for (line, l) in data_lines(text) {
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 9 {
            return Err(fmt_err(path, line, format!("expected 9 fields, got {}", f.len())));
        }
        let element = Element::parse(f[0])
            .ok_or_else(|| fmt_err(path, line, format!("unknown element {:?}", f[0])))?;
        let pos = Vector3::new(
            parse_f64(path, line, "x", f[1])?,
            parse_f64(path, line, "y", f[2])?,
            parse_f64(path, line, "z", f[3])?,
        );
        let vdw_radius = parse_f64(path, line, "vdw", f[4])?;
        if vdw_radius <= 0.0 {
            return Err(fmt_err(path, line, format!("vdw radius must be positive, got {vdw_radius}")));
        }
        let residue_index = parse_usize(path, line, "residue_index", f[5])?;
        let residue_type = parse_usize(path, line, "residue_type", f[6])?;
        if residue_type >= 20 {
            return Err(fmt_err(path, line, format!("residue_type {residue_type} out of 0..20")));
        }
        let is_calpha = match f[7] {
            "0" => false,
            "1" => true,
            other => return Err(fmt_err(path, line, format!("is_calpha must be 0 or 1, got {other:?}"))),
        };
        let charge = parse_f64(path, line, "charge", f[8])?;
        atoms.push(Atom { pos, element, vdw_radius, residue_index, residue_type, is_calpha, charge });
    }
    Ok(atoms)
}

pub fn read_atoms(path: &Path) -> Result<Vec<Atom>, SurfaceError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_atoms(&text, path)
}

pub fn format_atoms(atoms: &[Atom]) -> String {
    let mut out = String::from("# element x y z vdw residue_index residue_type is_calpha charge\n");
    for a in atoms {
        writeln!(
            out,
            "{} {} {} {} {} {} {} {} {}",
            a.element.symbol(),
            a.pos.x,
            a.pos.y,
            a.pos.z,
            a.vdw_radius,
            a.residue_index,
            a.residue_type,
            a.is_calpha as u8,
            a.charge
        )
        .unwrap();
    }
    out
}

pub fn write_atoms(path: &Path, atoms: &[Atom]) -> Result<(), SurfaceError> {
    std::fs::write(path, format_atoms(atoms)).map_err(|e| io_err(path, e))
}

pub fn parse_surface(text: &str, path: &Path) -> Result<Vec<SurfacePoint>, SurfaceError> {
    let mut points = Vec::new();
    for (line, l) in data_lines(text) {
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 9 {
            return Err(fmt_err(path, line, format!("expected 9 fields, got {}", f.len())));
        }
        let pos = Vector3::new(
            parse_f64(path, line, "x", f[0])?,
            parse_f64(path, line, "y", f[1])?,
            parse_f64(path, line, "z", f[2])?,
        );
        let normal = Vector3::new(
            parse_f64(path, line, "nx", f[3])?,
            parse_f64(path, line, "ny", f[4])?,
            parse_f64(path, line, "nz", f[5])?,
        );
        let tau = [
            parse_f64(path, line, "tau0", f[6])?,
            parse_f64(path, line, "tau1", f[7])?,
        ];
        let mut chars = f[8].chars();
        let upsilon = match (chars.next(), chars.next()) {
            (Some(c), None) => FephLabel::parse(c)
                .ok_or_else(|| fmt_err(path, line, format!("unknown upsilon code {:?}", f[8])))?,
            _ => return Err(fmt_err(path, line, format!("unknown upsilon code {:?}", f[8]))),
        };
        points.push(SurfacePoint { pos, normal, tau, upsilon });
    }
    Ok(points)
}

pub fn read_surface(path: &Path) -> Result<Vec<SurfacePoint>, SurfaceError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_surface(&text, path)
}

pub fn format_surface(points: &[SurfacePoint]) -> String {
    let mut out = String::from("# x y z nx ny nz tau0 tau1 upsilon\n");
    for p in points {
        writeln!(
            out,
            "{} {} {} {} {} {} {} {} {}",
            p.pos.x,
            p.pos.y,
            p.pos.z,
            p.normal.x,
            p.normal.y,
            p.normal.z,
            p.tau[0],
            p.tau[1],
            p.upsilon.code()
        )
        .unwrap();
    }
    out
}

pub fn write_surface(path: &Path, points: &[SurfacePoint]) -> Result<(), SurfaceError> {
    std::fs::write(path, format_surface(points)).map_err(|e| io_err(path, e))
}
