//! Solvent-accessible surface sampling and biochemical featurization.
//!
//! The surface of a molecule is the union of its probe-inflated van der
//! Waals spheres. Points are drawn per atom from a Fibonacci lattice
//! expressed in an equivariant atom-local frame, rejected when they fall
//! inside another atom's inflated sphere, then annotated with hydropathy,
//! capped electrostatics and a donor/acceptor/neutral label taken from the
//! nearest atom.

pub mod io;

use crate::geom3d::{frame_from_normal, GeomError, Rotation};
use crate::spatial::PointIndex;
use nalgebra::Vector3;
use rand::Rng;
use thiserror::Error;

/// Kyte–Doolittle hydropathy values in ARNDCQEGHILKMFPSTWYV residue order.
pub const KYTE_DOOLITTLE: [f64; 20] = [
    1.8, -4.5, -3.5, -3.5, 2.5, -3.5, -3.5, -0.4, -3.2, 4.5, 3.8, -3.9, 1.9, 2.8, -1.6, -0.8,
    -0.7, -0.9, -1.3, 4.2,
];

/// One-letter residue codes matching [`KYTE_DOOLITTLE`] order.
pub const RESIDUE_CODES: [char; 20] = [
    'A', 'R', 'N', 'D', 'C', 'Q', 'E', 'G', 'H', 'I', 'L', 'K', 'M', 'F', 'P', 'S', 'T', 'W',
    'Y', 'V',
];

/// Hydropathy normalizer: the scale's extreme magnitude.
pub const HYDROPATHY_NORM: f64 = 4.5;

/// Electrostatic potential cap before normalization.
pub const CHARGE_CAP: f64 = 30.0;

/// A hydrogen counts as polar when its nearest heavy atom within this
/// distance is nitrogen or oxygen (a proxy for its bonding partner).
pub const POLAR_H_BOND_RADIUS: f64 = 1.3;

/// Rejection tolerance: points are kept unless strictly inside another
/// inflated sphere by more than this margin.
pub const REJECT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SurfaceError {
    #[error("no atoms supplied")]
    NoAtoms,
    #[error("surface sampling produced no points")]
    EmptySurface,
    #[error("no C-alpha atoms present")]
    NoCalpha,
    #[error("{path}:{line}: {msg}")]
    Format { path: String, line: usize, msg: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Geom(#[from] GeomError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Element {
    C,
    N,
    O,
    S,
    H,
}

impl Element {
    pub fn symbol(&self) -> &'static str {
        match self {
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::S => "S",
            Element::H => "H",
        }
    }

    pub fn parse(s: &str) -> Option<Element> {
        match s {
            "C" => Some(Element::C),
            "N" => Some(Element::N),
            "O" => Some(Element::O),
            "S" => Some(Element::S),
            "H" => Some(Element::H),
            _ => None,
        }
    }

    /// Bondi van der Waals radius in Å.
    pub fn vdw_radius(&self) -> f64 {
        match self {
            Element::C => 1.7,
            Element::N => 1.55,
            Element::O => 1.52,
            Element::S => 1.8,
            Element::H => 1.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub pos: Vector3<f64>,
    pub element: Element,
    pub vdw_radius: f64,
    pub residue_index: usize,
    /// Residue type in ARNDCQEGHILKMFPSTWYV order, `0..20`.
    pub residue_type: usize,
    pub is_calpha: bool,
    /// Raw electrostatic value carried by the input file.
    pub charge: f64,
}

/// Donor/acceptor/neutral chemistry label of a surface point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FephLabel {
    Donor,
    Acceptor,
    Neutral,
}

impl FephLabel {
    pub fn index(&self) -> usize {
        match self {
            FephLabel::Donor => 0,
            FephLabel::Acceptor => 1,
            FephLabel::Neutral => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<FephLabel> {
        match i {
            0 => Some(FephLabel::Donor),
            1 => Some(FephLabel::Acceptor),
            2 => Some(FephLabel::Neutral),
            _ => None,
        }
    }

    pub fn code(&self) -> char {
        match self {
            FephLabel::Donor => 'D',
            FephLabel::Acceptor => 'A',
            FephLabel::Neutral => 'N',
        }
    }

    pub fn parse(c: char) -> Option<FephLabel> {
        match c {
            'D' => Some(FephLabel::Donor),
            'A' => Some(FephLabel::Acceptor),
            'N' => Some(FephLabel::Neutral),
            _ => None,
        }
    }
}

/// An oriented surface point with its biochemical features.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePoint {
    pub pos: Vector3<f64>,
    /// Unit outward normal.
    pub normal: Vector3<f64>,
    /// Continuous features: `[hydropathy, electrostatics]`, both in [-1, 1].
    pub tau: [f64; 2],
    pub upsilon: FephLabel,
}

/// Normalized hydropathy of a residue type.
pub fn hydropathy_feature(residue_type: usize) -> f64 {
    assert!(residue_type < 20, "residue type {residue_type} out of range");
    KYTE_DOOLITTLE[residue_type] / HYDROPATHY_NORM
}

/// Electrostatics capped at ±[`CHARGE_CAP`] then scaled into [-1, 1].
pub fn electrostatics_feature(raw: f64) -> f64 {
    raw.clamp(-CHARGE_CAP, CHARGE_CAP) / CHARGE_CAP
}

fn is_polar_hydrogen(atoms: &[Atom], idx: usize) -> bool {
    let p = atoms[idx].pos;
    let mut best: Option<(f64, usize)> = None;
    for (j, a) in atoms.iter().enumerate() {
        if j == idx || a.element == Element::H {
            continue;
        }
        let d = (a.pos - p).norm();
        if d <= POLAR_H_BOND_RADIUS {
            let better = match best {
                None => true,
                Some((bd, bj)) => d < bd || (d == bd && j < bj),
            };
            if better {
                best = Some((d, j));
            }
        }
    }
    matches!(
        best.map(|(_, j)| atoms[j].element),
        Some(Element::N) | Some(Element::O)
    )
}

/// Donor/acceptor/neutral label contributed by atom `atom_idx`:
/// nitrogen and polar hydrogens donate, oxygen accepts, everything else is
/// neutral.
pub fn feph_label(atoms: &[Atom], atom_idx: usize) -> FephLabel {
    match atoms[atom_idx].element {
        Element::N => FephLabel::Donor,
        Element::O => FephLabel::Acceptor,
        Element::H if is_polar_hydrogen(atoms, atom_idx) => FephLabel::Donor,
        _ => FephLabel::Neutral,
    }
}

/// Golden-angle Fibonacci lattice of `k` unit directions.
fn fibonacci_directions(k: usize) -> Vec<Vector3<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
    (0..k)
        .map(|j| {
            let z = 1.0 - 2.0 * (j as f64 + 0.5) / k as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = j as f64 * golden;
            Vector3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// Equivariant local frame of atom `i`, built from directions that co-rotate
/// with the molecule (nearest neighbor, centroid, second-nearest). Falls
/// back to a fixed world axis only for degenerate constellations.
fn atom_frame(atoms: &[Atom], i: usize) -> Rotation {
    if atoms.len() == 1 {
        return Rotation::identity();
    }
    let ci = atoms[i].pos;
    let mut order: Vec<usize> = (0..atoms.len()).filter(|&j| j != i).collect();
    order.sort_by(|&a, &b| {
        let da = (atoms[a].pos - ci).norm_squared();
        let db = (atoms[b].pos - ci).norm_squared();
        da.partial_cmp(&db).unwrap().then(a.cmp(&b))
    });
    let u = atoms[order[0]].pos - ci;
    if u.norm() < 1e-12 {
        return Rotation::identity();
    }
    let u = u.normalize();
    let n = atoms.len() as f64;
    let centroid = atoms.iter().map(|a| a.pos).sum::<Vector3<f64>>() / n;
    let mut anchors: Vec<Vector3<f64>> = vec![centroid - ci];
    if order.len() >= 2 {
        anchors.push(atoms[order[1]].pos - ci);
    }
    // World-axis fallback: the axis least aligned with u always gives a
    // well-conditioned anchor (but is only reached for collinear inputs).
    let axes = [Vector3::x(), Vector3::y(), Vector3::z()];
    let fallback = axes
        .iter()
        .min_by(|a, b| u.dot(a).abs().partial_cmp(&u.dot(b).abs()).unwrap())
        .copied()
        .unwrap();
    anchors.push(fallback);
    for anchor in anchors {
        if anchor.norm() < 1e-9 {
            continue;
        }
        if let Ok(f) = frame_from_normal(&u, &anchor) {
            return f;
        }
    }
    unreachable!("world-axis anchor cannot be parallel to u");
}

/// Samples approximately `target_count` points on the probe-inflated
/// sphere-union surface, with outward radial normals. Features are filled by
/// [`featurize`].
///
/// Points are allocated to atoms in proportion to inflated-sphere area,
/// placed on a per-atom Fibonacci lattice expressed in the atom's local
/// frame (making the construction exactly equivariant under rigid motion
/// for a shared seed), and rejected when strictly inside any other inflated
/// sphere. The RNG is used only to subsample down to the requested count.
pub fn sample_surface<R: Rng + ?Sized>(
    atoms: &[Atom],
    probe_radius: f64,
    target_count: usize,
    rng: &mut R,
) -> Result<Vec<SurfacePoint>, SurfaceError> {
    if atoms.is_empty() {
        return Err(SurfaceError::NoAtoms);
    }
    assert!(probe_radius >= 0.0 && target_count > 0);
    let inflated: Vec<f64> = atoms.iter().map(|a| a.vdw_radius + probe_radius).collect();
    let total_area: f64 = inflated.iter().map(|r| r * r).sum();
    let frames: Vec<Rotation> = (0..atoms.len()).map(|i| atom_frame(atoms, i)).collect();
    let centers: Vec<Vector3<f64>> = atoms.iter().map(|a| a.pos).collect();
    let max_r = inflated.iter().cloned().fold(0.0, f64::max);
    let index = PointIndex::build(&centers, max_r.max(1e-6));

    let mut kept: Vec<SurfacePoint> = Vec::new();
    for factor in [2.0, 4.0, 8.0] {
        kept.clear();
        for (i, atom) in atoms.iter().enumerate() {
            let share = inflated[i] * inflated[i] / total_area;
            let k = ((factor * target_count as f64 * share).ceil() as usize).max(1);
            for d in fibonacci_directions(k) {
                let dir = frames[i].apply(&d);
                let p = atom.pos + dir * inflated[i];
                let mut inside = false;
                for j in index.within(&p, max_r) {
                    if j != i && (p - centers[j]).norm() < inflated[j] - REJECT_TOL {
                        inside = true;
                        break;
                    }
                }
                if !inside {
                    kept.push(SurfacePoint {
                        pos: p,
                        normal: dir,
                        tau: [0.0, 0.0],
                        upsilon: FephLabel::Neutral,
                    });
                }
            }
        }
        if kept.len() >= target_count {
            break;
        }
    }
    if kept.is_empty() {
        return Err(SurfaceError::EmptySurface);
    }
    if kept.len() > target_count {
        // Partial Fisher-Yates over indices, then ascending order so output
        // ordering never depends on the draw sequence.
        let mut ids: Vec<usize> = (0..kept.len()).collect();
        for i in 0..target_count {
            let j = i + rng.gen_range(0..ids.len() - i);
            ids.swap(i, j);
        }
        let mut chosen: Vec<usize> = ids[..target_count].to_vec();
        chosen.sort_unstable();
        kept = chosen.into_iter().map(|i| kept[i].clone()).collect();
    }
    Ok(kept)
}

/// Fills `tau` and `upsilon` of each point from its nearest atom.
pub fn featurize(points: &mut [SurfacePoint], atoms: &[Atom]) -> Result<(), SurfaceError> {
    if atoms.is_empty() {
        return Err(SurfaceError::NoAtoms);
    }
    let centers: Vec<Vector3<f64>> = atoms.iter().map(|a| a.pos).collect();
    let spread = atoms
        .iter()
        .map(|a| a.vdw_radius)
        .fold(1.0_f64, f64::max);
    let index = PointIndex::build(&centers, spread);
    for p in points.iter_mut() {
        let (i, _) = index.nearest(&p.pos).expect("atom index is non-empty");
        p.tau = [
            hydropathy_feature(atoms[i].residue_type),
            electrostatics_feature(atoms[i].charge),
        ];
        p.upsilon = feph_label(atoms, i);
    }
    Ok(())
}

/// Convenience wrapper: sample then featurize.
pub fn build_surface<R: Rng + ?Sized>(
    atoms: &[Atom],
    probe_radius: f64,
    target_count: usize,
    rng: &mut R,
) -> Result<Vec<SurfacePoint>, SurfaceError> {
    let mut pts = sample_surface(atoms, probe_radius, target_count, rng)?;
    featurize(&mut pts, atoms)?;
    Ok(pts)
}

/// Per-point orientation frames anchored at the nearest C-alpha.
#[derive(Debug, Clone)]
pub struct FrameSet {
    /// Frames for the kept points, aligned with `kept`.
    pub frames: Vec<Rotation>,
    /// Indices of points that received a frame.
    pub kept: Vec<usize>,
    /// Indices dropped because the anchor direction was degenerate.
    pub dropped: Vec<usize>,
}

/// Builds the canonical frame `(n, d̂, n×d̂)` of every surface point, with
/// the tangent anchor pointing toward the nearest C-alpha atom. Points whose
/// anchor is (anti)parallel to the normal are dropped and recorded.
pub fn point_frames(points: &[SurfacePoint], atoms: &[Atom]) -> Result<FrameSet, SurfaceError> {
    let ca: Vec<Vector3<f64>> = atoms.iter().filter(|a| a.is_calpha).map(|a| a.pos).collect();
    if ca.is_empty() {
        return Err(SurfaceError::NoCalpha);
    }
    let index = PointIndex::build(&ca, 2.0);
    let mut out = FrameSet { frames: Vec::new(), kept: Vec::new(), dropped: Vec::new() };
    for (i, p) in points.iter().enumerate() {
        let (j, _) = index.nearest(&p.pos).expect("calpha set is non-empty");
        let anchor = ca[j] - p.pos;
        match frame_from_normal(&p.normal, &anchor) {
            Ok(f) => {
                out.frames.push(f);
                out.kept.push(i);
            }
            Err(GeomError::DegenerateDirection) => out.dropped.push(i),
            Err(e) => return Err(SurfaceError::Geom(e)),
        }
    }
    Ok(out)
}
