//! Surface-consistency and structure metrics.
//!
//! Chamfer distance, normal consistency and voxel IoU compare generated
//! surfaces against references; AAR compares residue-type sequences. RMSD
//! lives in [`crate::geom3d::kabsch_rmsd`] and is only re-exported into the
//! report here.

use crate::spatial::PointIndex;
use crate::surface::SurfacePoint;
use nalgebra::Vector3;
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("point set is empty")]
    EmptySet,
    #[error("normal {index} has norm {norm}, expected unit")]
    NonUnitNormal { index: usize, norm: f64 },
    #[error("sequence lengths differ: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
}

/// Reasonable uniform-grid cell for a point set: close to the mean spacing
/// so neighbor queries touch few cells.
fn index_cell(points: &[Vector3<f64>]) -> f64 {
    let mut lo = points[0];
    let mut hi = points[0];
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let diag = (hi - lo).norm();
    (diag / (points.len() as f64).cbrt().max(1.0)).max(1e-6)
}

fn mean_min_distance(from: &[Vector3<f64>], to: &[Vector3<f64>]) -> f64 {
    let index = PointIndex::build(to, index_cell(to));
    let total: f64 = from
        .iter()
        .map(|p| index.nearest(p).expect("nonempty target set").1)
        .sum();
    total / from.len() as f64
}

/// Symmetric Chamfer distance: the average of the two directed
/// mean-of-min Euclidean distances, in Å (unsquared).
pub fn chamfer(a: &[Vector3<f64>], b: &[Vector3<f64>]) -> Result<f64, MetricError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricError::EmptySet);
    }
    Ok(0.5 * (mean_min_distance(a, b) + mean_min_distance(b, a)))
}

fn check_normals(points: &[SurfacePoint]) -> Result<(), MetricError> {
    for (i, p) in points.iter().enumerate() {
        let n = p.normal.norm();
        if (n - 1.0).abs() > 1e-9 {
            return Err(MetricError::NonUnitNormal { index: i, norm: n });
        }
    }
    Ok(())
}

/// Mean absolute normal agreement: for every ground-truth point, the
/// nearest predicted point (lowest index on ties) contributes
/// `|n_gt · n_pred|`.
pub fn normal_consistency(
    pred: &[SurfacePoint],
    gt: &[SurfacePoint],
) -> Result<f64, MetricError> {
    if pred.is_empty() || gt.is_empty() {
        return Err(MetricError::EmptySet);
    }
    check_normals(pred)?;
    check_normals(gt)?;
    let coords: Vec<Vector3<f64>> = pred.iter().map(|p| p.pos).collect();
    let index = PointIndex::build(&coords, index_cell(&coords));
    let total: f64 = gt
        .iter()
        .map(|g| {
            let (i, _) = index.nearest(&g.pos).expect("nonempty prediction");
            g.normal.dot(&pred[i].normal).abs()
        })
        .sum();
    Ok(total / gt.len() as f64)
}

/// Boolean occupancy over a regular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub origin: Vector3<f64>,
    pub spacing: f64,
    pub dims: [usize; 3],
    /// Row-major over (x, y, z).
    pub occupancy: Vec<bool>,
}

impl VoxelGrid {
    fn voxel_of(origin: &Vector3<f64>, spacing: f64, p: &Vector3<f64>) -> (i64, i64, i64) {
        (
            ((p.x - origin.x) / spacing).floor() as i64,
            ((p.y - origin.y) / spacing).floor() as i64,
            ((p.z - origin.z) / spacing).floor() as i64,
        )
    }

    /// Marks the voxels containing `points` on a grid with the given
    /// origin and dims; points outside the box are a caller bug.
    pub fn build(
        points: &[Vector3<f64>],
        origin: Vector3<f64>,
        spacing: f64,
        dims: [usize; 3],
    ) -> Self {
        assert!(spacing > 0.0 && dims.iter().all(|&d| d >= 1));
        let mut occupancy = vec![false; dims[0] * dims[1] * dims[2]];
        for p in points {
            let (i, j, k) = Self::voxel_of(&origin, spacing, p);
            assert!(
                i >= 0 && j >= 0 && k >= 0,
                "point below the grid origin"
            );
            let (i, j, k) = (i as usize, j as usize, k as usize);
            assert!(i < dims[0] && j < dims[1] && k < dims[2], "point outside the grid");
            occupancy[(i * dims[1] + j) * dims[2] + k] = true;
        }
        VoxelGrid { origin, spacing, dims, occupancy }
    }

    pub fn count_occupied(&self) -> usize {
        self.occupancy.iter().filter(|&&o| o).count()
    }
}

/// Occupancy IoU on a shared grid covering both sets. The grid origin is
/// the union bounding-box minimum snapped down to a multiple of `spacing`
/// per axis, so translating both sets by exact spacing multiples leaves
/// the result unchanged.
pub fn voxel_iou(
    a: &[Vector3<f64>],
    b: &[Vector3<f64>],
    spacing: f64,
) -> Result<f64, MetricError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricError::EmptySet);
    }
    assert!(spacing > 0.0);
    let mut lo = a[0];
    for p in a.iter().chain(b) {
        lo = lo.inf(p);
    }
    let origin = Vector3::new(
        (lo.x / spacing).floor() * spacing,
        (lo.y / spacing).floor() * spacing,
        (lo.z / spacing).floor() * spacing,
    );
    let occupied = |pts: &[Vector3<f64>]| -> HashSet<(i64, i64, i64)> {
        pts.iter()
            .map(|p| VoxelGrid::voxel_of(&origin, spacing, p))
            .collect()
    };
    let va = occupied(a);
    let vb = occupied(b);
    let inter = va.intersection(&vb).count();
    let union = va.union(&vb).count();
    Ok(inter as f64 / union as f64)
}

/// Amino acid recovery rate: percentage of matching positions.
pub fn aar(pred_types: &[usize], gt_types: &[usize]) -> Result<f64, MetricError> {
    if pred_types.len() != gt_types.len() {
        return Err(MetricError::LengthMismatch { a: pred_types.len(), b: gt_types.len() });
    }
    if pred_types.is_empty() {
        return Err(MetricError::EmptySet);
    }
    let hits = pred_types.iter().zip(gt_types).filter(|(p, g)| p == g).count();
    Ok(100.0 * hits as f64 / pred_types.len() as f64)
}

/// One evaluation's worth of metrics, serialized with fixed key order and
/// 17-significant-digit floats so reports round-trip exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub chamfer: f64,
    pub nc: f64,
    pub iou: f64,
    pub rmsd: f64,
    pub aar: f64,
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        format!(
            "{{\"chamfer\":{:.16e},\"nc\":{:.16e},\"iou\":{:.16e},\"rmsd\":{:.16e},\"aar\":{:.16e}}}",
            self.chamfer, self.nc, self.iou, self.rmsd, self.aar
        )
    }
}
