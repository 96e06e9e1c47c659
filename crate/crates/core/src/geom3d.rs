//! Rigid-body geometry on SO(3): rotation matrices, axis-angle vectors,
//! oriented frames, Haar sampling and Kabsch superposition.
//!
//! Tangent vectors use the body-frame (right) convention throughout:
//! `exp_map(base, v) = base * Exp(v)` and `log_map(base, target)` returns the
//! `v` with `base * Exp(v) = target`. Left-multiplying both arguments by a
//! common rotation therefore leaves logs unchanged, which is what makes the
//! orientation flow equivariant.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Angle below which exp/log switch to their Taylor expansions.
pub const SMALL_ANGLE: f64 = 1e-6;

/// Margin around π inside which the principal log is rejected as ill-defined.
pub const PI_MARGIN: f64 = 1e-6;

/// Orthonormality tolerance enforced on rotation matrices.
pub const ORTHO_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeomError {
    /// Relative rotation angle is within [`PI_MARGIN`] of π; the principal
    /// log is not unique there (cut locus).
    #[error("rotation angle {angle} is within {PI_MARGIN} of the cut locus at pi")]
    AngleNearPi { angle: f64 },
    /// Anchor direction is (anti)parallel to the normal; no stable tangent.
    #[error("anchor direction within {SMALL_ANGLE} rad of the normal axis")]
    DegenerateDirection,
    /// Superposition needs at least three points per set.
    #[error("need at least 3 points, got {got}")]
    TooFewPoints { got: usize },
    /// Point sets must correspond 1:1 by index.
    #[error("point sets differ in length: {a} vs {b}")]
    PointCountMismatch { a: usize, b: usize },
    /// Matrix failed the RᵀR = I / det = +1 check.
    #[error("matrix is not orthonormal with determinant +1 (deviation {dev})")]
    NotOrthonormal { dev: f64 },
}

/// A rotation: 3×3 orthonormal matrix with determinant +1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    m: Matrix3<f64>,
}

/// Axis-angle vector on the principal branch: the direction is the rotation
/// axis and the norm is the angle in `[0, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotVec(pub Vector3<f64>);

impl RotVec {
    pub fn angle(&self) -> f64 {
        self.0.norm()
    }

    pub fn zero() -> Self {
        RotVec(Vector3::zeros())
    }
}

impl From<RotVec> for Vector3<f64> {
    fn from(v: RotVec) -> Self {
        v.0
    }
}

/// A rigid transform `p ↦ rot·p + origin`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub rot: Rotation,
    pub origin: Vector3<f64>,
}

impl Frame {
    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rot.m * p + self.origin
    }
}

impl Rotation {
    pub fn identity() -> Self {
        Rotation { m: Matrix3::identity() }
    }

    /// Validates orthonormality (within [`ORTHO_TOL`]) and positive
    /// determinant before accepting the matrix.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self, GeomError> {
        let dev = (m.transpose() * m - Matrix3::identity()).abs().max();
        if dev > ORTHO_TOL || m.determinant() < 0.0 {
            return Err(GeomError::NotOrthonormal { dev });
        }
        Ok(Rotation { m })
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn transpose(&self) -> Rotation {
        Rotation { m: self.m.transpose() }
    }

    /// Composition `self ∘ other` (matrix product).
    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation { m: self.m * other.m }
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.m * p
    }

    /// Deviation of `RᵀR` from the identity, max-abs entrywise. Zero for an
    /// exact rotation; used to monitor drift in long integration chains.
    pub fn orthonormality_error(&self) -> f64 {
        (self.m.transpose() * self.m - Matrix3::identity()).abs().max()
    }

    /// Projects back onto SO(3) via the polar factor (SVD `UVᵀ` with a sign
    /// fix). The nearest rotation in Frobenius norm.
    pub fn orthonormalized(&self) -> Rotation {
        let svd = self.m.svd(true, true);
        let u = svd.u.expect("3x3 SVD always yields U");
        let v_t = svd.v_t.expect("3x3 SVD always yields Vt");
        let mut r = u * v_t;
        if r.determinant() < 0.0 {
            // Flip the weakest singular direction to land in SO(3), not O(3).
            let mut u2 = u;
            u2.column_mut(2).neg_mut();
            r = u2 * v_t;
        }
        Rotation { m: r }
    }
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

fn unskew(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Rodrigues' rotation matrix for the axis-angle vector `v`.
///
/// For angles below [`SMALL_ANGLE`] the sin/cos coefficients come from their
/// second-order Taylor expansions, so the map stays smooth through zero.
fn rodrigues(v: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = v.norm_squared();
    let theta = theta2.sqrt();
    let k = skew(v);
    let (a, b) = if theta < SMALL_ANGLE {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    Matrix3::identity() + k * a + k * k * b
}

/// Riemannian exponential at `base`: `base * Exp(tangent)`.
pub fn exp_map(base: &Rotation, tangent: &Vector3<f64>) -> Rotation {
    Rotation { m: base.m * rodrigues(tangent) }
}

/// Principal logarithm: the body-frame axis-angle vector carrying `base` to
/// `target`. Errors with [`GeomError::AngleNearPi`] when the relative angle
/// is within [`PI_MARGIN`] of π, where the axis is not unique.
pub fn log_map(base: &Rotation, target: &Rotation) -> Result<RotVec, GeomError> {
    let rel = base.m.transpose() * target.m;
    let anti = unskew(&(rel - rel.transpose()));
    // anti = 2 sinθ · axis. Recover θ with atan2 of the matrix's own sine
    // and cosine and normalize anti by that same sine: recomputing sinθ
    // from an arccos'd angle loses ~ulp/sin²θ of the vector norm near the
    // cut locus, while this form stays accurate up to the rejection band.
    let sin = anti.norm() / 2.0;
    let cos = (rel.trace() - 1.0) / 2.0;
    let theta = sin.atan2(cos);
    if theta > std::f64::consts::PI - PI_MARGIN {
        return Err(GeomError::AngleNearPi { angle: theta });
    }
    let c = if theta < SMALL_ANGLE {
        0.5 + theta * theta / 12.0
    } else {
        theta / (2.0 * sin)
    };
    Ok(RotVec(anti * c))
}

/// Geodesic interpolation `exp_{r0}(t · log_{r0}(r1))`.
pub fn geodesic_interp(r0: &Rotation, r1: &Rotation, t: f64) -> Result<Rotation, GeomError> {
    let w = log_map(r0, r1)?;
    Ok(exp_map(r0, &(w.0 * t)))
}

/// Geodesic distance: the relative rotation angle in `[0, π]`.
///
/// Same atan2 form as [`log_map`]: the arccos of the trace cannot resolve
/// angles below the square root of machine epsilon.
pub fn geodesic_distance(a: &Rotation, b: &Rotation) -> f64 {
    let rel = a.m.transpose() * b.m;
    let sin = unskew(&(rel - rel.transpose())).norm() / 2.0;
    let cos = (rel.trace() - 1.0) / 2.0;
    sin.atan2(cos)
}

/// Haar-uniform rotation: four standard Gaussians normalized to a unit
/// quaternion, converted to a matrix.
pub fn sample_uniform_rotation<R: Rng + ?Sized>(rng: &mut R) -> Rotation {
    loop {
        let q: [f64; 4] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let n2: f64 = q.iter().map(|x| x * x).sum();
        if n2 < 1e-12 {
            continue;
        }
        let n = n2.sqrt();
        let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
        let m = Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        );
        return Rotation { m };
    }
}

/// Orthonormal frame from a unit normal and an anchor direction.
///
/// Columns are `(n, d̂, n × d̂)` where `d̂` is the anchor direction made
/// orthogonal to `n` by Gram–Schmidt and normalized. Errors with
/// [`GeomError::DegenerateDirection`] when the anchor is within
/// [`SMALL_ANGLE`] radians of ±`n`.
pub fn frame_from_normal(
    n: &Vector3<f64>,
    anchor_dir: &Vector3<f64>,
) -> Result<Rotation, GeomError> {
    let n = n.normalize();
    let d = anchor_dir - n * anchor_dir.dot(&n);
    // ‖d‖ = ‖anchor‖·sin(angle to n); reject below the small-angle floor.
    if d.norm() <= anchor_dir.norm() * SMALL_ANGLE {
        return Err(GeomError::DegenerateDirection);
    }
    let d = d.normalize();
    let c = n.cross(&d);
    Ok(Rotation { m: Matrix3::from_columns(&[n, d, c]) })
}

/// Kabsch superposition: optimal rigid alignment of `a` onto `b` under
/// index correspondence, returning the minimal RMSD and the aligning frame
/// (`frame.apply(a_i) ≈ b_i`).
pub fn kabsch_rmsd(
    a: &[Vector3<f64>],
    b: &[Vector3<f64>],
) -> Result<(f64, Frame), GeomError> {
    if a.len() != b.len() {
        return Err(GeomError::PointCountMismatch { a: a.len(), b: b.len() });
    }
    if a.len() < 3 {
        return Err(GeomError::TooFewPoints { got: a.len() });
    }
    let n = a.len() as f64;
    let ca = a.iter().sum::<Vector3<f64>>() / n;
    let cb = b.iter().sum::<Vector3<f64>>() / n;
    let mut h = Matrix3::zeros();
    for (p, q) in a.iter().zip(b) {
        h += (q - cb) * (p - ca).transpose();
    }
    // h maps centered a-space to b-space; polar-like factor gives the
    // rotation with the proper-rotation sign fix on the smallest singular
    // value (standard Kabsch determinant correction).
    let svd = h.svd(true, true);
    let u = svd.u.expect("3x3 SVD always yields U");
    let v_t = svd.v_t.expect("3x3 SVD always yields Vt");
    let d = (u * v_t).determinant().signum();
    let s = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d));
    let r = u * s * v_t;
    let rot = Rotation { m: r };
    let origin = cb - r * ca;
    let frame = Frame { rot, origin };
    let mut ss = 0.0;
    for (p, q) in a.iter().zip(b) {
        ss += (frame.apply(p) - q).norm_squared();
    }
    Ok(((ss / n).sqrt(), frame))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn rot_z(angle: f64) -> Rotation {
        exp_map(&Rotation::identity(), &Vector3::new(0.0, 0.0, angle))
    }

    fn gauss_vec(rng: &mut impl rand::Rng) -> Vector3<f64> {
        Vector3::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        )
    }

    #[test]
    fn exp_at_identity_quarter_turn_z() {
        let r = rot_z(PI / 2.0);
        let y = r.apply(&Vector3::x());
        assert_relative_eq!(y, Vector3::y(), epsilon = 1e-12);
    }

    #[test]
    fn exp_of_zero_is_base() {
        let mut rng = substream(7, "geom");
        let base = sample_uniform_rotation(&mut rng);
        let r = exp_map(&base, &Vector3::zeros());
        assert_relative_eq!(r.m, base.m, epsilon = 1e-15);
    }

    #[test]
    fn log_of_unit_z_rotation() {
        let v = log_map(&Rotation::identity(), &rot_z(1.0)).unwrap();
        assert_relative_eq!(v.0, Vector3::new(0.0, 0.0, 1.0), epsilon = 1e-12);
    }

    #[test]
    fn log_rejects_near_pi() {
        let r = rot_z(PI - 1e-7);
        match log_map(&Rotation::identity(), &r) {
            Err(GeomError::AngleNearPi { .. }) => {}
            other => panic!("expected AngleNearPi, got {other:?}"),
        }
    }

    #[test]
    fn log_accepts_just_inside_margin() {
        let r = rot_z(PI - 1e-3);
        let v = log_map(&Rotation::identity(), &r).unwrap();
        assert_relative_eq!(v.angle(), PI - 1e-3, epsilon = 1e-9);
    }

    #[test]
    fn geodesic_midpoint_of_z_rotations() {
        let mid = geodesic_interp(&rot_z(0.0), &rot_z(1.0), 0.5).unwrap();
        assert_relative_eq!(mid.m, rot_z(0.5).m, epsilon = 1e-12);
    }

    #[test]
    fn geodesic_hits_endpoints() {
        let mut rng = substream(11, "geom");
        for _ in 0..50 {
            let r0 = sample_uniform_rotation(&mut rng);
            let r1 = sample_uniform_rotation(&mut rng);
            if geodesic_distance(&r0, &r1) > PI - 1e-3 {
                continue;
            }
            let a = geodesic_interp(&r0, &r1, 0.0).unwrap();
            let b = geodesic_interp(&r0, &r1, 1.0).unwrap();
            assert!((a.m - r0.m).abs().max() < 1e-12);
            assert!((b.m - r1.m).abs().max() < 1e-12);
        }
    }

    #[test]
    fn exp_log_round_trip_random_pairs() {
        let mut rng = substream(13, "geom");
        let mut n = 0;
        while n < 1000 {
            let base = sample_uniform_rotation(&mut rng);
            let target = sample_uniform_rotation(&mut rng);
            let v = match log_map(&base, &target) {
                Ok(v) if v.angle() <= PI - 1e-3 => v,
                _ => continue,
            };
            let back = exp_map(&base, &v.0);
            assert!(
                (back.m - target.m).abs().max() < 1e-10,
                "round trip drifted by {}",
                (back.m - target.m).abs().max()
            );
            n += 1;
        }
    }

    #[test]
    fn small_angle_branch_agrees_with_direct_formula() {
        // Just above the Taylor cutoff the closed form is still accurate;
        // the two branches must agree to near machine precision.
        for &theta in &[1e-7, 9.9e-7, 1.01e-6, 1e-5] {
            let v = Vector3::new(0.6, -0.8, 0.0) * theta;
            let r = rodrigues(&v);
            let direct = Matrix3::identity()
                + skew(&v) * (theta.sin() / theta)
                + skew(&v) * skew(&v) * ((1.0 - theta.cos()) / (theta * theta));
            assert!((r - direct).abs().max() < 1e-15);
            let back = log_map(&Rotation::identity(), &Rotation { m: r }).unwrap();
            assert_relative_eq!(back.0, v, epsilon = 1e-16, max_relative = 1e-10);
        }
    }

    #[test]
    fn haar_mean_trace_matches_quadrature() {
        // Under Haar measure the rotation angle has density (1-cosθ)/π on
        // [0, π] and the trace is 1 + 2cosθ. Simpson quadrature of the
        // expected trace is the oracle for the Monte-Carlo mean.
        let f = |theta: f64| (1.0 + 2.0 * theta.cos()) * (1.0 - theta.cos()) / PI;
        let n = 10_000;
        let h = PI / n as f64;
        let mut quad = f(0.0) + f(PI);
        for k in 1..n {
            quad += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        quad *= h / 3.0;
        assert!(quad.abs() < 1e-10, "quadrature oracle gave {quad}");

        let mut rng = substream(42, "geom-haar");
        let m = 100_000;
        let mean: f64 =
            (0..m).map(|_| sample_uniform_rotation(&mut rng).m.trace()).sum::<f64>() / m as f64;
        assert!(
            (mean - quad).abs() <= 0.02,
            "mean trace {mean} deviates from oracle {quad}"
        );
    }

    #[test]
    fn frame_from_normal_worked_example() {
        let f = frame_from_normal(&Vector3::z(), &Vector3::new(1.0, 0.0, 1.0)).unwrap();
        assert_relative_eq!(f.m.column(0).into_owned(), Vector3::z(), epsilon = 1e-15);
        assert_relative_eq!(f.m.column(1).into_owned(), Vector3::x(), epsilon = 1e-15);
        assert_relative_eq!(f.m.column(2).into_owned(), Vector3::y(), epsilon = 1e-15);
    }

    #[test]
    fn frame_from_normal_rejects_parallel_anchor() {
        for anchor in [Vector3::z() * 3.0, Vector3::z() * -2.0] {
            match frame_from_normal(&Vector3::z(), &anchor) {
                Err(GeomError::DegenerateDirection) => {}
                other => panic!("expected DegenerateDirection, got {other:?}"),
            }
        }
    }

    #[test]
    fn kabsch_identical_sets_give_zero() {
        let a = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(0.3, 0.4, 0.5),
        ];
        let (rmsd, frame) = kabsch_rmsd(&a, &a).unwrap();
        assert!(rmsd < 1e-12);
        assert!((frame.rot.m - Matrix3::identity()).abs().max() < 1e-9);
    }

    #[test]
    fn kabsch_too_few_points() {
        let a = vec![Vector3::zeros(), Vector3::x()];
        match kabsch_rmsd(&a, &a) {
            Err(GeomError::TooFewPoints { got: 2 }) => {}
            other => panic!("expected TooFewPoints, got {other:?}"),
        }
    }

    #[test]
    fn kabsch_rigid_invariance() {
        let mut rng = substream(17, "geom");
        for _ in 0..20 {
            let a: Vec<_> = (0..8).map(|_| gauss_vec(&mut rng)).collect();
            let r = sample_uniform_rotation(&mut rng);
            let t = Vector3::new(0.5, -2.0, 1.5);
            let b: Vec<_> = a.iter().map(|p| r.apply(p) + t).collect();
            let (rmsd, frame) = kabsch_rmsd(&a, &b).unwrap();
            assert!(rmsd < 1e-10, "rigid motion should align exactly, rmsd={rmsd}");
            for (p, q) in a.iter().zip(&b) {
                assert_relative_eq!(frame.apply(p), *q, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn kabsch_is_symmetric() {
        let mut rng = substream(19, "geom");
        let a: Vec<_> = (0..6).map(|_| gauss_vec(&mut rng)).collect();
        let b: Vec<_> = (0..6).map(|_| gauss_vec(&mut rng)).collect();
        let (ab, _) = kabsch_rmsd(&a, &b).unwrap();
        let (ba, _) = kabsch_rmsd(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-12);
    }

    /// Brute-force oracle: hierarchical grid search over axis-angle space for
    /// the rotation minimizing the centered RMSD. Independent of the SVD
    /// route, accurate to ~1e-6 in the minimal value.
    fn grid_search_rmsd(a: &[Vector3<f64>], b: &[Vector3<f64>]) -> f64 {
        let n = a.len() as f64;
        let ca = a.iter().sum::<Vector3<f64>>() / n;
        let cb = b.iter().sum::<Vector3<f64>>() / n;
        let ac: Vec<_> = a.iter().map(|p| p - ca).collect();
        let bc: Vec<_> = b.iter().map(|p| p - cb).collect();
        let cost = |v: &Vector3<f64>| -> f64 {
            let r = rodrigues(v);
            ac.iter().zip(&bc).map(|(p, q)| (r * p - q).norm_squared()).sum::<f64>() / n
        };
        let mut center = Vector3::zeros();
        let mut half = PI;
        let mut best = (cost(&center), center);
        for _ in 0..6 {
            let steps = 12;
            for i in 0..=steps {
                for j in 0..=steps {
                    for k in 0..=steps {
                        let v = center
                            + Vector3::new(
                                -half + 2.0 * half * i as f64 / steps as f64,
                                -half + 2.0 * half * j as f64 / steps as f64,
                                -half + 2.0 * half * k as f64 / steps as f64,
                            );
                        let c = cost(&v);
                        if c < best.0 {
                            best = (c, v);
                        }
                    }
                }
            }
            center = best.1;
            half /= 4.0;
        }
        best.0.sqrt()
    }

    #[test]
    fn kabsch_matches_grid_search_oracle() {
        // Unit square corners vs the same square with one corner lifted by 1
        // along z: a genuinely non-rigid pair, so the optimum is nontrivial.
        let a = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(1.0, 1.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
        ];
        let mut b = a.clone();
        b[2].z += 1.0;
        let (rmsd, _) = kabsch_rmsd(&a, &b).unwrap();
        let oracle = grid_search_rmsd(&a, &b);
        assert!(
            (rmsd - oracle).abs() <= 1e-3,
            "kabsch {rmsd} vs grid oracle {oracle}"
        );
        assert!(rmsd <= oracle + 1e-9, "svd result must not exceed the grid optimum");
    }

    #[test]
    fn orthonormalized_restores_perturbed_rotation() {
        let mut rng = substream(23, "geom");
        let r = sample_uniform_rotation(&mut rng);
        let mut m = *r.matrix();
        m[(0, 1)] += 1e-6;
        m[(2, 0)] -= 1e-6;
        let fixed = Rotation { m }.orthonormalized();
        assert!(fixed.orthonormality_error() < 1e-14);
        assert!(geodesic_distance(&fixed, &r) < 1e-5);
    }

    proptest! {
        #[test]
        fn frames_are_orthonormal_right_handed(
            nx in -1.0f64..1.0, ny in -1.0f64..1.0, nz in -1.0f64..1.0,
            ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in -1.0f64..1.0,
        ) {
            let n = Vector3::new(nx, ny, nz);
            let anchor = Vector3::new(ax, ay, az);
            prop_assume!(n.norm() > 1e-3 && anchor.norm() > 1e-3);
            let n = n.normalize();
            if let Ok(f) = frame_from_normal(&n, &anchor) {
                prop_assert!(f.orthonormality_error() < 1e-12);
                prop_assert!((f.matrix().determinant() - 1.0).abs() < 1e-12);
                // First column is the normal itself.
                prop_assert!((f.matrix().column(0) - n).abs().max() < 1e-12);
            }
        }

        #[test]
        fn log_is_left_invariant(seed in 0u64..1u64 << 48) {
            let mut rng = substream(seed, "geom-prop");
            let g = sample_uniform_rotation(&mut rng);
            let a = sample_uniform_rotation(&mut rng);
            let b = sample_uniform_rotation(&mut rng);
            let direct = log_map(&a, &b);
            let shifted = log_map(&g.compose(&a), &g.compose(&b));
            match (direct, shifted) {
                (Ok(u), Ok(v)) => prop_assert!((u.0 - v.0).norm() < 1e-9),
                (Err(_), Err(_)) => {}
                // The cut-locus guard may flip on borderline angles; only a
                // hair-width band around π is allowed to disagree.
                (Ok(u), Err(_)) => prop_assert!(u.angle() > PI - 1e-4),
                (Err(_), Ok(v)) => prop_assert!(v.angle() > PI - 1e-4),
            }
        }
    }
}
