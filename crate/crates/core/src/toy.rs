//! Synthetic toy datasets exercising every flow family end to end, plus the
//! sample-based distribution distances used to score generated sets.
//!
//! Each generator is a small closed-form distribution whose ground truth is
//! known exactly, so trained models can be validated against analytic
//! statistics rather than against other learned models.

use crate::geom3d::{exp_map, Rotation};
use crate::surface::{Atom, Element};
use nalgebra::Vector3;
use ndarray::Array1;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::TAU;

/// Number of components in the planar Gaussian-mixture toy.
pub const EIGHT_GAUSS_COMPONENTS: usize = 8;

/// Number of symbols in the categorical toy (mask excluded).
pub const MULTINOMIAL_SYMBOLS: usize = 20;

/// Number of modes in the rotation toy.
pub const SO3_MODES: usize = 4;

/// Per-angle centers of the torsion toy, in `[0, 2π)`.
pub const TORUS_CENTERS: [f64; 4] = [0.8, 2.0, 3.5, 5.0];

/// Mean of the continuous-feature toy.
pub const CON_MEAN: [f64; 2] = [0.4, -0.3];

/// Cluster half-separation of the guidance toy: centers at `(±X, 0)`.
pub const TWO_CLUSTER_X: f64 = 4.0;

/// Cluster standard deviation of the guidance toy.
pub const TWO_CLUSTER_SIGMA: f64 = 0.5;

/// Mean of mixture component `k`: on the circle of radius `ring_radius`,
/// spaced 45° apart starting from the positive x axis.
pub fn eight_gaussian_mean(k: usize, ring_radius: f64) -> (f64, f64) {
    let a = TAU * (k % EIGHT_GAUSS_COMPONENTS) as f64 / EIGHT_GAUSS_COMPONENTS as f64;
    (ring_radius * a.cos(), ring_radius * a.sin())
}

/// One draw from the eight-Gaussian mixture: uniform component, isotropic
/// `sigma` noise.
pub fn eight_gaussian_sample<R: Rng + ?Sized>(
    ring_radius: f64,
    sigma: f64,
    rng: &mut R,
) -> (f64, f64) {
    let k = rng.gen_range(0..EIGHT_GAUSS_COMPONENTS);
    let (mx, my) = eight_gaussian_mean(k, ring_radius);
    let gx: f64 = rng.sample(StandardNormal);
    let gy: f64 = rng.sample(StandardNormal);
    (mx + sigma * gx, my + sigma * gy)
}

/// The fixed categorical toy distribution: `p_i ∝ i + 1` over 20 symbols.
pub fn multinomial_probs() -> [f64; MULTINOMIAL_SYMBOLS] {
    let mut p = [0.0; MULTINOMIAL_SYMBOLS];
    let z = (MULTINOMIAL_SYMBOLS * (MULTINOMIAL_SYMBOLS + 1) / 2) as f64;
    for (i, q) in p.iter_mut().enumerate() {
        *q = (i + 1) as f64 / z;
    }
    p
}

/// One symbol from [`multinomial_probs`] by inverse CDF.
pub fn multinomial_sample<R: Rng + ?Sized>(rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in multinomial_probs().iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    MULTINOMIAL_SYMBOLS - 1
}

/// Mode `k` of the rotation toy: four fixed rotations well separated on
/// SO(3) and clear of the cut locus.
pub fn so3_mode(k: usize) -> Rotation {
    let axes = [
        Vector3::new(0.5, 0.0, 0.0),
        Vector3::new(0.0, 1.2, 0.0),
        Vector3::new(0.0, 0.0, 2.0),
        Vector3::new(1.1, 1.1, 1.1),
    ];
    exp_map(&Rotation::identity(), &axes[k % SO3_MODES])
}

/// One rotation near a uniformly chosen mode, perturbed by a tangent draw of
/// scale `spread`.
pub fn so3_target_sample<R: Rng + ?Sized>(spread: f64, rng: &mut R) -> Rotation {
    let k = rng.gen_range(0..SO3_MODES);
    let d = Vector3::new(
        rng.sample::<f64, _>(StandardNormal),
        rng.sample::<f64, _>(StandardNormal),
        rng.sample::<f64, _>(StandardNormal),
    ) * spread;
    exp_map(&so3_mode(k), &d)
}

/// One torsion draw: each of the four angles is its center plus `spread`
/// Gaussian noise, wrapped into `[0, 2π)`.
pub fn torus_sample<R: Rng + ?Sized>(spread: f64, rng: &mut R) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (x, c) in out.iter_mut().zip(TORUS_CENTERS.iter()) {
        let g: f64 = rng.sample(StandardNormal);
        *x = (c + spread * g).rem_euclid(TAU);
    }
    out
}

/// One continuous-feature draw: [`CON_MEAN`] plus `spread` Gaussian noise,
/// clamped to the feature range `[-1, 1]`.
pub fn con_sample<R: Rng + ?Sized>(spread: f64, rng: &mut R) -> [f64; 2] {
    let mut out = [0.0; 2];
    for (x, m) in out.iter_mut().zip(CON_MEAN.iter()) {
        let g: f64 = rng.sample(StandardNormal);
        *x = (m + spread * g).clamp(-1.0, 1.0);
    }
    out
}

/// One draw from the two-cluster guidance toy: `N((±X, 0), σ²I)` with the
/// sign picked by `right`.
pub fn two_cluster_sample<R: Rng + ?Sized>(right: bool, rng: &mut R) -> (f64, f64) {
    let cx = if right { TWO_CLUSTER_X } else { -TWO_CLUSTER_X };
    let gx: f64 = rng.sample(StandardNormal);
    let gy: f64 = rng.sample(StandardNormal);
    (cx + TWO_CLUSTER_SIGMA * gx, TWO_CLUSTER_SIGMA * gy)
}

/// A synthetic molecule: a residue chain on a 3.8 Å random walk. Every
/// residue gets a C-alpha plus backbone-like N, O and C neighbors; some get
/// a sulfur or a polar hydrogen so all chemistry labels occur.
pub fn synth_atoms<R: Rng + ?Sized>(n_residues: usize, rng: &mut R) -> Vec<Atom> {
    assert!(n_residues > 0);
    let mut atoms = Vec::new();
    let mut center = Vector3::zeros();
    for res in 0..n_residues {
        let residue_type = rng.gen_range(0..20);
        let push = |atoms: &mut Vec<Atom>, pos: Vector3<f64>, e: Element, ca: bool, q: f64| {
            atoms.push(Atom {
                pos,
                element: e,
                vdw_radius: e.vdw_radius(),
                residue_index: res,
                residue_type,
                is_calpha: ca,
                charge: q,
            });
        };
        let q = 10.0 * rng.sample::<f64, _>(StandardNormal);
        push(&mut atoms, center, Element::C, true, q);
        let n_pos = center + 1.46 * random_direction(rng);
        push(&mut atoms, n_pos, Element::N, false, q + 2.0);
        push(&mut atoms, center + 1.23 * random_direction(rng), Element::O, false, q - 2.0);
        push(&mut atoms, center + 1.52 * random_direction(rng), Element::C, false, q);
        if rng.gen::<f64>() < 0.3 {
            push(&mut atoms, n_pos + 1.0 * random_direction(rng), Element::H, false, 0.0);
        }
        if rng.gen::<f64>() < 0.15 {
            push(&mut atoms, center + 1.8 * random_direction(rng), Element::S, false, q);
        }
        center += 3.8 * random_direction(rng);
    }
    atoms
}

fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        let n = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

/// Squared energy distance between two samples (V-statistic):
/// `2·E‖X−Y‖ − E‖X−X'‖ − E‖Y−Y'‖`. Zero for identical sets, positive
/// when the underlying distributions differ.
pub fn energy_distance(a: &[Array1<f64>], b: &[Array1<f64>]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "energy distance needs non-empty sets");
    let d = a[0].len();
    assert!(
        a.iter().chain(b.iter()).all(|x| x.len() == d),
        "energy distance needs a consistent dimension"
    );
    let dist = |x: &Array1<f64>, y: &Array1<f64>| -> f64 {
        x.iter().zip(y.iter()).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
    };
    let mean_pairs = |x: &[Array1<f64>], y: &[Array1<f64>]| -> f64 {
        let mut s = 0.0;
        for xi in x {
            for yj in y {
                s += dist(xi, yj);
            }
        }
        s / (x.len() as f64 * y.len() as f64)
    };
    2.0 * mean_pairs(a, b) - mean_pairs(a, a) - mean_pairs(b, b)
}

/// Total variation distance `½ Σ|p_i − q_i|` between two finite
/// distributions of equal length.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "total variation needs equal supports");
    0.5 * p.iter().zip(q.iter()).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Empirical frequencies of `samples` over symbols `0..k`.
pub fn empirical_frequencies(samples: &[usize], k: usize) -> Vec<f64> {
    let mut f = vec![0.0; k];
    for &s in samples {
        assert!(s < k, "symbol {s} outside 0..{k}");
        f[s] += 1.0;
    }
    let n = samples.len().max(1) as f64;
    f.iter_mut().for_each(|x| *x /= n);
    f
}
