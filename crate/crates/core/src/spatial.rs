//! Uniform-grid point index with exact nearest-neighbor and radius queries.
//!
//! Cells are cubes of a caller-chosen size; nearest-neighbor search expands
//! cell shells outward until no closer point can exist, so results are exact
//! regardless of the cell size. Ties on distance resolve to the lowest point
//! index, independent of scan order.

use nalgebra::Vector3;
use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct PointIndex {
    cell: f64,
    cells: HashMap<(i64, i64, i64), Vec<usize>>,
    points: Vec<Vector3<f64>>,
}

fn key(p: &Vector3<f64>, cell: f64) -> (i64, i64, i64) {
    (
        (p.x / cell).floor() as i64,
        (p.y / cell).floor() as i64,
        (p.z / cell).floor() as i64,
    )
}

impl PointIndex {
    pub fn build(points: &[Vector3<f64>], cell: f64) -> Self {
        assert!(cell.is_finite() && cell > 0.0, "cell size must be positive");
        let mut cells: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(key(p, cell)).or_default().push(i);
        }
        PointIndex { cell, cells, points: points.to_vec() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Exact nearest neighbor: `(index, distance)`, lowest index on ties.
    pub fn nearest(&self, q: &Vector3<f64>) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let (cx, cy, cz) = key(q, self.cell);
        let mut best: Option<(f64, usize)> = None;
        let mut ring = 0i64;
        loop {
            // Any point in a cell of Chebyshev ring k is at least (k-1)
            // cells away from the query point.
            if let Some((bd, _)) = best {
                if ring >= 2 && ((ring - 1) as f64 * self.cell) > bd.sqrt() {
                    break;
                }
            }
            let mut saw_any = false;
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    for dz in -ring..=ring {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                            continue;
                        }
                        if let Some(ids) = self.cells.get(&(cx + dx, cy + dy, cz + dz)) {
                            saw_any = true;
                            for &i in ids {
                                let d2 = (self.points[i] - q).norm_squared();
                                let better = match best {
                                    None => true,
                                    Some((bd, bi)) => d2 < bd || (d2 == bd && i < bi),
                                };
                                if better {
                                    best = Some((d2, i));
                                }
                            }
                        }
                    }
                }
            }
            // Expand far enough to cover sparse grids: once something was
            // found the termination bound above takes over.
            if best.is_none() && !saw_any && ring as usize > 2 * self.points.len() + 2 {
                // All points live in finitely many cells; brute-force the
                // remainder rather than walking shells forever.
                for (i, p) in self.points.iter().enumerate() {
                    let d2 = (p - q).norm_squared();
                    let better = match best {
                        None => true,
                        Some((bd, bi)) => d2 < bd || (d2 == bd && i < bi),
                    };
                    if better {
                        best = Some((d2, i));
                    }
                }
                break;
            }
            ring += 1;
        }
        best.map(|(d2, i)| (i, d2.sqrt()))
    }

    /// Indices of all points with `distance(q, p) <= r`, ascending.
    pub fn within(&self, q: &Vector3<f64>, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        let lo = key(&(q - Vector3::repeat(r)), self.cell);
        let hi = key(&(q + Vector3::repeat(r)), self.cell);
        let r2 = r * r;
        for x in lo.0..=hi.0 {
            for y in lo.1..=hi.1 {
                for z in lo.2..=hi.2 {
                    if let Some(ids) = self.cells.get(&(x, y, z)) {
                        for &i in ids {
                            if (self.points[i] - q).norm_squared() <= r2 {
                                out.push(i);
                            }
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use rand::Rng;

    fn cloud(n: usize, seed: u64, scale: f64) -> Vec<Vector3<f64>> {
        let mut rng = substream(seed, "spatial");
        (0..n)
            .map(|_| {
                Vector3::new(
                    (rng.gen::<f64>() - 0.5) * scale,
                    (rng.gen::<f64>() - 0.5) * scale,
                    (rng.gen::<f64>() - 0.5) * scale,
                )
            })
            .collect()
    }

    fn brute_nearest(points: &[Vector3<f64>], q: &Vector3<f64>) -> (usize, f64) {
        let mut best = (0usize, f64::INFINITY);
        for (i, p) in points.iter().enumerate() {
            let d = (p - q).norm();
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    #[test]
    fn nearest_matches_brute_force() {
        for &(n, cell) in &[(50usize, 1.0), (300, 0.25), (300, 5.0), (7, 0.1)] {
            let pts = cloud(n, 100 + n as u64, 10.0);
            let idx = PointIndex::build(&pts, cell);
            let queries = cloud(200, 999, 14.0);
            for q in &queries {
                let (gi, gd) = idx.nearest(q).unwrap();
                let (bi, bd) = brute_nearest(&pts, q);
                assert_eq!(gi, bi, "cell={cell} n={n}");
                assert!((gd - bd).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn within_matches_brute_force() {
        let pts = cloud(200, 7, 8.0);
        let idx = PointIndex::build(&pts, 1.3);
        let queries = cloud(50, 8, 10.0);
        for q in &queries {
            for &r in &[0.5, 2.0, 6.0] {
                let got = idx.within(q, r);
                let want: Vec<usize> = (0..pts.len())
                    .filter(|&i| (pts[i] - q).norm() <= r)
                    .collect();
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn empty_index_has_no_neighbor() {
        let idx = PointIndex::build(&[], 1.0);
        assert!(idx.nearest(&Vector3::zeros()).is_none());
        assert!(idx.within(&Vector3::zeros(), 5.0).is_empty());
    }

    #[test]
    fn faraway_query_still_finds_the_cloud() {
        let pts = cloud(20, 3, 2.0);
        let idx = PointIndex::build(&pts, 0.5);
        let q = Vector3::new(500.0, -300.0, 900.0);
        let (gi, gd) = idx.nearest(&q).unwrap();
        let (bi, bd) = brute_nearest(&pts, &q);
        assert_eq!(gi, bi);
        assert!((gd - bd).abs() < 1e-9);
    }

    #[test]
    fn ties_resolve_to_lowest_index() {
        let pts = vec![
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(-1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
        ];
        let idx = PointIndex::build(&pts, 0.7);
        let (i, _) = idx.nearest(&Vector3::zeros()).unwrap();
        assert_eq!(i, 0);
    }
}
