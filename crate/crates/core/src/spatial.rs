//! Hash-grid point lookup used for vertex matching and welding.

use std::collections::HashMap;

use crate::Vec3;

/// Bucketed point set answering "nearest point within `tol`" queries.
pub struct PointLocator {
    cell: f64,
    buckets: HashMap<(i64, i64, i64), Vec<usize>>,
    points: Vec<Vec3>,
}

impl PointLocator {
    pub fn new(points: &[Vec3], tol: f64) -> Self {
        let cell = (tol * 4.0).max(1e-12);
        let mut buckets: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(key(p, cell)).or_default().push(i);
        }
        Self {
            cell,
            buckets,
            points: points.to_vec(),
        }
    }

    /// All indices within `tol` of `q`, in increasing index order.
    pub fn within(&self, q: &Vec3, tol: f64) -> Vec<usize> {
        let (cx, cy, cz) = key(q, self.cell);
        let reach = (tol / self.cell).ceil() as i64;
        let mut out = Vec::new();
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                for dz in -reach..=reach {
                    if let Some(b) = self.buckets.get(&(cx + dx, cy + dy, cz + dz)) {
                        for &i in b {
                            if (self.points[i] - q).norm() <= tol {
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

    /// Nearest point within `tol`; ties go to the lowest index.
    pub fn nearest(&self, q: &Vec3, tol: f64) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for i in self.within(q, tol) {
            let d = (self.points[i] - q).norm();
            match best {
                Some((bd, _)) if bd <= d => {}
                _ => best = Some((d, i)),
            }
        }
        best.map(|(_, i)| i)
    }
}

fn key(p: &Vec3, cell: f64) -> (i64, i64, i64) {
    (
        (p.x / cell).floor() as i64,
        (p.y / cell).floor() as i64,
        (p.z / cell).floor() as i64,
    )
}
