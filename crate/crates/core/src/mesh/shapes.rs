//! Simple parametric meshes used as fixtures and seeds.

use std::f64::consts::PI;

use super::TriMesh;
use crate::error::{Error, Result};
use crate::Vec3;

/// Triangulate the strip between two concentric rings given by increasing
/// angles in [0, 2π). Faces are counterclockwise seen from +z.
fn ring_strip(inner: &[(usize, f64)], outer: &[(usize, f64)], faces: &mut Vec<[usize; 3]>) {
    let (m, n) = (inner.len(), outer.len());
    if m == 1 {
        for j in 0..n {
            faces.push([inner[0].0, outer[j].0, outer[(j + 1) % n].0]);
        }
        return;
    }
    let ang = |ring: &[(usize, f64)], i: usize| ring[i % ring.len()].1 + 2.0 * PI * (i / ring.len()) as f64;
    let (mut i, mut j) = (0, 0);
    while i < m || j < n {
        let advance_outer = if i == m {
            true
        } else if j == n {
            false
        } else {
            ang(outer, j + 1) <= ang(inner, i + 1)
        };
        if advance_outer {
            faces.push([inner[i % m].0, outer[j % n].0, outer[(j + 1) % n].0]);
            j += 1;
        } else {
            faces.push([inner[i % m].0, outer[j % n].0, inner[(i + 1) % m].0]);
            i += 1;
        }
    }
}

/// Graph z = f(r) over the disk of radius `radius`, built from `rings`
/// concentric rings with 6j nodes on ring j. The boundary is attached to its
/// circle and the normal has positive z-component.
pub fn radial_graph(radius: f64, rings: usize, f: impl Fn(f64) -> f64) -> Result<TriMesh> {
    if !(radius > 0.0) || rings == 0 {
        return Err(Error::InvalidParameter("radius > 0 and at least one ring required".into()));
    }
    let mut positions = vec![Vec3::new(0.0, 0.0, f(0.0))];
    let mut prev = vec![(0usize, 0.0)];
    let mut faces = Vec::new();
    for j in 1..=rings {
        let r = radius * j as f64 / rings as f64;
        let n = 6 * j;
        // stagger alternate rings so the strips are closer to equilateral
        let offset = if j % 2 == 0 { PI / n as f64 } else { 0.0 };
        let mut ring = Vec::with_capacity(n);
        for i in 0..n {
            let t = offset + 2.0 * PI * i as f64 / n as f64;
            ring.push((positions.len(), t));
            positions.push(Vec3::new(r * t.cos(), r * t.sin(), f(r)));
        }
        ring_strip(&prev, &ring, &mut faces);
        prev = ring;
    }
    let mut mesh = TriMesh::new(positions, faces)?;
    mesh.attach_loops_to_circles();
    Ok(mesh)
}

/// Flat disk of radius `radius` in the plane {z = 0}.
pub fn flat_disk(radius: f64, rings: usize) -> Result<TriMesh> {
    radial_graph(radius, rings, |_| 0.0)
}

/// Round sphere of radius `radius`: an icosahedron subdivided `level` times
/// and projected, with outward normals.
pub fn sphere(radius: f64, level: usize) -> Result<TriMesh> {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut p: Vec<Vec3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|v| Vec3::new(v[0], v[1], v[2]).normalize() * radius)
    .collect();
    let f = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let mut mesh = TriMesh::new(p.clone(), f)?;
    for _ in 0..level {
        mesh = mesh.subdivided()?;
        p = mesh.positions().iter().map(|v| v.normalize() * radius).collect();
        mesh.positions_mut().copy_from_slice(&p);
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::euler_and_genus;

    #[test]
    fn disk_is_a_disk() {
        let d = flat_disk(1.0, 12).unwrap();
        let t = euler_and_genus(&d).unwrap();
        assert_eq!((t.chi, t.boundary_loops), (1, 1));
        assert!(d.min_quality() > 0.6);
        let n = (d.faces()[0], d.positions());
        let [a, b, c] = n.0;
        assert!((n.1[b] - n.1[a]).cross(&(n.1[c] - n.1[a])).z > 0.0);
    }

    #[test]
    fn sphere_area() {
        let s = sphere(2.0, 4).unwrap();
        assert_eq!(euler_and_genus(&s).unwrap().chi, 2);
        assert!((s.total_area() - 16.0 * PI).abs() < 0.01 * 16.0 * PI);
    }
}
