//! Heuristic seed for a big surface with boundary C(s): three stacked sheets
//! through the central ball, joined by necks.
//!
//! The upper and lower sheets are the graphs of the leaves f_{±s} over the
//! disks bounded by the outer circles, the middle sheet is the flat disk
//! bounded by the equator. The upper and middle sheets are joined by a neck
//! on every even mirror plane θ = 2jπ/k, the middle and lower sheets on
//! every odd one; the half-turns about Q_k exchange the two families, so
//! the seed is G_k-invariant. There are 2k necks, χ = 3 − 4k and the genus
//! is 2k − 2.

use std::f64::consts::PI;

use super::planar::{triangulate, PlanarMesh};
use super::seed::WELD_TOL;
use crate::error::{Error, Result};
use crate::foliation::{circle_of_leaf, integrate_profile};
use crate::mesh::{euler_and_genus, TriMesh};
use crate::symmetry::{half_turn_about_horizontal, SymmetryGroup};
use crate::Vec3;

#[derive(Debug, Clone, Copy)]
pub struct BigSeedOptions {
    /// Radius of the neck centres as a fraction of R.
    pub neck_at: f64,
    /// Neck radius as a fraction of its distance to the axis.
    pub neck_width: f64,
    /// Target edge length; default R/24.
    pub h: Option<f64>,
    /// Rows along each neck.
    pub neck_rows: usize,
    /// Waist of a neck relative to its mouth.
    pub waist: f64,
}

impl Default for BigSeedOptions {
    fn default() -> Self {
        Self {
            neck_at: 0.5,
            neck_width: 0.2,
            h: None,
            neck_rows: 4,
            waist: 0.7,
        }
    }
}

struct HalfWedge {
    mesh: PlanarMesh,
    /// Planar indices of the notch nodes, from inner to outer end.
    notch: Vec<usize>,
}

fn spaced(a: f64, b: f64, h: f64) -> Vec<f64> {
    let n = ((b - a) / h).ceil().max(1.0) as usize;
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

/// Half wedge 0 ≤ θ ≤ π/(2k), r0 ≤ r ≤ r1 in log-polar coordinates, with an
/// optional half-disc notch on θ = 0 centred at u = ln r_n.
fn half_wedge(k: usize, r0: f64, r1: f64, h: f64, notch: Option<(f64, f64)>) -> Result<HalfWedge> {
    let half = PI / (2.0 * k as f64);
    let (u0, u1) = (r0.ln(), r1.ln());
    // uniform physical spacing h is spacing h/r in log coordinates
    let du = |u: f64| h / u.exp();
    let along = |a: f64, b: f64| {
        let mut out = vec![a];
        let mut u = a;
        while u + 1.5 * du(u) < b {
            u += du(u);
            out.push(u);
        }
        out.push(b);
        out
    };
    let mut poly: Vec<[f64; 2]> = Vec::new();
    let mut notch_ids = Vec::new();
    match notch {
        Some((un, w)) => {
            for u in along(u0, un - w) {
                poly.push([u, 0.0]);
            }
            let n_arc = ((PI * w) / du(un)).ceil().max(6.0) as usize;
            notch_ids.push(poly.len() - 1);
            for i in 1..n_arc {
                let a = PI * i as f64 / n_arc as f64;
                notch_ids.push(poly.len());
                poly.push([un - w * a.cos(), w * a.sin()]);
            }
            for u in along(un + w, u1) {
                if u == un + w {
                    notch_ids.push(poly.len());
                }
                poly.push([u, 0.0]);
            }
        }
        None => {
            for u in along(u0, u1) {
                poly.push([u, 0.0]);
            }
        }
    }
    for t in spaced(0.0, half, du(u1)).into_iter().skip(1) {
        poly.push([u1, t]);
    }
    let top = along(u0, u1);
    for &u in top.iter().rev().skip(1) {
        poly.push([u, half]);
    }
    let mesh = triangulate(&poly, &|p: [f64; 2]| du(p[0]))?;
    Ok(HalfWedge { mesh, notch: notch_ids })
}

struct Soup {
    positions: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
}

impl Soup {
    /// Append a half wedge lifted to height `z(r)`, mirrored onto
    /// π/(2k) ≤ θ ≤ π/k when `reflect`. Returns the vertex ids of its planar nodes.
    fn add_sheet(&mut self, w: &HalfWedge, k: usize, z: &dyn Fn(f64) -> f64, reflect: bool) -> Vec<usize> {
        let off = self.positions.len();
        let top = PI / k as f64;
        for p in &w.mesh.points {
            let r = p[0].exp();
            let t = if reflect { top - p[1] } else { p[1] };
            self.positions.push(Vec3::new(r * t.cos(), r * t.sin(), z(r)));
        }
        let ids: Vec<usize> = (off..self.positions.len()).collect();
        self.faces.extend(w.mesh.triangles.iter().map(|t| [ids[t[0]], ids[t[1]], ids[t[2]]]));
        // close the centre with one fan triangle between the two corners at r0
        let r0 = w.mesh.points[0][0].exp();
        let c = self.positions.len();
        self.positions.push(Vec3::new(0.0, 0.0, z(0.0)));
        let corner = w
            .mesh
            .points
            .iter()
            .enumerate()
            .filter(|(_, p)| (p[0] - r0.ln()).abs() < 1e-12 && p[1] > 0.0)
            .map(|(i, _)| i)
            .next()
            .expect("half wedge has an inner corner on the Q line");
        self.faces.push([c, ids[0], ids[corner]]);
        ids
    }
}

/// The three-sheet big seed for C(s) on the sphere of radius `radius`.
pub fn seed_big(s: f64, k: usize, radius: f64, opts: &BigSeedOptions) -> Result<TriMesh> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!("leaf label must be positive, got {s}")));
    }
    if !(opts.neck_at > 0.0 && opts.neck_at < 1.0) || !(opts.neck_width > 0.0 && opts.neck_width < 0.5) {
        return Err(Error::InvalidParameter("neck_at in (0, 1) and neck_width in (0, 0.5) required".into()));
    }
    if opts.neck_rows < 2 || !(opts.waist > 0.0 && opts.waist <= 1.0) {
        return Err(Error::InvalidParameter("neck_rows ≥ 2 and waist in (0, 1] required".into()));
    }
    let (rho_s, _) = circle_of_leaf(s, radius)?;
    let profile = integrate_profile(s, radius)?;
    let h = opts.h.unwrap_or(radius / 24.0);
    let half = PI / (2.0 * k as f64);
    // inner corner one edge length across
    let r0 = h / half;
    let r_n = opts.neck_at * rho_s;
    let w = opts.neck_width;
    if r_n * (-w).exp() <= 2.0 * r0 || r_n * w.exp() >= rho_s - 2.0 * h {
        return Err(Error::InvalidParameter("necks do not fit between the centre and the upper circle".into()));
    }
    let notch = Some((r_n.ln(), w));
    let upper_notched = half_wedge(k, r0, rho_s, h, notch)?;
    let upper_plain = half_wedge(k, r0, rho_s, h, None)?;
    let middle = half_wedge(k, r0, radius, h, notch)?;

    let f = |r: f64| profile.eval(r).map(|v| v.0).unwrap_or(f64::NAN);
    let mut soup = Soup {
        positions: Vec::new(),
        faces: Vec::new(),
    };
    let up = soup.add_sheet(&upper_notched, k, &f, false);
    soup.add_sheet(&upper_plain, k, &f, true);
    let mid = soup.add_sheet(&middle, k, &|_| 0.0, false);
    soup.add_sheet(&middle, k, &|_| 0.0, true);

    // half neck from the upper notch down to the middle notch
    let centre = Vec3::new(r_n, 0.0, 0.0);
    let top_ring: Vec<usize> = upper_notched.notch.iter().map(|&i| up[i]).collect();
    let bottom_ring: Vec<usize> = middle.notch.iter().map(|&i| mid[i]).collect();
    if top_ring.len() != bottom_ring.len() {
        return Err(Error::MeshQuality("neck mouths have different node counts".into()));
    }
    let mut prev = top_ring.clone();
    for j in 1..=opts.neck_rows {
        let t = j as f64 / opts.neck_rows as f64;
        let row: Vec<usize> = if j == opts.neck_rows {
            bottom_ring.clone()
        } else {
            let pinch = 1.0 - (1.0 - opts.waist) * (PI * t).sin();
            top_ring
                .iter()
                .map(|&v| {
                    let p = soup.positions[v];
                    let mut q = centre + (p - centre) * pinch;
                    q.z = (1.0 - t) * p.z;
                    soup.positions.push(q);
                    soup.positions.len() - 1
                })
                .collect()
        };
        for i in 0..row.len() - 1 {
            soup.faces.push([prev[i], prev[i + 1], row[i + 1]]);
            soup.faces.push([prev[i], row[i + 1], row[i]]);
        }
        prev = row;
    }
    if soup.positions.iter().any(|p| !p.z.is_finite()) {
        return Err(Error::Geometry("leaf profile does not cover the upper disk".into()));
    }

    // lower sheet and its necks: half-turn image of the upper sheet and necks
    let upper_count = mid[0];
    let half_turn = half_turn_about_horizontal(half);
    let off = soup.positions.len();
    let upper_vertices: Vec<usize> = (up[0]..upper_count)
        .chain(upper_count + 2 * (middle.mesh.points.len() + 1)..off)
        .collect();
    let mut image = vec![usize::MAX; off];
    for &v in &upper_vertices {
        image[v] = soup.positions.len();
        soup.positions.push(half_turn * soup.positions[v]);
    }
    let extra: Vec<[usize; 3]> = soup
        .faces
        .iter()
        .filter(|t| t.iter().all(|&v| image[v] != usize::MAX))
        .map(|t| [image[t[0]], image[t[1]], image[t[2]]])
        .collect();
    // neck faces touching the middle notch map onto the middle sheet's other notch
    let mixed: Vec<[usize; 3]> = soup
        .faces
        .iter()
        .filter(|t| t.iter().any(|&v| image[v] != usize::MAX) && t.iter().any(|&v| image[v] == usize::MAX))
        .copied()
        .collect();
    let mut pos_extra = Vec::new();
    let mut faces_extra = Vec::new();
    for t in mixed {
        let mut nt = [0; 3];
        for (i, &v) in t.iter().enumerate() {
            nt[i] = if image[v] != usize::MAX {
                image[v]
            } else {
                pos_extra.push(half_turn * soup.positions[v]);
                soup.positions.len() + pos_extra.len() - 1
            };
        }
        faces_extra.push(nt);
    }
    soup.positions.extend(pos_extra);
    soup.faces.extend(extra);
    soup.faces.extend(faces_extra);

    // copy the wedge 0 ≤ θ ≤ π/k around the axis
    let group = SymmetryGroup::build(k)?.z_preserving();
    let mut all_pos = Vec::new();
    let mut all_faces = Vec::new();
    for m in group.elements() {
        let base = all_pos.len();
        all_pos.extend(soup.positions.iter().map(|p| m * p));
        all_faces.extend(soup.faces.iter().map(|t| [t[0] + base, t[1] + base, t[2] + base]));
    }
    let mut mesh = TriMesh::from_soup(all_pos, all_faces, WELD_TOL * radius)?;
    let topo = euler_and_genus(&mesh)?;
    let chi = 3 - 4 * k as i64;
    if topo.chi != chi || topo.boundary_loops != 3 {
        return Err(Error::Topology(format!(
            "big seed has χ = {}, {} boundary loops; expected χ = {chi} and 3",
            topo.chi, topo.boundary_loops
        )));
    }
    mesh.attach_loops_to_circles();
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::VertexAction;

    #[test]
    fn big_seed_topology_and_symmetry() {
        let m = seed_big(0.1, 3, 2.0, &BigSeedOptions::default()).unwrap();
        let t = euler_and_genus(&m).unwrap();
        assert_eq!((t.chi, t.boundary_loops, t.genus), (-9, 3, 4));
        let g = SymmetryGroup::build(3).unwrap();
        let action = VertexAction::discover(m.positions(), &g).unwrap();
        assert!(action.residual(m.positions()) < 1e-9);
        assert!(m.min_quality() > 0.05, "quality {}", m.min_quality());
    }
}
