//! Seed surfaces: the comparison annulus bounded by C_s ∪ Γ(ε), its
//! half-turn double, and the capped surface with three boundary circles.

use std::f64::consts::PI;

use super::planar::triangulate;
use crate::error::{Error, Result};
use crate::foliation::circle_of_leaf;
use crate::mesh::{euler_and_genus, Curve, TriMesh};
use crate::symmetry::{half_turn_about_horizontal, SymmetryGroup};
use crate::Vec3;

/// Tolerance, relative to R, for identifying vertices across copies.
pub const WELD_TOL: f64 = 1e-9;

/// Mesh sizing for the annulus seed. Unset sizes derive from the circle height z_s.
#[derive(Debug, Clone, Copy)]
pub struct SeedOptions {
    /// Edge length at the Q_k points on the equator; default z_s/6.
    pub h_min: Option<f64>,
    /// Largest edge length; default R/16.
    pub h_max: Option<f64>,
    /// Growth of edge length per unit distance.
    pub grade: f64,
    /// Rows across the spherical band.
    pub band_rows: usize,
    /// Largest length/height ratio of band cells.
    pub band_aspect: f64,
}

impl Default for SeedOptions {
    fn default() -> Self {
        Self {
            h_min: None,
            h_max: None,
            grade: 0.25,
            band_rows: 6,
            band_aspect: 3.0,
        }
    }
}

/// Node positions in [0, length] whose spacing follows `size`; both ends included.
fn graded_nodes(length: f64, size: &dyn Fn(f64) -> f64) -> Vec<f64> {
    let m = 4000;
    let mut cum = vec![0.0; m + 1];
    for i in 0..m {
        let t = length * (i as f64 + 0.5) / m as f64;
        cum[i + 1] = cum[i] + (length / m as f64) / size(t);
    }
    let n = cum[m].round().max(1.0) as usize;
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    let mut j = 0;
    for i in 1..n {
        let target = cum[m] * i as f64 / n as f64;
        while cum[j + 1] < target {
            j += 1;
        }
        let f = (target - cum[j]) / (cum[j + 1] - cum[j]);
        out.push(length * (j as f64 + f) / m as f64);
    }
    out.push(length);
    out
}

/// Height of the lifted seam on the mirror line, as a fraction of the circle height.
const SEAM_LIFT: f64 = 0.25;

/// The comparison annulus bounded by the upper circle C_s and Γ(ε): the
/// spherical band between C_s and the equator, joined along the odd arcs to
/// the odd sectors of D_R ∖ D_ε. Built on the wedge 0 ≤ θ ≤ π/k and copied by
/// the 2k vertical reflections and rotations.
pub fn seed_annulus(s: f64, eps: f64, k: usize, radius: f64, opts: &SeedOptions) -> Result<TriMesh> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!("leaf label must be positive, got {s}")));
    }
    if !(eps > 0.0) || eps >= radius {
        return Err(Error::InvalidParameter(format!("need 0 < ε < R, got ε = {eps}")));
    }
    if opts.band_rows < 2 || !(opts.grade > 0.0) || !(opts.band_aspect >= 1.0) {
        return Err(Error::InvalidParameter("band_rows ≥ 2, grade > 0 and band_aspect ≥ 1 required".into()));
    }
    let (rho_s, z_s) = circle_of_leaf(s, radius)?;
    let phi_s = z_s.atan2(rho_s);
    let kf = k as f64;
    let half = PI / (2.0 * kf);
    let h_min = opts.h_min.unwrap_or(z_s / 6.0);
    let h_max = opts.h_max.unwrap_or(radius / 16.0).max(h_min);
    let g = opts.grade;
    let nb = opts.band_rows;
    let row = radius * phi_s / nb as f64;
    let h_band = (opts.band_aspect * row).min(h_max).max(h_min);

    // band columns, symmetric about the Q point at θ = π/(2k)
    let side = graded_nodes(radius * half, &|t| (h_min + g * t).min(h_band));
    let mut theta: Vec<f64> = side.iter().rev().map(|t| half - t / radius).collect();
    theta.extend(side.iter().skip(1).map(|t| half + t / radius));
    theta[0] = 0.0;
    *theta.last_mut().unwrap() = 2.0 * half;
    let nt = theta.len();
    let iq = side.len() - 1;

    let mut positions: Vec<Vec3> = Vec::new();
    for j in 0..=nb {
        let phi = phi_s * (1.0 - j as f64 / nb as f64);
        let (rz, z) = if j == 0 { (rho_s, z_s) } else { (radius * phi.cos(), radius * phi.sin()) };
        for &t in &theta {
            positions.push(Vec3::new(rz * t.cos(), rz * t.sin(), if j == nb { 0.0 } else { z }));
        }
    }
    let band_idx = |j: usize, i: usize| j * nt + i;
    let mut faces: Vec<[usize; 3]> = Vec::new();
    for j in 0..nb {
        for i in 0..nt - 1 {
            let (a, b, c, d) = (band_idx(j, i), band_idx(j, i + 1), band_idx(j + 1, i), band_idx(j + 1, i + 1));
            faces.push([a, b, d]);
            faces.push([a, d, c]);
        }
    }

    // flat half odd sector, counterclockwise: outer arc, mirror line, inner arc, Q line
    let q = [radius * half.cos(), radius * half.sin()];
    let n_in = ((eps * half) / h_min.max(eps * half / 8.0)).ceil().clamp(2.0, 8.0) as usize;
    let h_eps = eps * half / n_in as f64;
    let size = move |p: [f64; 2]| -> f64 {
        let r = p[0].hypot(p[1]);
        let dq = (p[0] - q[0]).hypot(p[1] - q[1]);
        h_max
            .min(h_min + g * dq)
            .min(h_band + g * (radius - r).max(0.0))
            .min(h_eps + g * (r - eps).max(0.0))
    };
    // triangulate in log-polar coordinates (ln r, θ): conformal, and every
    // straight edge of the half sector becomes exactly axis-aligned
    let polar = |r: f64, t: f64| [r * t.cos(), r * t.sin()];
    let lp = |r: f64, t: f64| [r.ln(), t];
    let mut poly: Vec<[f64; 2]> = Vec::new();
    let mut poly_band: Vec<Option<usize>> = Vec::new();
    for i in iq..nt {
        poly.push(lp(radius, theta[i]));
        poly_band.push(Some(band_idx(nb, i)));
    }
    let mirror = graded_nodes(radius - eps, &|t| size(polar(radius - t, 2.0 * half)));
    for t in mirror.iter().skip(1) {
        poly.push(lp(radius - t, 2.0 * half));
        poly_band.push(None);
    }
    for i in 1..n_in {
        poly.push(lp(eps, 2.0 * half - half * i as f64 / n_in as f64));
        poly_band.push(None);
    }
    let qline = graded_nodes(radius - eps, &|t| size(polar(eps + t, half)));
    for t in qline.iter().take(qline.len() - 1) {
        poly.push(lp(eps + t, half));
        poly_band.push(None);
    }
    let log_size = |p: [f64; 2]| {
        let r = p[0].exp();
        size(polar(r, p[1])) / r
    };
    let planar = triangulate(&poly, &log_size)?;
    let mut map = Vec::with_capacity(planar.points.len());
    for (i, p) in planar.points.iter().enumerate() {
        match poly_band.get(i).copied().flatten() {
            Some(b) => map.push(b),
            None => {
                map.push(positions.len());
                let xy = polar(p[0].exp(), p[1]);
                positions.push(Vec3::new(xy[0], xy[1], 0.0));
            }
        }
    }
    for t in &planar.triangles {
        faces.push([map[t[0]], map[t[1]], map[t[2]]]);
    }

    // band normals point toward the axis, flat normals up
    for f in faces.iter_mut() {
        let (a, b, c) = (positions[f[0]], positions[f[1]], positions[f[2]]);
        let n = (b - a).cross(&(c - a));
        let centroid = (a + b + c) / 3.0;
        let flat = a.z == 0.0 && b.z == 0.0 && c.z == 0.0;
        let reference = if flat { Vec3::z() } else { -Vec3::new(centroid.x, centroid.y, 0.0) };
        if n.dot(&reference) < 0.0 {
            f.swap(1, 2);
        }
    }
    for f in &faces {
        let (a, b, c) = (positions[f[0]], positions[f[1]], positions[f[2]]);
        if (b - a).cross(&(c - a)).norm() <= 1e-14 * radius * radius {
            return Err(Error::MeshQuality("degenerate triangle in the annulus seed".into()));
        }
    }

    // Over the odd half the seam between band and sector would sit on the
    // equator, where the half-turn image has its boundary. Slide it up the
    // sphere, weighted to vanish on the Q line and peak on the mirror line.
    let lift = |t: f64| if t > half { SEAM_LIFT * z_s * (kf * (t - half)).sin().powi(2) } else { 0.0 };
    let n_band = (nb + 1) * nt;
    for (v, p) in positions.iter_mut().enumerate() {
        let t = p.y.atan2(p.x);
        let zj = lift(t);
        if zj == 0.0 {
            continue;
        }
        let phi_j = (zj / radius).asin();
        if v < n_band {
            let j = v / nt;
            if j == 0 {
                continue;
            }
            let phi = phi_j + (phi_s - phi_j) * (1.0 - j as f64 / nb as f64);
            *p = Vec3::new(radius * phi.cos() * t.cos(), radius * phi.cos() * t.sin(), radius * phi.sin());
        } else {
            let r = p.xy().norm();
            let u = (r - eps) / (radius - eps);
            let r_new = eps + u * (radius * phi_j.cos() - eps);
            *p = Vec3::new(r_new * t.cos(), r_new * t.sin(), zj * u * u);
        }
    }

    let group = SymmetryGroup::build(k)?.z_preserving();
    let mut all_pos = Vec::new();
    let mut all_faces = Vec::new();
    for m in group.elements() {
        let off = all_pos.len();
        all_pos.extend(positions.iter().map(|p| m * p));
        let flip = m.determinant() < 0.0;
        all_faces.extend(faces.iter().map(|f| {
            if flip {
                [f[0] + off, f[2] + off, f[1] + off]
            } else {
                [f[0] + off, f[1] + off, f[2] + off]
            }
        }));
    }
    let mut mesh = TriMesh::new(all_pos, all_faces)?.welded(WELD_TOL * radius)?;
    let topo = euler_and_genus(&mesh)?;
    if topo.chi != 0 || topo.boundary_loops != 2 {
        return Err(Error::Topology(format!(
            "annulus seed has χ = {}, {} boundary loops",
            topo.chi, topo.boundary_loops
        )));
    }
    tag_annulus(&mut mesh, rho_s, z_s);
    Ok(mesh)
}

fn tag_annulus(mesh: &mut TriMesh, rho_s: f64, z_s: f64) {
    mesh.set_curves(Vec::new());
    let loops: Vec<(usize, Curve)> = mesh
        .boundary_loops()
        .iter()
        .enumerate()
        .map(|(i, lp)| {
            let top = lp.iter().all(|&v| mesh.position(v).z > 0.5 * z_s);
            let curve = if top {
                Curve::Circle { z: z_s, radius: rho_s }
            } else {
                Curve::Polyline {
                    points: lp
                        .iter()
                        .map(|&v| {
                            let p = mesh.position(v);
                            [p.x, p.y, p.z]
                        })
                        .collect(),
                }
            };
            (i, curve)
        })
        .collect();
    mesh.attach_loops_to_curves(&loops);
}

fn on_q_line(p: &Vec3, k: usize, tol: f64) -> bool {
    if p.z.abs() > tol {
        return false;
    }
    let r = p.x.hypot(p.y);
    if r <= tol {
        return true;
    }
    // θ = (2m+1)π/(2k) ⇔ the direction is fixed by a half-turn about that line
    (0..k).any(|m| {
        let t = (2 * m + 1) as f64 * PI / (2.0 * k as f64);
        (p.x * t.sin() - p.y * t.cos()).abs() <= tol
    })
}

/// Union of the annulus with its image under the half-turn about the Q_k line
/// at angle π/(2k), glued along the radial segments of Γ(ε). The result has
/// boundary C(s) ∪ ∂D_ε.
pub fn reflect_union(annulus: &TriMesh, k: usize) -> Result<TriMesh> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let scale = annulus
        .positions()
        .iter()
        .map(|p| p.norm())
        .fold(0.0, f64::max)
        .max(1.0);
    let tol = WELD_TOL * scale;
    let h = half_turn_about_horizontal(PI / (2.0 * k as f64));
    let image = annulus.transformed(&h).reversed()?;
    let q_vertices = annulus
        .positions()
        .iter()
        .enumerate()
        .filter(|(v, p)| annulus.is_boundary_vertex(*v) && on_q_line(p, k, tol))
        .count();
    if q_vertices == 0 {
        return Err(Error::Weld("annulus boundary has no vertices on the Q_k lines".into()));
    }
    let mut out = annulus
        .union_welded_where(&image, tol, |p| on_q_line(p, k, tol))
        .map_err(|e| Error::Weld(format!("gluing along Q_k failed: {e}")))?;
    let merged = annulus.num_vertices() + image.num_vertices() - out.num_vertices();
    if merged != q_vertices {
        return Err(Error::Weld(format!(
            "{q_vertices} vertices on the Q_k segments but {merged} were identified"
        )));
    }
    if out.boundary_loops().len() != 4 {
        return Err(Error::Weld(format!(
            "expected 4 boundary loops after gluing, found {}",
            out.boundary_loops().len()
        )));
    }
    out.attach_loops_to_circles();
    Ok(out)
}

/// Close the boundary loop of smallest radius with a fan around the origin.
pub fn cap_inner(mesh: &TriMesh) -> Result<TriMesh> {
    let li = mesh
        .boundary_loops()
        .iter()
        .enumerate()
        .map(|(i, lp)| {
            let r = lp.iter().map(|&v| mesh.position(v).norm()).fold(0.0, f64::max);
            (i, r)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|x| x.0)
        .ok_or_else(|| Error::Topology("mesh has no boundary".into()))?;
    let mut out = mesh.cap_loop(li, Vec3::zeros())?;
    out.attach_loops_to_circles();
    Ok(out)
}

/// Seed with three boundary circles: annulus, half-turn double, capped hole.
pub fn capped_seed(s: f64, eps: f64, k: usize, radius: f64, opts: &SeedOptions) -> Result<TriMesh> {
    let a = seed_annulus(s, eps, k, radius, opts)?;
    cap_inner(&reflect_union(&a, k)?)
}
