//! Classification and integral checks for computed expanders.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::boundary::{winding_number, BoundarySpec};
use crate::error::{Error, Result};
use crate::mesh::{euler_and_genus, slice_y0, BoundaryLabel, GeometryCache, TriMesh};
use crate::symmetry::{vertical_mirror, SymmetryGroup, VertexAction};
use crate::Vec3;

/// Version of the JSON layout of [`DiagnosticsReport`].
pub const SCHEMA_VERSION: u32 = 1;

/// Normalising constant of φ: 4 / (π (e⁻¹ − E₁(1))). With u = 4r² the planar
/// integral 2π∫₀^{1/2} e^{−1/(1−4r²)} r dr becomes (π/4)∫₀¹ e^{−1/v} dv, and
/// ∫₀¹ e^{−1/v} dv = e⁻¹ − E₁(1) = 0.148495506775922. The unit tests redo the
/// quadrature.
pub const PHI_C: f64 = 8.574_263_103_17;

/// Weighted-count threshold separating big from small surfaces.
pub const BIG_THRESHOLD: f64 = 1.5;
/// Forbidden band of the weighted count for admissible boundaries.
pub const GAP: (f64, f64) = (4.0 / 3.0, 5.0 / 3.0);
/// Relative slack allowed when checking that the monotonicity ratio increases.
pub const MONOTONE_SLACK: f64 = 1e-3;
/// Relative slack of the cone area bound.
pub const CONE_BOUND_SLACK: f64 = 0.01;
/// Dimension of the surfaces; enters η = 8m/λ and R_C.
pub const DIM_M: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SurfaceType {
    Type1,
    Type2,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SizeClass {
    Big,
    Small,
}

/// Bump function supported in B(0, 1/2) with unit integral over any plane
/// through the origin.
pub fn phi(p: &Vec3) -> f64 {
    let q = 1.0 - 4.0 * p.norm_squared();
    if q <= 0.0 {
        0.0
    } else {
        PHI_C * (-1.0 / q).exp()
    }
}

/// Sub-triangles per edge used for the φ quadrature.
const PHI_SPLIT: usize = 4;

/// ∫_M φ by the centroid rule on each face split into PHI_SPLIT² similar
/// triangles.
pub fn phi_integral(mesh: &TriMesh) -> f64 {
    let pos = mesh.positions();
    let n = PHI_SPLIT;
    let nf = n as f64;
    let mut total = 0.0;
    for (f, &[a, b, c]) in mesh.faces().iter().enumerate() {
        let (pa, pb, pc) = (pos[a], pos[b], pos[c]);
        // Skip faces that cannot reach the support.
        let g = (pa + pb + pc) / 3.0;
        let reach = (pa - g).norm().max((pb - g).norm()).max((pc - g).norm());
        if g.norm() - reach >= 0.5 {
            continue;
        }
        let eu = (pb - pa) / nf;
        let ev = (pc - pa) / nf;
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n - i {
                let (fi, fj) = (i as f64, j as f64);
                sum += phi(&(pa + eu * (fi + 1.0 / 3.0) + ev * (fj + 1.0 / 3.0)));
                if i + j + 1 < n {
                    sum += phi(&(pa + eu * (fi + 2.0 / 3.0) + ev * (fj + 2.0 / 3.0)));
                }
            }
        }
        total += sum * mesh.face_area(f) / (nf * nf);
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeReport {
    pub phi_integral: f64,
    pub size: SizeClass,
    /// The weighted count avoids the band GAP.
    pub dichotomy_ok: bool,
}

pub fn size_class(mesh: &TriMesh) -> SizeReport {
    let v = phi_integral(mesh);
    SizeReport {
        phi_integral: v,
        size: if v >= BIG_THRESHOLD { SizeClass::Big } else { SizeClass::Small },
        dichotomy_ok: !(GAP.0..=GAP.1).contains(&v),
    }
}

/// Type of a surface bounded by three curves, read off its slice by {y = 0}.
pub fn classify_type(mesh: &TriMesh) -> Result<SurfaceType> {
    let unavailable = |m: String| Error::ClassificationUnavailable(m);
    let loops = mesh.boundary_loops();
    if loops.len() != 3 {
        return Err(unavailable(format!("expected 3 boundary loops, found {}", loops.len())));
    }
    let pos = mesh.positions();
    for (i, l) in loops.iter().enumerate() {
        let pts: Vec<Vec3> = l.iter().map(|&v| pos[v]).collect();
        let w = winding_number(&pts);
        if (w.abs() - 1.0).abs() > 1e-6 {
            return Err(unavailable(format!("boundary loop {i} winds {w:.3} times around Z")));
        }
    }
    let mirror = SymmetryGroup::from_generators(&[vertical_mirror(0.0)]);
    let scale = pos.iter().map(|p| p.norm()).fold(1.0, f64::max);
    VertexAction::discover_with_tol(pos, &mirror, 1e-9 * scale)
        .map_err(|e| unavailable(format!("mesh is not invariant under y ↦ −y: {e}")))?;
    let slice = slice_y0(mesh);
    let labels = slice
        .labels()
        .ok_or_else(|| unavailable(format!("{} boundary points on {{y = 0, x > 0}}", slice.halfplane_endpoints.len())))?;
    let z: Vec<f64> = slice.halfplane_endpoints.iter().map(|e| e.0.z).collect();
    if z[0] - z[1] <= 1e-9 * scale || z[1] - z[2] <= 1e-9 * scale {
        return Err(unavailable("boundary points on {y = 0, x > 0} share a height".into()));
    }
    if slice.loops().next().is_some() {
        return Ok(SurfaceType::Other);
    }
    let poly_of = |lab: BoundaryLabel| labels.iter().find(|l| l.0 == lab).unwrap().1;
    let middle = poly_of(BoundaryLabel::Middle);
    Ok(if poly_of(BoundaryLabel::Upper) == middle {
        SurfaceType::Type1
    } else if poly_of(BoundaryLabel::Lower) == middle {
        SurfaceType::Type2
    } else {
        SurfaceType::Other
    })
}

/// Signed area of disk(0, r) ∩ triangle(0, a, b) in the plane.
fn disk_wedge_area(a: [f64; 2], b: [f64; 2], r: f64) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let (qa, qb, qc) = (
        d[0] * d[0] + d[1] * d[1],
        2.0 * (a[0] * d[0] + a[1] * d[1]),
        a[0] * a[0] + a[1] * a[1] - r * r,
    );
    let mut ts = vec![0.0];
    let disc = qb * qb - 4.0 * qa * qc;
    if qa > 0.0 && disc > 0.0 {
        let sq = disc.sqrt();
        for t in [(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)] {
            if t > 0.0 && t < 1.0 {
                ts.push(t);
            }
        }
    }
    ts.push(1.0);
    let at = |t: f64| [a[0] + t * d[0], a[1] + t * d[1]];
    let mut area = 0.0;
    for w in ts.windows(2) {
        let (p, q) = (at(w[0]), at(w[1]));
        let m = at(0.5 * (w[0] + w[1]));
        let cross = p[0] * q[1] - p[1] * q[0];
        if m[0] * m[0] + m[1] * m[1] <= r * r {
            area += 0.5 * cross;
        } else {
            let dot = p[0] * q[0] + p[1] * q[1];
            area += 0.5 * r * r * cross.atan2(dot);
        }
    }
    area
}

/// Area of the flat triangle (a, b, c) inside the ball B(0, r).
pub fn triangle_ball_area(a: &Vec3, b: &Vec3, c: &Vec3, r: f64) -> f64 {
    let n = (b - a).cross(&(c - a));
    let nn = n.norm();
    if nn == 0.0 {
        return 0.0;
    }
    let n = n / nn;
    let dist = a.dot(&n);
    if dist.abs() >= r {
        return 0.0;
    }
    let rho = (r * r - dist * dist).sqrt();
    let o = n * dist;
    let e1 = (b - a).normalize();
    let e2 = n.cross(&e1);
    let to2 = |p: &Vec3| {
        let q = p - o;
        [q.dot(&e1), q.dot(&e2)]
    };
    let (pa, pb, pc) = (to2(a), to2(b), to2(c));
    (disk_wedge_area(pa, pb, rho) + disk_wedge_area(pb, pc, rho) + disk_wedge_area(pc, pa, rho)).abs()
}

/// Euclidean area of M ∩ B(0, r).
pub fn area_in_ball(mesh: &TriMesh, r: f64) -> f64 {
    let pos = mesh.positions();
    mesh.faces()
        .iter()
        .map(|&[a, b, c]| triangle_ball_area(&pos[a], &pos[b], &pos[c], r))
        .sum()
}

/// Distance from the origin to the boundary edges.
pub fn boundary_clearance(mesh: &TriMesh) -> f64 {
    let pos = mesh.positions();
    let mut best = f64::INFINITY;
    for l in mesh.boundary_loops() {
        for i in 0..l.len() {
            let (a, b) = (pos[l[i]], pos[l[(i + 1) % l.len()]]);
            let d = b - a;
            let t = if d.norm_squared() > 0.0 {
                (-a.dot(&d) / d.norm_squared()).clamp(0.0, 1.0)
            } else {
                0.0
            };
            best = best.min((a + d * t).norm());
        }
    }
    best
}

/// ½∫_{∂M} |p| with the trapezoid rule on boundary edges.
pub fn cone_boundary_integral(mesh: &TriMesh) -> f64 {
    let pos = mesh.positions();
    let mut s = 0.0;
    for l in mesh.boundary_loops() {
        for i in 0..l.len() {
            let (a, b) = (pos[l[i]], pos[l[(i + 1) % l.len()]]);
            s += 0.5 * (a.norm() + b.norm()) * (b - a).norm();
        }
    }
    0.5 * s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityEntry {
    pub r: f64,
    pub ratio: f64,
    /// ∂M stays outside B(0, r), so the entry takes part in the monotone check.
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub series: Vec<MonotonicityEntry>,
    pub monotone_ok: bool,
    pub slack: f64,
    pub area: f64,
    /// ½∫_{∂M} |p|.
    pub cone_bound: f64,
    pub cone_bound_ok: bool,
}

impl MonotonicityReport {
    pub fn series_csv(&self) -> String {
        let mut s = String::from("r,ratio,valid\n");
        for e in &self.series {
            s.push_str(&format!("{:.10e},{:.12e},{}\n", e.r, e.ratio, e.valid));
        }
        s
    }
}

/// Ratio area(M ∩ B(0,r))/(πr²) at each radius, whether it increases over the
/// radii whose ball avoids ∂M, and the cone comparison area ≤ ½∫_{∂M}|p|.
pub fn monotonicity_series(mesh: &TriMesh, radii: &[f64]) -> Result<MonotonicityReport> {
    if radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidParameter("radii must be positive".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("radii must be increasing".into()));
    }
    let clearance = boundary_clearance(mesh);
    let series: Vec<MonotonicityEntry> = radii
        .iter()
        .map(|&r| MonotonicityEntry {
            r,
            ratio: area_in_ball(mesh, r) / (PI * r * r),
            valid: r < clearance,
        })
        .collect();
    let valid: Vec<f64> = series.iter().filter(|e| e.valid).map(|e| e.ratio).collect();
    let monotone_ok = valid.windows(2).all(|w| w[1] >= w[0] * (1.0 - MONOTONE_SLACK));
    let area = mesh.total_area();
    let cone_bound = cone_boundary_integral(mesh);
    Ok(MonotonicityReport {
        series,
        monotone_ok,
        slack: MONOTONE_SLACK,
        area,
        cone_bound,
        cone_bound_ok: area <= cone_bound * (1.0 + CONE_BOUND_SLACK),
    })
}

/// `count` radii spread evenly over (0, 0.95·clearance].
pub fn default_radii(mesh: &TriMesh, count: usize) -> Vec<f64> {
    let top = 0.95 * boundary_clearance(mesh);
    (1..=count).map(|i| top * i as f64 / count as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussBonnet {
    /// ½∫|A|².
    pub lhs: f64,
    /// ⅛∫(p·ν)².
    pub support_term: f64,
    /// ∫_{∂M} k·n.
    pub boundary_term: f64,
    pub chi: i64,
    /// support_term + boundary_term − 2πχ.
    pub rhs: f64,
    pub residual: f64,
    pub total_curvature: f64,
}

/// Both sides of ½∫|A|² = ⅛∫(p·ν)² + ∫_{∂M} k·n − 2πχ, which holds on any
/// compact expander.
pub fn gauss_bonnet_residual(mesh: &TriMesh) -> Result<GaussBonnet> {
    let chi = euler_and_genus(mesh)?.chi;
    let geo = GeometryCache::new(mesh);
    let pos = mesh.positions();
    let lhs = 0.5 * geo.integrate(|_, g| g.a2);
    let support_term = 0.125 * geo.integrate(|v, g| pos[v].dot(&g.normal).powi(2));
    let boundary_term: f64 = geo.vertices.iter().map(|g| g.geodesic).sum();
    let rhs = support_term + boundary_term - 2.0 * PI * chi as f64;
    Ok(GaussBonnet {
        lhs,
        support_term,
        boundary_term,
        chi,
        rhs,
        residual: lhs - rhs,
        total_curvature: lhs,
    })
}

/// A cone given by its link, a set of closed polylines on the unit sphere.
#[derive(Debug, Clone)]
pub struct Cone {
    pub link: Vec<Vec<Vec3>>,
}

impl Cone {
    /// Cone over the boundary curves of `spec`. Circles are resampled with
    /// `samples` points each; polylines are subdivided until no link segment
    /// is longer than 2π/`samples`.
    pub fn from_spec(spec: &BoundarySpec, samples: usize) -> Result<Self> {
        if samples < 16 {
            return Err(Error::InvalidParameter(format!("cone needs at least 16 samples per curve, got {samples}")));
        }
        let link = match &spec.circles {
            Some(circles) => circles
                .iter()
                .map(|&(rho, z)| {
                    (0..samples)
                        .map(|i| {
                            let t = 2.0 * PI * i as f64 / samples as f64;
                            Vec3::new(rho * t.cos(), rho * t.sin(), z).normalize()
                        })
                        .collect()
                })
                .collect(),
            None => {
                let max_seg = 2.0 * PI / samples as f64;
                spec.curves
                    .iter()
                    .map(|c| {
                        let mut out = Vec::new();
                        for i in 0..c.len() {
                            let (a, b) = (c[i].normalize(), c[(i + 1) % c.len()].normalize());
                            let pieces = ((b - a).norm() / max_seg).ceil().max(1.0) as usize;
                            for j in 0..pieces {
                                let t = j as f64 / pieces as f64;
                                out.push((a * (1.0 - t) + b * t).normalize());
                            }
                        }
                        out
                    })
                    .collect()
            }
        };
        Ok(Self { link })
    }

    /// The plane {z = 0} as a cone.
    pub fn plane(samples: usize) -> Self {
        let link = vec![(0..samples)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / samples as f64;
                Vec3::new(t.cos(), t.sin(), 0.0)
            })
            .collect()];
        Self { link }
    }

    /// Largest angle between consecutive link samples.
    pub fn spacing(&self) -> f64 {
        let mut best: f64 = 0.0;
        for c in &self.link {
            for i in 0..c.len() {
                best = best.max(c[i].angle(&c[(i + 1) % c.len()]));
            }
        }
        best
    }

    /// Unit normal of the cone at link sample `i` of curve `ci`.
    fn normal(&self, ci: usize, i: usize) -> Vec3 {
        let c = &self.link[ci];
        let n = c.len();
        let t = c[(i + 1) % n] - c[(i + n - 1) % n];
        t.cross(&c[i]).normalize()
    }

    /// Distance from `p` to the cone, with the cone between two consecutive
    /// link samples replaced by the flat sector they span.
    pub fn distance(&self, p: &Vec3) -> f64 {
        let mut best = p.norm();
        for c in &self.link {
            for i in 0..c.len() {
                let (a, b) = (c[i], c[(i + 1) % c.len()]);
                best = best.min(sector_distance(p, &a, &b));
            }
        }
        best
    }

    /// Nearest sampled cone point to `p` and the cone normal there.
    pub fn nearest(&self, p: &Vec3) -> (Vec3, Vec3) {
        let mut best = (Vec3::zeros(), 0usize, 0usize, f64::INFINITY);
        for (ci, c) in self.link.iter().enumerate() {
            for (i, m) in c.iter().enumerate() {
                let t = p.dot(m).max(0.0);
                let d = (p - m * t).norm();
                if d < best.3 {
                    best = (m * t, ci, i, d);
                }
            }
        }
        (best.0, self.normal(best.1, best.2))
    }
}

/// Distance from p to the sector {αa + βb : α, β ≥ 0}.
fn sector_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ray = |m: &Vec3| {
        let t = p.dot(m).max(0.0);
        (p - m * t).norm()
    };
    let n = a.cross(b);
    let nn = n.norm_squared();
    if nn > 0.0 {
        // Coordinates of the in-plane part of p in the basis (a, b).
        let q = p - n * (p.dot(&n) / nn);
        let alpha = q.cross(b).dot(&n) / nn;
        let beta = a.cross(&q).dot(&n) / nn;
        if alpha >= 0.0 && beta >= 0.0 {
            return (p - q).norm();
        }
    }
    ray(a).min(ray(b))
}

/// Largest λ with B(ℓ + λν, λ) ∩ C = ∅ over the link samples ℓ and both
/// normals ν. For a cone ray through m, |tm − ℓ|² ≥ 2λ t ν·m for all t ≥ 0
/// is tightest at t = 1, giving λ ≤ (1 − m·ℓ)/(ν·m) whenever ν·m > 0.
pub fn rolling_ball_lambda(cone: &Cone) -> Result<f64> {
    let mut lambda = f64::INFINITY;
    for (ci, c) in cone.link.iter().enumerate() {
        for (i, l) in c.iter().enumerate() {
            let nu = cone.normal(ci, i);
            for (cj, d) in cone.link.iter().enumerate() {
                for (j, m) in d.iter().enumerate() {
                    if ci == cj && i == j {
                        continue;
                    }
                    let b = nu.dot(m).abs();
                    if b > 0.0 {
                        lambda = lambda.min((1.0 - m.dot(l)) / b);
                    }
                }
            }
        }
    }
    let spacing = cone.spacing();
    if lambda.is_finite() && lambda < 2.0 * spacing {
        return Err(Error::Inconclusive(format!(
            "cone link spacing {spacing:.3e} is too coarse for the rolling-ball constant {lambda:.3e}"
        )));
    }
    Ok(lambda)
}

/// η = 8m/λ.
pub fn eta_of(lambda: f64) -> f64 {
    8.0 * DIM_M / lambda
}

/// R_C = max{2(m/λ)^{1/2}, 4(2m)^{1/2}/λ}.
pub fn r_c_of(lambda: f64) -> f64 {
    (2.0 * (DIM_M / lambda).sqrt()).max(4.0 * (2.0 * DIM_M).sqrt() / lambda)
}

/// Time r(R − r)/m for which a flow with boundary outside B(0, R), starting
/// outside the closed ball, stays clear of B(0, r).
pub fn barrier_time(r: f64, big_r: f64, m: f64) -> Result<f64> {
    if !(0.0 < r && r < big_r) || !(m > 0.0) {
        return Err(Error::InvalidParameter(format!("need 0 < r < R and m > 0, got r={r}, R={big_r}, m={m}")));
    }
    Ok(r * (big_r - r) / m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Graphicality {
    /// Smallest searched radius beyond which the surface is a local graph over
    /// the cone with tangent angle below `angle_limit`.
    pub r_tilde: Option<f64>,
    pub angle_limit: f64,
    /// Over vertices beyond r_tilde (or beyond the largest searched radius).
    pub max_tangent_angle: f64,
    /// Largest angle between the tangent plane and the position vector.
    pub max_radial_angle: f64,
    /// Nearest-point projection keeps the orientation of every face.
    pub injective: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeTracking {
    pub lambda_hat: f64,
    pub eta: f64,
    pub r_c: f64,
    /// max |p|·dist(p, C) over all vertices.
    pub max_product: f64,
    /// max |p|·dist(p, C) over vertices with |p| > R_C, zero if there are none.
    pub max_product_outside_r_c: f64,
    /// Every vertex with |p|·dist(p, C) ≥ η has |p| ≤ R_C.
    pub eta_ok: bool,
    pub graphicality: Graphicality,
}

/// Angle between the tangent planes of the surface and cone allowed in the
/// graphicality search.
pub const GRAPH_ANGLE: f64 = PI / 6.0;

/// Checks that tie the surface to the cone over its boundary.
pub fn cone_tracking_checks(mesh: &TriMesh, cone: &Cone) -> Result<ConeTracking> {
    let lambda_hat = rolling_ball_lambda(cone)?;
    let eta = eta_of(lambda_hat);
    let r_c = r_c_of(lambda_hat);
    let pos = mesh.positions();
    let mut max_product: f64 = 0.0;
    let mut max_outside: f64 = 0.0;
    let mut eta_ok = true;
    for &p in pos {
        let prod = p.norm() * cone.distance(&p);
        max_product = max_product.max(prod);
        if p.norm() > r_c {
            max_outside = max_outside.max(prod);
            if prod >= eta {
                eta_ok = false;
            }
        }
    }
    Ok(ConeTracking {
        lambda_hat,
        eta,
        r_c,
        max_product,
        max_product_outside_r_c: max_outside,
        eta_ok,
        graphicality: graphicality(mesh, cone),
    })
}

fn graphicality(mesh: &TriMesh, cone: &Cone) -> Graphicality {
    let geo = GeometryCache::new(mesh);
    let pos = mesh.positions();
    let nv = mesh.num_vertices();
    // Tangent angle and nearest cone point per vertex.
    let mut tangent = vec![0.0; nv];
    let mut radial = vec![0.0; nv];
    let mut proj = vec![(Vec3::zeros(), Vec3::zeros()); nv];
    for v in 0..nv {
        let p = pos[v];
        let n = geo.vertices[v].normal;
        let (q, cn) = cone.nearest(&p);
        tangent[v] = n.dot(&cn).abs().min(1.0).acos();
        radial[v] = if p.norm() > 0.0 { n.dot(&p.normalize()).abs().min(1.0).asin() } else { 0.0 };
        proj[v] = (q, cn);
    }
    let rmax = pos.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let steps = 40;
    let beyond = |r: f64| -> (bool, f64, f64, bool) {
        let mut ok = true;
        let (mut ta, mut ra) = (0.0f64, 0.0f64);
        for v in 0..nv {
            if pos[v].norm() >= r {
                ta = ta.max(tangent[v]);
                ra = ra.max(radial[v]);
                if tangent[v] >= GRAPH_ANGLE {
                    ok = false;
                }
            }
        }
        let mut inj = true;
        for (f, &[a, b, c]) in mesh.faces().iter().enumerate() {
            if pos[a].norm() < r || pos[b].norm() < r || pos[c].norm() < r {
                continue;
            }
            let (qa, qb, qc) = (proj[a].0, proj[b].0, proj[c].0);
            let cn = (proj[a].1 + proj[b].1 + proj[c].1).normalize();
            let fnrm = geo.face_normals[f];
            let s_face = fnrm.dot(&cn);
            let s_proj = (qb - qa).cross(&(qc - qa)).dot(&cn);
            if s_face * s_proj <= 0.0 {
                inj = false;
            }
        }
        (ok && inj, ta, ra, inj)
    };
    let mut found = None;
    for i in 0..steps {
        let r = rmax * i as f64 / steps as f64;
        let res = beyond(r);
        if res.0 {
            found = Some((r, res));
            break;
        }
    }
    match found {
        Some((r, (_, ta, ra, inj))) => Graphicality {
            r_tilde: Some(r),
            angle_limit: GRAPH_ANGLE,
            max_tangent_angle: ta,
            max_radial_angle: ra,
            injective: inj,
        },
        None => {
            let (_, ta, ra, inj) = beyond(rmax * (steps - 1) as f64 / steps as f64);
            Graphicality {
                r_tilde: None,
                angle_limit: GRAPH_ANGLE,
                max_tangent_angle: ta,
                max_radial_angle: ra,
                injective: inj,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub schema_version: u32,
    pub genus: i64,
    pub chi: i64,
    pub boundary_loops: usize,
    #[serde(rename = "type")]
    pub surface_type: SurfaceType,
    /// Why the surface could not be classified, when it could not.
    pub type_note: Option<String>,
    pub phi_integral: f64,
    pub size: SizeClass,
    pub dichotomy_ok: bool,
    pub gap: (f64, f64),
    pub monotonicity: MonotonicityReport,
    pub gauss_bonnet: GaussBonnet,
    pub total_curvature: f64,
    pub stability_lambda_min: Option<f64>,
    pub eta_tracking: Option<ConeTracking>,
}

/// Run every diagnostic that does not need extra data. Cone tracking and the
/// stability eigenvalue are filled in by the caller when available.
pub fn diagnose(mesh: &TriMesh, radii: &[f64]) -> Result<DiagnosticsReport> {
    let topo = euler_and_genus(mesh)?;
    let (surface_type, type_note) = match classify_type(mesh) {
        Ok(t) => (t, None),
        Err(Error::ClassificationUnavailable(m)) => (SurfaceType::Other, Some(m)),
        Err(e) => return Err(e),
    };
    let size = size_class(mesh);
    let gb = gauss_bonnet_residual(mesh)?;
    Ok(DiagnosticsReport {
        schema_version: SCHEMA_VERSION,
        genus: topo.genus,
        chi: topo.chi,
        boundary_loops: topo.boundary_loops,
        surface_type,
        type_note,
        phi_integral: size.phi_integral,
        size: size.size,
        dichotomy_ok: size.dichotomy_ok,
        gap: GAP,
        monotonicity: monotonicity_series(mesh, radii)?,
        gauss_bonnet: gb,
        total_curvature: gb.total_curvature,
        stability_lambda_min: None,
        eta_tracking: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::flat_disk;

    #[test]
    fn phi_constant_matches_quadrature() {
        // Simpson on ∫₀¹ e^{−1/v} dv.
        let n = 20000;
        let h = 1.0 / n as f64;
        let f = |v: f64| if v <= 0.0 { 0.0 } else { (-1.0 / v).exp() };
        let mut s = f(0.0) + f(1.0);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let j = s * h / 3.0;
        assert!((j - 0.148_495_506_775_922).abs() < 1e-12);
        assert!((4.0 / (PI * j) - PHI_C).abs() < 1e-10);
    }

    #[test]
    fn wedge_area_cases() {
        // Triangle fully inside.
        let a = disk_wedge_area([0.1, 0.0], [0.0, 0.1], 1.0);
        assert!((a - 0.005).abs() < 1e-15);
        // Quarter disk as a huge wedge.
        let a = disk_wedge_area([10.0, 0.0], [0.0, 10.0], 1.0);
        assert!((a - PI / 4.0).abs() < 1e-12);
        // Orientation flips the sign.
        let b = disk_wedge_area([0.0, 10.0], [10.0, 0.0], 1.0);
        assert!((a + b).abs() < 1e-15);
    }

    #[test]
    fn ball_clips_big_triangle_to_disk() {
        let a = Vec3::new(-10.0, -10.0, 0.3);
        let b = Vec3::new(10.0, -10.0, 0.3);
        let c = Vec3::new(0.0, 10.0, 0.3);
        let area = triangle_ball_area(&a, &b, &c, 0.5);
        assert!((area - PI * (0.25 - 0.09)).abs() < 1e-12);
        assert_eq!(triangle_ball_area(&a, &b, &c, 0.3), 0.0);
    }

    #[test]
    fn barrier_time_example() {
        assert!((barrier_time(1.0, 3.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(barrier_time(3.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn eta_for_surfaces() {
        assert!((eta_of(0.5) - 32.0).abs() < 1e-12);
        assert!((r_c_of(0.01) - 800.0).abs() < 1e-9);
    }

    #[test]
    fn rolling_ball_of_plane_is_unbounded() {
        let l = rolling_ball_lambda(&Cone::plane(64)).unwrap();
        assert!(l.is_infinite());
    }

    #[test]
    fn flat_disk_diagnostics() {
        let disk = flat_disk(1.0, 24).unwrap();
        let rep = diagnose(&disk, &[0.25, 0.5, 0.75]).unwrap();
        assert_eq!(rep.genus, 0);
        assert_eq!(rep.surface_type, SurfaceType::Other);
        assert!(rep.type_note.is_some());
        assert_eq!(rep.size, SizeClass::Small);
        assert!(rep.gauss_bonnet.residual.abs() < 1e-6);
    }
}
