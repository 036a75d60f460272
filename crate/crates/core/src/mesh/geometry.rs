//! Per-vertex discrete differential geometry.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix5, Vector5};

use super::TriMesh;
use crate::Vec3;

/// Geometry of one vertex.
#[derive(Debug, Clone, Copy)]
pub struct VertexGeometry {
    /// Unit normal (area-weighted average of incident face normals).
    pub normal: Vec3,
    /// Cotangent-formula mean curvature vector; points to the concave side.
    pub mean_curvature: Vec3,
    /// Mixed Voronoi area.
    pub area: f64,
    /// Squared norm of the second fundamental form from a local quadric fit.
    pub a2: f64,
    /// Gauss curvature: angle defect over mixed area at interior vertices,
    /// the mean over interior neighbours at boundary vertices.
    pub gauss: f64,
    /// Sum of incident corner angles.
    pub angle_sum: f64,
    /// Boundary turning π − (angle sum); zero for interior vertices.
    pub turning: f64,
    /// Geodesic curvature k·n integrated over the boundary cell: the turning
    /// less the cell's share of Gauss curvature. Zero for interior vertices.
    pub geodesic: f64,
    /// Outward unit conormal at boundary vertices, zero elsewhere.
    pub conormal: Vec3,
}

#[derive(Debug, Clone)]
pub struct GeometryCache {
    pub vertices: Vec<VertexGeometry>,
    pub face_normals: Vec<Vec3>,
    pub face_areas: Vec<f64>,
}

/// Interior angles of the triangle (a, b, c) at a, b and c.
pub(crate) fn corner_angles(a: &Vec3, b: &Vec3, c: &Vec3) -> [f64; 3] {
    let ang = |p: &Vec3, q: &Vec3, r: &Vec3| {
        let u = q - p;
        let v = r - p;
        u.cross(&v).norm().atan2(u.dot(&v))
    };
    [ang(a, b, c), ang(b, c, a), ang(c, a, b)]
}

/// Cotangent of the angle at p in triangle (p, q, r).
pub(crate) fn cot_at(p: &Vec3, q: &Vec3, r: &Vec3) -> f64 {
    let u = q - p;
    let v = r - p;
    let cr = u.cross(&v).norm();
    if cr == 0.0 {
        return 0.0;
    }
    u.dot(&v) / cr
}

impl GeometryCache {
    pub fn new(mesh: &TriMesh) -> Self {
        let pos = mesh.positions();
        let nv = pos.len();
        let nf = mesh.num_faces();
        let mut face_normals = Vec::with_capacity(nf);
        let mut face_areas = Vec::with_capacity(nf);
        let mut vnormal = vec![Vec3::zeros(); nv];
        let mut area = vec![0.0; nv];
        let mut angle_sum = vec![0.0; nv];
        let mut lap = vec![Vec3::zeros(); nv];

        for &[a, b, c] in mesh.faces() {
            let (pa, pb, pc) = (pos[a], pos[b], pos[c]);
            let n2 = (pb - pa).cross(&(pc - pa));
            let ar = 0.5 * n2.norm();
            let n = if ar > 0.0 { n2 / (2.0 * ar) } else { Vec3::zeros() };
            face_normals.push(n);
            face_areas.push(ar);
            for &v in &[a, b, c] {
                vnormal[v] += n2;
            }
            let angles = corner_angles(&pa, &pb, &pc);
            let ids = [a, b, c];
            let p = [pa, pb, pc];
            for i in 0..3 {
                angle_sum[ids[i]] += angles[i];
            }
            // cotangent Laplacian of the position
            for i in 0..3 {
                let (j, l) = ((i + 1) % 3, (i + 2) % 3);
                let w = 0.5 * cot_at(&p[i], &p[j], &p[l]);
                let d = p[l] - p[j];
                lap[ids[j]] += w * d;
                lap[ids[l]] -= w * d;
            }
            // mixed Voronoi area
            let obtuse = angles.iter().position(|&t| t > PI / 2.0);
            for i in 0..3 {
                let (j, l) = ((i + 1) % 3, (i + 2) % 3);
                let contrib = match obtuse {
                    None => {
                        0.125
                            * ((p[j] - p[i]).norm_squared() * cot_at(&p[l], &p[i], &p[j])
                                + (p[l] - p[i]).norm_squared() * cot_at(&p[j], &p[l], &p[i]))
                    }
                    Some(o) if o == i => ar / 2.0,
                    Some(_) => ar / 4.0,
                };
                area[ids[i]] += contrib;
            }
        }

        let mut vertices = Vec::with_capacity(nv);
        let mut normals = Vec::with_capacity(nv);
        for v in 0..nv {
            let n = vnormal[v];
            normals.push(if n.norm() > 0.0 { n.normalize() } else { Vec3::zeros() });
        }
        let mut conormal = vec![Vec3::zeros(); nv];
        for lp in mesh.boundary_loops() {
            let m = lp.len();
            for i in 0..m {
                let a = lp[i];
                let b = lp[(i + 1) % m];
                let t = pos[b] - pos[a];
                // the face lies to the left of a -> b; its outward side is t × n
                let f = mesh
                    .vertex_faces(a)
                    .iter()
                    .copied()
                    .find(|&f| {
                        let tri = mesh.faces()[f];
                        (0..3).any(|k| tri[k] == a && tri[(k + 1) % 3] == b)
                    })
                    .expect("boundary edge has a face");
                let out = t.cross(&face_normals[f]);
                conormal[a] += out;
                conormal[b] += out;
            }
        }
        for v in 0..nv {
            let boundary = mesh.is_boundary_vertex(v);
            let h = if area[v] > 0.0 && !boundary {
                lap[v] / area[v]
            } else {
                Vec3::zeros()
            };
            let gauss = if area[v] > 0.0 && !boundary {
                (2.0 * PI - angle_sum[v]) / area[v]
            } else {
                0.0
            };
            let turning = if boundary { PI - angle_sum[v] } else { 0.0 };
            let cn = if boundary && conormal[v].norm() > 0.0 {
                conormal[v].normalize()
            } else {
                Vec3::zeros()
            };
            vertices.push(VertexGeometry {
                normal: normals[v],
                mean_curvature: h,
                area: area[v],
                a2: shape_operator_a2(mesh, v, &normals),
                gauss,
                angle_sum: angle_sum[v],
                turning,
                geodesic: 0.0,
                conormal: cn,
            });
        }
        // one-sided quadric fits are biased on the boundary; extend from the
        // interior instead
        for v in 0..nv {
            if !mesh.is_boundary_vertex(v) {
                continue;
            }
            let inner: Vec<usize> = mesh
                .neighbors(v)
                .iter()
                .copied()
                .filter(|&u| !mesh.is_boundary_vertex(u))
                .collect();
            if !inner.is_empty() {
                let m = inner.len() as f64;
                vertices[v].a2 = inner.iter().map(|&u| vertices[u].a2).sum::<f64>() / m;
                vertices[v].gauss = inner.iter().map(|&u| vertices[u].gauss).sum::<f64>() / m;
            }
            vertices[v].geodesic = vertices[v].turning - vertices[v].gauss * vertices[v].area;
        }
        Self {
            vertices,
            face_normals,
            face_areas,
        }
    }

    pub fn normals(&self) -> Vec<Vec3> {
        self.vertices.iter().map(|g| g.normal).collect()
    }

    /// ∫ f dA using mixed areas.
    pub fn integrate(&self, f: impl Fn(usize, &VertexGeometry) -> f64) -> f64 {
        self.vertices
            .iter()
            .enumerate()
            .map(|(v, g)| f(v, g) * g.area)
            .sum()
    }

    /// Σ angle defects over interior vertices plus boundary turning angles.
    pub fn total_angle_defect(&self, mesh: &TriMesh) -> f64 {
        (0..self.vertices.len())
            .filter(|&v| !mesh.vertex_faces(v).is_empty())
            .map(|v| {
                let g = &self.vertices[v];
                if mesh.is_boundary_vertex(v) {
                    g.turning
                } else {
                    2.0 * PI - g.angle_sum
                }
            })
            .sum()
    }
}

/// |A|² at `v` from a least-squares quadric fit of the surrounding vertices in
/// the tangent frame of the vertex normal. The one-ring is used when it has at
/// least six vertices, otherwise the two-ring.
fn shape_operator_a2(mesh: &TriMesh, v: usize, normals: &[Vec3]) -> f64 {
    let n = normals[v];
    if n.norm() == 0.0 {
        return 0.0;
    }
    let mut ring: Vec<usize> = mesh.neighbors(v).to_vec();
    if ring.len() < 6 {
        let mut two = ring.clone();
        for &u in &ring {
            two.extend_from_slice(mesh.neighbors(u));
        }
        two.sort_unstable();
        two.dedup();
        two.retain(|&u| u != v);
        ring = two;
    }
    if ring.len() < 5 {
        return 0.0;
    }
    let e1 = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = (e1 - n * n.dot(&e1)).normalize();
    let e2 = n.cross(&e1);
    let p0 = mesh.position(v);
    let mut ata = Matrix5::<f64>::zeros();
    let mut atb = Vector5::<f64>::zeros();
    let scale = ring
        .iter()
        .map(|&u| (mesh.position(u) - p0).norm())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    for &u in &ring {
        let d = (mesh.position(u) - p0) / scale;
        let (x, y, z) = (d.dot(&e1), d.dot(&e2), d.dot(&n));
        let row = Vector5::new(x, y, 0.5 * x * x, x * y, 0.5 * y * y);
        ata += row * row.transpose();
        atb += row * z;
    }
    let Some(sol) = ata.lu().solve(&atb) else {
        return 0.0;
    };
    let (fx, fy) = (sol[0], sol[1]);
    let hess = Matrix2::new(sol[2], sol[3], sol[3], sol[4]) / scale;
    let w = (1.0 + fx * fx + fy * fy).sqrt();
    let first = Matrix2::new(1.0 + fx * fx, fx * fy, fx * fy, 1.0 + fy * fy);
    let second = hess / w;
    let Some(inv) = first.try_inverse() else {
        return 0.0;
    };
    let s = inv * second;
    (s * s).trace()
}
