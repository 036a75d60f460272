//! The half-slab minimal surface bounded by Y, Y + e₃ and Y − e₃, rebuilt from
//! its Gauss map and height function.
//!
//! The Gauss map ν is a diffeomorphism onto H⁻ = S² ∩ {y < 0}. Stereographic
//! projection from e₂ charts H⁻ as the unit disk in the (x, z)-plane, and in
//! that chart the height z∘ν⁻¹ is the bounded harmonic function u with
//! boundary values 1 on J₁ (second quadrant), 0 on J₀ (lower half) and −1 on
//! J₋₁ (first quadrant).

use std::f64::consts::PI;

use nalgebra::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{GeometryCache, TriMesh};
use crate::Vec3;

type C = Complex<f64>;

/// Chart angles where the boundary data jumps.
pub const JUMPS: [f64; 3] = [0.0, PI / 2.0, PI];

/// Boundary value at chart angle φ.
pub fn boundary_value(phi: f64) -> f64 {
    let p = phi.rem_euclid(2.0 * PI);
    if p < PI / 2.0 {
        -1.0
    } else if p < PI {
        1.0
    } else {
        0.0
    }
}

/// Counterclockwise angle in [0, 2π) from a − w to b − w.
fn subtended(w: C, a: C, b: C) -> f64 {
    ((b - w) / (a - w)).arg().rem_euclid(2.0 * PI)
}

/// Harmonic measure at w of the boundary arc from angle α to β.
fn arc_measure(w: C, alpha: f64, beta: f64) -> f64 {
    subtended(w, C::from_polar(1.0, alpha), C::from_polar(1.0, beta)) / PI - (beta - alpha) / (2.0 * PI)
}

/// The harmonic field u at the chart point w, |w| < 1.
pub fn harmonic_u(w: C) -> f64 {
    arc_measure(w, PI / 2.0, PI) - arc_measure(w, 0.0, PI / 2.0)
}

/// Harmonic conjugate of u, zero at the centre.
pub fn harmonic_conjugate(w: C) -> f64 {
    let one = C::new(1.0, 0.0);
    let i = C::new(0.0, 1.0);
    -((one + w).norm() * (one - w).norm() / (i - w).norm_sqr()).ln() / PI
}

/// d(u + iu*)/dw.
pub fn harmonic_derivative(w: C) -> C {
    let one = C::new(1.0, 0.0);
    let i = C::new(0.0, 1.0);
    let s = C::new(2.0, 0.0) / (i - w) + one / (one + w) - one / (one - w);
    s * C::new(0.0, -1.0 / PI)
}

/// u by composite Gauss–Legendre quadrature of the Poisson integral, for
/// checking the closed form.
pub fn poisson_quadrature(w: C, panels: usize) -> f64 {
    let (x, wt) = gauss_legendre(16);
    let r2 = w.norm_sqr();
    let mut total = 0.0;
    // Panels never straddle a jump.
    for arc in 0..4 {
        let (a, b) = (arc as f64 * PI / 2.0, (arc + 1) as f64 * PI / 2.0);
        let data = boundary_value(0.5 * (a + b));
        if data == 0.0 {
            continue;
        }
        let h = (b - a) / panels as f64;
        for p in 0..panels {
            let c0 = a + p as f64 * h;
            for (xi, wi) in x.iter().zip(&wt) {
                let phi = c0 + 0.5 * h * (xi + 1.0);
                let k = (1.0 - r2) / (C::from_polar(1.0, phi) - w).norm_sqr();
                total += wi * 0.5 * h * k * data;
            }
        }
    }
    total / (2.0 * PI)
}

/// Unit normal ν at the chart point w (inverse stereographic projection from e₂).
pub fn chart_to_normal(w: C) -> Vec3 {
    let r2 = w.norm_sqr();
    Vec3::new(2.0 * w.re, r2 - 1.0, 2.0 * w.im) / (1.0 + r2)
}

/// Stereographic projection from e₂ onto the (x, z)-plane.
pub fn normal_to_chart(n: &Vec3) -> C {
    C::new(n.x, n.z) / (1.0 - n.y)
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// u and u* sampled on the square grid of (resolution + 1)² nodes covering
/// [−1, 1]²; nodes outside the open unit disk hold NaN.
#[derive(Debug, Clone)]
pub struct ModelChart {
    pub resolution: usize,
    pub nodes: Vec<f64>,
    /// Row-major, u[j·(resolution + 1) + i] at (nodes[i], nodes[j]).
    pub u: Vec<f64>,
    pub u_conj: Vec<f64>,
}

impl ModelChart {
    fn idx(&self, i: usize, j: usize) -> usize {
        j * (self.resolution + 1) + i
    }

    pub fn u_at(&self, i: usize, j: usize) -> f64 {
        self.u[self.idx(i, j)]
    }

    /// Extreme values of u over the grid.
    pub fn u_range(&self) -> (f64, f64) {
        self.u
            .iter()
            .filter(|v| !v.is_nan())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// u at the centre node.
    pub fn u_center(&self) -> f64 {
        let c = self.resolution / 2;
        self.u_at(c, c)
    }

    /// Largest |u_E + u_W + u_N + u_S − 4u| over nodes whose stencil lies in
    /// the disk of radius `inner`.
    pub fn five_point_residual(&self, inner: f64) -> f64 {
        let n = self.resolution;
        let h = self.nodes[1] - self.nodes[0];
        let mut worst: f64 = 0.0;
        for j in 1..n {
            for i in 1..n {
                let (x, y) = (self.nodes[i], self.nodes[j]);
                if (x * x + y * y).sqrt() + h > inner {
                    continue;
                }
                let r = self.u_at(i + 1, j) + self.u_at(i - 1, j) + self.u_at(i, j + 1) + self.u_at(i, j - 1)
                    - 4.0 * self.u_at(i, j);
                worst = worst.max(r.abs());
            }
        }
        worst
    }

    /// Rows x,z,u,u_conj for nodes inside the disk.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,z,u,u_conj\n");
        for j in 0..=self.resolution {
            for i in 0..=self.resolution {
                let k = self.idx(i, j);
                if !self.u[k].is_nan() {
                    s.push_str(&format!("{:?},{:?},{:?},{:?}\n", self.nodes[i], self.nodes[j], self.u[k], self.u_conj[k]));
                }
            }
        }
        s
    }
}

pub fn harmonic_field(resolution: usize) -> Result<ModelChart> {
    if resolution < 64 || resolution % 2 != 0 {
        return Err(Error::InvalidParameter(format!("resolution must be even and at least 64, got {resolution}")));
    }
    let nodes: Vec<f64> = (0..=resolution).map(|i| -1.0 + 2.0 * i as f64 / resolution as f64).collect();
    let mut u = Vec::with_capacity(nodes.len() * nodes.len());
    let mut u_conj = Vec::with_capacity(nodes.len() * nodes.len());
    for &y in &nodes {
        for &x in &nodes {
            let w = C::new(x, y);
            if w.norm() < 1.0 {
                u.push(harmonic_u(w));
                u_conj.push(harmonic_conjugate(w));
            } else {
                u.push(f64::NAN);
                u_conj.push(f64::NAN);
            }
        }
    }
    Ok(ModelChart {
        resolution,
        nodes,
        u,
        u_conj,
    })
}

/// Gauss map in the conformal coordinate ζ = w̄, stereographic from e₃.
fn gauss_g(zeta: C) -> C {
    let i = C::new(0.0, 1.0);
    (i * zeta + 1.0) / (zeta + i)
}

/// The Weierstrass forms (½(1/G − G), (i/2)(1/G + G), 1)·dh at ζ, with
/// h(ζ) = conj(F(conj ζ)) and F = u + iu*.
fn weierstrass_forms(zeta: C) -> [C; 3] {
    let dh = harmonic_derivative(zeta.conj()).conj();
    let g = gauss_g(zeta);
    let gi = C::new(1.0, 0.0) / g;
    let i = C::new(0.0, 1.0);
    [(gi - g) * 0.5 * dh, i * 0.5 * (gi + g) * dh, dh]
}

struct Integrator {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl Integrator {
    fn new() -> Self {
        let (x, w) = gauss_legendre(10);
        Self { x, w }
    }

    fn panel(&self, a: C, b: C) -> Vec3 {
        let d = b - a;
        let mut s = [C::new(0.0, 0.0); 3];
        for (xi, wi) in self.x.iter().zip(&self.w) {
            let z = a + d * (0.5 * (xi + 1.0));
            let f = weierstrass_forms(z);
            for k in 0..3 {
                s[k] += f[k] * (0.5 * wi);
            }
        }
        Vec3::new((s[0] * d).re, (s[1] * d).re, (s[2] * d).re)
    }

    /// Re ∫_a^b of the forms. Panels are at most half as long as their
    /// distance to the singular points of the forms, so each 10-point panel
    /// is accurate to roundoff.
    fn segment(&self, a: C, b: C) -> Vec3 {
        let sing = [C::new(1.0, 0.0), C::new(-1.0, 0.0), C::new(0.0, -1.0)];
        let dist = |z: C| sing.iter().map(|s| (z - s).norm()).fold(f64::INFINITY, f64::min);
        let len = (b - a).norm();
        if len == 0.0 {
            return Vec3::zeros();
        }
        let dir = (b - a) / len;
        let mut t = 0.0;
        let mut total = Vec3::zeros();
        while t < len {
            let step = (0.5 * dist(a + dir * t)).min(len - t);
            let next = if len - t - step < 1e-3 * step { len } else { t + step };
            total += self.panel(a + dir * t, a + dir * next);
            t = next;
        }
        total
    }
}

/// Graded nodes on [a, b]: the spacing follows `h` (by equidistributing
/// ∫ 1/h) with a whole number of cells.
fn graded_nodes(a: f64, b: f64, h: impl Fn(f64) -> f64) -> Vec<f64> {
    let fine = 400_000;
    let dx = (b - a) / fine as f64;
    let mut cum = vec![0.0; fine + 1];
    for i in 0..fine {
        let xm = a + (i as f64 + 0.5) * dx;
        cum[i + 1] = cum[i] + dx / h(xm);
    }
    let total = cum[fine];
    let cells = total.ceil().max(1.0) as usize;
    let mut out = vec![a];
    let mut k = 0;
    for c in 1..cells {
        let target = total * c as f64 / cells as f64;
        while cum[k + 1] < target {
            k += 1;
        }
        let t = (target - cum[k]) / (cum[k + 1] - cum[k]);
        out.push(a + (k as f64 + t) * dx);
    }
    out.push(b);
    out
}

#[derive(Debug, Clone)]
pub struct ModelSurface {
    pub mesh: TriMesh,
    /// Chart point w of each vertex.
    pub chart: Vec<C>,
    pub truncation: f64,
    /// Largest difference between positions integrated along two paths.
    pub period_mismatch: f64,
}

/// Rim vertices closer than this (in the chart) to a jump point sit on the
/// truncated ends and are left out of the boundary-line check.
pub const TRACE_MARGIN: f64 = 0.1;

/// Default chart truncation radius.
pub const DEFAULT_TRUNCATION: f64 = 0.9999;

/// Tolerance on the path-independence check.
pub const PERIOD_TOL: f64 = 1e-6;

/// Mesh the chart disk of radius `truncation` with a polar grid graded toward
/// the jump points and the rim, and map it to R³ by the Weierstrass
/// representation, translated so that the chart point −i (where ν = −e₃)
/// goes to the origin.
pub fn weierstrass_reconstruct(chart: &ModelChart, truncation: f64) -> Result<ModelSurface> {
    if !(truncation > 0.5 && truncation < 1.0) {
        return Err(Error::InvalidParameter(format!("truncation must lie in (0.5, 1), got {truncation}")));
    }
    let res = chart.resolution as f64;
    let grade = 24.0 / res;
    let rim = 1.0 - truncation;
    // Angular nodes on [π/2, 3π/2], mirrored by θ ↦ π − θ.
    let dtheta_max = 2.0 * PI / res;
    let ang_h = |t: f64| {
        let d = JUMPS
            .iter()
            .chain(&[2.0 * PI])
            .map(|j| (t - j).abs())
            .fold(f64::INFINITY, f64::min);
        (grade * d.max(rim)).min(dtheta_max)
    };
    let mut half = graded_nodes(PI / 2.0, PI, ang_h);
    let lower = graded_nodes(PI, 1.5 * PI, ang_h);
    half.extend_from_slice(&lower[1..]);
    let mut theta: Vec<f64> = half
        .iter()
        .flat_map(|&t| [t, (PI - t).rem_euclid(2.0 * PI)])
        .map(|t| if t > 2.0 * PI - 1e-12 { 0.0 } else { t })
        .collect();
    theta.sort_by(f64::total_cmp);
    theta.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let drho_max = 2.0 / res;
    // The first ring next to the centre vertex carries an O(Δρ) error in the
    // cotangent Laplacian, so rings start at a small uniform step and widen
    // by at most 5% per ring.
    let drho_center = 0.05 / res;
    let rho = graded_nodes(0.0, truncation, |r| {
        (grade * (1.0 - r).max(rim)).min(drho_max).min(drho_center + 0.05 * r)
    });
    let nt = theta.len();
    let mut chart_pts = vec![C::new(0.0, 0.0)];
    for &r in &rho[1..] {
        for &t in &theta {
            chart_pts.push(C::from_polar(r, t));
        }
    }
    let ring = |i: usize, j: usize| 1 + (i - 1) * nt + (j % nt);
    let mut faces = Vec::new();
    for j in 0..nt {
        faces.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for i in 1..rho.len() - 1 {
        for j in 0..nt {
            let (a, b, c, d) = (ring(i, j), ring(i, j + 1), ring(i + 1, j), ring(i + 1, j + 1));
            faces.push([a, c, d]);
            faces.push([a, d, b]);
        }
    }
    let integ = Integrator::new();
    let origin_shift = integ.segment(C::new(0.0, 0.0), C::new(0.0, 1.0));
    let positions: Vec<Vec3> = chart_pts
        .iter()
        .map(|w| integ.segment(C::new(0.0, 0.0), w.conj()) - origin_shift)
        .collect();
    // Second path through the real axis of ζ for every 37th vertex.
    let mut mismatch: f64 = 0.0;
    for (k, w) in chart_pts.iter().enumerate().step_by(37) {
        let z = w.conj();
        let mid = C::new(z.re, 0.0);
        let p = integ.segment(C::new(0.0, 0.0), mid) + integ.segment(mid, z) - origin_shift;
        mismatch = mismatch.max((p - positions[k]).norm() / positions[k].norm().max(1.0));
    }
    if mismatch > PERIOD_TOL {
        return Err(Error::Reconstruction(format!(
            "positions depend on the integration path (mismatch {mismatch:.3e})"
        )));
    }
    let mut mesh = TriMesh::new(positions, faces)?;
    // Orient faces so that their normals agree with ν.
    let f0 = mesh.faces()[nt];
    let p = mesh.positions();
    let fnrm = (p[f0[1]] - p[f0[0]]).cross(&(p[f0[2]] - p[f0[0]]));
    let nu = chart_to_normal((chart_pts[f0[0]] + chart_pts[f0[1]] + chart_pts[f0[2]]) / 3.0);
    if fnrm.dot(&nu) < 0.0 {
        mesh = mesh.reversed()?;
    }
    Ok(ModelSurface {
        mesh,
        chart: chart_pts,
        truncation,
        period_mismatch: mismatch,
    })
}

/// Cotangent mean curvature vector at every vertex, normalised by the
/// circumcentric dual area. On the near-right triangles of a graded tensor
/// grid the mixed area switches between shares from face to face and spoils
/// the pointwise consistency; the plain dual area does not.
pub fn dual_mean_curvature(mesh: &TriMesh) -> Vec<Vec3> {
    let pos = mesh.positions();
    let mut lap = vec![Vec3::zeros(); pos.len()];
    let mut area = vec![0.0; pos.len()];
    for f in mesh.faces() {
        for i in 0..3 {
            let (o, a, b) = (f[i], f[(i + 1) % 3], f[(i + 2) % 3]);
            let (u, v) = (pos[a] - pos[o], pos[b] - pos[o]);
            let cot = u.dot(&v) / u.cross(&v).norm();
            let e = pos[b] - pos[a];
            lap[a] += 0.5 * cot * e;
            lap[b] -= 0.5 * cot * e;
            area[a] += 0.125 * cot * e.norm_squared();
            area[b] += 0.125 * cot * e.norm_squared();
        }
    }
    lap.iter().zip(&area).map(|(l, a)| l / (2.0 * a)).collect()
}

/// Cotangent mean curvature of the Weierstrass map at the chart point w, on
/// the image of a regular hexagon of chart radius h centred at w. `x` is the
/// position of w.
fn hexagon_mean_curvature(integ: &Integrator, w: C, x: Vec3, h: f64) -> Vec3 {
    let ring: Vec<Vec3> = (0..6)
        .map(|k| {
            let p = w + C::from_polar(h, k as f64 * PI / 3.0);
            x + integ.segment(w.conj(), p.conj())
        })
        .collect();
    let mut lap = Vec3::zeros();
    let mut area = 0.0;
    for k in 0..6 {
        let (a, b) = (ring[k], ring[(k + 1) % 6]);
        // angle at b opposite edge (x, a), angle at a opposite edge (x, b)
        let cot = |o: Vec3, p: Vec3, q: Vec3| (p - o).dot(&(q - o)) / (p - o).cross(&(q - o)).norm();
        let (ca, cb) = (cot(b, x, a), cot(a, x, b));
        lap += 0.5 * ca * (a - x) + 0.5 * cb * (b - x);
        area += 0.125 * (ca * (a - x).norm_squared() + cb * (b - x).norm_squared());
    }
    lap / (2.0 * area)
}

/// Largest hexagon-stencil mean curvature over the interior vertices. The
/// stencil radius is 5% of the chart distance to the nearest jump point,
/// capped at 0.01.
pub fn minimality_residual(surface: &ModelSurface) -> f64 {
    let integ = Integrator::new();
    let mesh = &surface.mesh;
    (0..mesh.num_vertices())
        .filter(|&v| !mesh.is_boundary_vertex(v))
        .map(|v| {
            let w = surface.chart[v];
            let d = JUMPS
                .iter()
                .map(|&j| (w - C::from_polar(1.0, j)).norm())
                .fold(f64::INFINITY, f64::min);
            hexagon_mean_curvature(&integ, w, mesh.position(v), (0.05 * d).min(0.01)).norm()
        })
        .fold(0.0, f64::max)
}

/// Signed solid angle of the spherical triangle (a, b, c).
fn solid_angle(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let num = a.dot(&b.cross(c));
    let den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    2.0 * num.atan2(den)
}

/// Part of a spherical polygon with sign·y ≥ 0.
fn clip_hemisphere(poly: &[Vec3], sign: f64) -> Vec<Vec3> {
    let mut out = Vec::new();
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let (da, db) = (sign * a.y, sign * b.y);
        if da >= 0.0 {
            out.push(a);
        }
        if (da >= 0.0) != (db >= 0.0) {
            let p = a * db - b * da;
            let p = if p.dot(&(a + b)) < 0.0 { -p } else { p };
            if p.norm() > 0.0 {
                out.push(p.normalize());
            }
        }
    }
    out
}

fn polygon_solid_angle(poly: &[Vec3]) -> f64 {
    (1..poly.len().saturating_sub(1))
        .map(|i| solid_angle(&poly[0], &poly[i], &poly[i + 1]))
        .sum()
}

/// Signed area of the Gauss image of each face, split between the
/// hemispheres {y > 0} and {y < 0}.
fn gauss_image(mesh: &TriMesh) -> Vec<(f64, f64)> {
    let geo = GeometryCache::new(mesh);
    mesh.faces()
        .iter()
        .map(|&[a, b, c]| {
            let tri = [geo.vertices[a].normal, geo.vertices[b].normal, geo.vertices[c].normal];
            (
                polygon_solid_angle(&clip_hemisphere(&tri, 1.0)),
                polygon_solid_angle(&clip_hemisphere(&tri, -1.0)),
            )
        })
        .collect()
}

/// Area of the Gauss image counted without sign, ≈ ∫|K| on surfaces whose
/// Gauss curvature does not change sign.
pub fn gauss_image_area(mesh: &TriMesh, faces: impl Fn(usize) -> bool) -> f64 {
    gauss_image(mesh)
        .iter()
        .enumerate()
        .filter(|(f, _)| faces(*f))
        .map(|(_, (p, m))| (p + m).abs())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussDegrees {
    pub d_plus: i64,
    pub d_minus: i64,
    pub raw_plus: f64,
    pub raw_minus: f64,
    /// Largest distance of a raw value from its rounded integer.
    pub distance: f64,
}

/// Degrees of the Gauss map over H⁺ = {y > 0} and H⁻ = {y < 0}: the signed
/// area of the Gauss image in each hemisphere over 2π. The sign is taken so
/// that saddle-shaped pieces, whose Gauss map reverses orientation, count
/// positively.
pub fn gauss_degrees(mesh: &TriMesh) -> Result<GaussDegrees> {
    let img = gauss_image(mesh);
    let raw_plus = -img.iter().map(|p| p.0).sum::<f64>() / (2.0 * PI);
    let raw_minus = -img.iter().map(|p| p.1).sum::<f64>() / (2.0 * PI);
    let (d_plus, d_minus) = (raw_plus.round(), raw_minus.round());
    let (e_plus, e_minus) = ((raw_plus - d_plus).abs(), (raw_minus - d_minus).abs());
    let distance = e_plus.max(e_minus);
    if distance > 0.2 {
        let value = if e_plus >= e_minus { raw_plus } else { raw_minus };
        return Err(Error::DegreeUnresolved { value, distance });
    }
    Ok(GaussDegrees {
        d_plus: d_plus as i64,
        d_minus: d_minus as i64,
        raw_plus,
        raw_minus,
        distance,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelReport {
    pub resolution: usize,
    pub truncation: f64,
    pub vertices: usize,
    pub u_min: f64,
    pub u_max: f64,
    pub u_center: f64,
    pub five_point_residual: f64,
    pub period_mismatch: f64,
    /// max |H| over interior vertices, from `minimality_residual`.
    pub minimality_residual: f64,
    /// max |H| over interior vertices of the chart mesh itself, from
    /// `dual_mean_curvature`. Dominated by the polar fan at the chart centre.
    pub mesh_mean_curvature: f64,
    /// Largest distance from a rim vertex to its boundary line, over rim
    /// vertices at chart distance ≥ `trace_margin` from the jump points.
    pub boundary_line_distance: f64,
    pub trace_margin: f64,
    /// Largest distance of the image of the chart axis from the x-axis.
    pub x_minus_distance: f64,
    /// Extent of the x-axis covered by that image.
    pub x_minus_range: (f64, f64),
    /// Largest excursion outside {x ≤ 0} ∩ {−1 ≤ z ≤ 1}.
    pub slab_excess: f64,
    pub degrees: Option<GaussDegrees>,
    pub total_curvature: f64,
    /// ∫|K| over the chart halves {Re w < 0} and {Re w > 0}.
    pub half_curvatures: (f64, f64),
}

/// Every check on the rebuilt surface.
pub fn model_report(chart: &ModelChart, surface: &ModelSurface) -> ModelReport {
    let mesh = &surface.mesh;
    let pos = mesh.positions();
    let hvec = dual_mean_curvature(mesh);
    let mesh_mean_curvature = (0..mesh.num_vertices())
        .filter(|&v| !mesh.is_boundary_vertex(v))
        .map(|v| hvec[v].norm())
        .fold(0.0, f64::max);
    let rim = 1.0 - surface.truncation;
    let trace_margin = TRACE_MARGIN.max(1e3 * rim);
    let mut boundary_line_distance: f64 = 0.0;
    for l in mesh.boundary_loops() {
        for &v in l {
            let w = surface.chart[v];
            let near_jump = JUMPS.iter().any(|&j| (w - C::from_polar(1.0, j)).norm() < trace_margin);
            if near_jump {
                continue;
            }
            let height = boundary_value(w.arg());
            let p = pos[v];
            boundary_line_distance = boundary_line_distance.max(p.x.hypot(p.z - height));
        }
    }
    let mut x_minus_distance: f64 = 0.0;
    let mut x_range = (f64::INFINITY, f64::NEG_INFINITY);
    for (v, w) in surface.chart.iter().enumerate() {
        if w.re.abs() < 1e-12 {
            let p = pos[v];
            x_minus_distance = x_minus_distance.max(p.y.hypot(p.z));
            x_range = (x_range.0.min(p.x), x_range.1.max(p.x));
        }
    }
    let slab_excess = pos
        .iter()
        .map(|p| p.x.max(p.z.abs() - 1.0).max(0.0))
        .fold(0.0, f64::max);
    let (u_min, u_max) = chart.u_range();
    let centroid_re = |f: usize| {
        let [a, b, c] = mesh.faces()[f];
        (surface.chart[a] + surface.chart[b] + surface.chart[c]).re
    };
    ModelReport {
        resolution: chart.resolution,
        truncation: surface.truncation,
        vertices: mesh.num_vertices(),
        u_min,
        u_max,
        u_center: chart.u_center(),
        five_point_residual: chart.five_point_residual(0.5),
        period_mismatch: surface.period_mismatch,
        minimality_residual: minimality_residual(surface),
        mesh_mean_curvature,
        boundary_line_distance,
        trace_margin,
        x_minus_distance,
        x_minus_range: x_range,
        slab_excess,
        degrees: gauss_degrees(mesh).ok(),
        total_curvature: gauss_image_area(mesh, |_| true),
        half_curvatures: (
            gauss_image_area(mesh, |f| centroid_re(f) < 0.0),
            gauss_image_area(mesh, |f| centroid_re(f) > 0.0),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn closed_form_matches_poisson_integral() {
        for w in [C::new(0.3, 0.2), C::new(-0.5, 0.6), C::new(0.1, -0.9), C::new(0.0, 0.0)] {
            assert!((harmonic_u(w) - poisson_quadrature(w, 200)).abs() < 1e-8, "{w}");
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let w = C::new(0.2, -0.3);
        let h = 1e-6;
        let f = |w: C| C::new(harmonic_u(w), harmonic_conjugate(w));
        let fd = (f(w + C::new(h, 0.0)) - f(w - C::new(h, 0.0))) / (2.0 * h);
        assert!((fd - harmonic_derivative(w)).norm() < 1e-8);
    }

    #[test]
    fn stereographic_round_trip() {
        let w = C::new(0.4, -0.7);
        let n = chart_to_normal(w);
        assert!((n.norm() - 1.0).abs() < 1e-15);
        assert!(n.y < 0.0);
        assert!((normal_to_chart(&n) - w).norm() < 1e-14);
    }

    #[test]
    fn gauss_map_is_the_chart_normal() {
        // G is the stereographic image (from e₃) of ν(w̄).
        let zeta = C::new(0.3, 0.5);
        let n = chart_to_normal(zeta.conj());
        let g = C::new(n.x, n.y) / (1.0 - n.z);
        assert!((g - gauss_g(zeta)).norm() < 1e-14);
    }

    #[test]
    fn graded_nodes_hit_ends() {
        let n = graded_nodes(0.0, 1.0, |x| 0.01 + 0.1 * x);
        assert_eq!(n[0], 0.0);
        assert_eq!(*n.last().unwrap(), 1.0);
        assert!(n.windows(2).all(|w| w[1] > w[0]));
    }
}
