//! Boundary curves on spheres, the curve Γ(ε) and seed surfaces.

mod big;
mod planar;
mod seed;

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::foliation::circle_of_leaf;
use crate::symmetry::SymmetryGroup;
use crate::Vec3;

pub use big::{seed_big, BigSeedOptions};
pub use seed::{cap_inner, capped_seed, reflect_union, seed_annulus, SeedOptions, WELD_TOL};

/// Default admissibility threshold on the slope max |z|/√(x²+y²).
pub const DEFAULT_EPS_STAR: f64 = 0.05;
/// Default number of segments per boundary circle.
pub const DEFAULT_N_SEG: usize = 64;

/// Outcome of checking a boundary triple.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ValidationReport {
    pub curve_count: usize,
    pub on_sphere: bool,
    pub embedded: bool,
    pub off_axis: bool,
    pub pairwise_disjoint: bool,
    pub windings: Vec<i64>,
    pub eps_max: f64,
    pub eps_star: f64,
    pub region_ok: bool,
    /// `None` when no group was requested.
    pub symmetric: Option<bool>,
    pub symmetry_residual: Option<f64>,
    pub messages: Vec<String>,
}

impl ValidationReport {
    /// Membership in the admissible class: three embedded, disjoint curves,
    /// each winding once around Z, inside the slope region, symmetric.
    pub fn admissible(&self) -> bool {
        self.curve_count == 3
            && self.on_sphere
            && self.embedded
            && self.off_axis
            && self.pairwise_disjoint
            && self.windings.iter().all(|w| w.abs() == 1)
            && self.region_ok
            && self.symmetric.unwrap_or(true)
    }
}

/// Closed curves on ∂B(0, R), sorted by decreasing mean height.
#[derive(Debug, Clone, Serialize)]
pub struct BoundarySpec {
    pub radius: f64,
    #[serde(serialize_with = "ser_curves")]
    pub curves: Vec<Vec<Vec3>>,
    /// (ρ, z) per curve when every curve is a horizontal circle.
    pub circles: Option<Vec<(f64, f64)>>,
    /// Leaf label for three-circle data built from the foliation.
    pub leaf_label: Option<f64>,
    pub k: Option<usize>,
    pub report: ValidationReport,
}

fn ser_curves<S: serde::Serializer>(c: &[Vec<Vec3>], s: S) -> std::result::Result<S::Ok, S::Error> {
    let v: Vec<Vec<[f64; 3]>> = c
        .iter()
        .map(|cv| cv.iter().map(|p| [p.x, p.y, p.z]).collect())
        .collect();
    v.serialize(s)
}

impl BoundarySpec {
    /// Build from raw curves and validate against G_k (if given) and `eps_star`.
    pub fn from_curves(mut curves: Vec<Vec<Vec3>>, radius: f64, k: Option<usize>, eps_star: f64) -> Result<Self> {
        for c in curves.iter_mut() {
            if c.len() > 1 && (c[0] - c[c.len() - 1]).norm() <= 1e-12 * radius {
                c.pop();
            }
            if c.len() < 3 {
                return Err(Error::InvalidParameter("a boundary curve needs at least 3 points".into()));
            }
        }
        sort_by_height(&mut curves);
        let mut spec = Self {
            radius,
            curves,
            circles: None,
            leaf_label: None,
            k,
            report: empty_report(eps_star),
        };
        spec.report = spec.validate(k, eps_star)?;
        Ok(spec)
    }

    pub fn validate(&self, k: Option<usize>, eps_star: f64) -> Result<ValidationReport> {
        validate_curves(&self.curves, self.radius, self.circles.as_deref(), k, eps_star)
    }

    /// Points of all curves, for symmetry checks.
    pub fn all_points(&self) -> Vec<Vec3> {
        self.curves.iter().flatten().copied().collect()
    }

    /// One CSV per curve with rows x,y,z.
    pub fn curve_csvs(&self) -> Vec<String> {
        self.curves
            .iter()
            .map(|c| {
                let mut s = String::from("x,y,z\n");
                for p in c {
                    let _ = writeln!(s, "{:?},{:?},{:?}", p.x, p.y, p.z);
                }
                s
            })
            .collect()
    }

    /// Metadata (radius, windings, slope, validation) as JSON, without points.
    pub fn metadata_json(&self) -> serde_json::Value {
        serde_json::json!({
            "radius": self.radius,
            "curve_points": self.curves.iter().map(|c| c.len()).collect::<Vec<_>>(),
            "circles": self.circles,
            "leaf_label": self.leaf_label,
            "k": self.k,
            "validation": self.report,
        })
    }

    /// Write `curve_<i>.csv` per curve and `boundary.json` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (i, csv) in self.curve_csvs().into_iter().enumerate() {
            let p = dir.join(format!("curve_{i}.csv"));
            std::fs::write(&p, csv).map_err(|e| Error::io(&p, e))?;
        }
        let p = dir.join("boundary.json");
        let text = serde_json::to_string_pretty(&self.metadata_json())
            .map_err(|e| Error::Numerical(e.to_string()))?;
        std::fs::write(&p, text).map_err(|e| Error::io(&p, e))
    }
}

fn empty_report(eps_star: f64) -> ValidationReport {
    ValidationReport {
        curve_count: 0,
        on_sphere: false,
        embedded: false,
        off_axis: false,
        pairwise_disjoint: false,
        windings: Vec::new(),
        eps_max: f64::NAN,
        eps_star,
        region_ok: false,
        symmetric: None,
        symmetry_residual: None,
        messages: Vec::new(),
    }
}

fn sort_by_height(curves: &mut [Vec<Vec3>]) {
    curves.sort_by(|a, b| {
        let za = a.iter().map(|p| p.z).sum::<f64>() / a.len() as f64;
        let zb = b.iter().map(|p| p.z).sum::<f64>() / b.len() as f64;
        zb.total_cmp(&za)
    });
}

/// Winding number about Z from the summed angle increments.
pub fn winding_number(curve: &[Vec3]) -> f64 {
    let n = curve.len();
    let mut total = 0.0;
    for i in 0..n {
        let a = curve[i];
        let b = curve[(i + 1) % n];
        let mut d = b.y.atan2(b.x) - a.y.atan2(a.x);
        while d > PI {
            d -= 2.0 * PI;
        }
        while d < -PI {
            d += 2.0 * PI;
        }
        total += d;
    }
    total / (2.0 * PI)
}

/// Distance between segments [p0,p1] and [q0,q1].
pub fn segment_distance(p0: &Vec3, p1: &Vec3, q0: &Vec3, q1: &Vec3) -> f64 {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    let (s, t);
    if a <= 1e-300 && e <= 1e-300 {
        return r.norm();
    }
    if a <= 1e-300 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= 1e-300 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 1e-300 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    (p0 + d1 * s - (q0 + d2 * t)).norm()
}

fn point_segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let d = b - a;
    let l2 = d.norm_squared();
    let t = if l2 > 0.0 { ((p - a).dot(&d) / l2).clamp(0.0, 1.0) } else { 0.0 };
    (a + d * t - p).norm()
}

/// Whether a closed polyline has no two non-adjacent segments closer than `tol`.
pub fn closed_polyline_is_simple(c: &[Vec3], tol: f64) -> bool {
    let n = c.len();
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segment_distance(&c[i], &c[(i + 1) % n], &c[j], &c[(j + 1) % n]) <= tol {
                return false;
            }
        }
    }
    true
}

fn curves_distance(a: &[Vec3], b: &[Vec3]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..a.len() {
        for j in 0..b.len() {
            best = best.min(segment_distance(
                &a[i],
                &a[(i + 1) % a.len()],
                &b[j],
                &b[(j + 1) % b.len()],
            ));
        }
    }
    best
}

/// Largest distance from a transformed curve point to the curve set.
pub fn symmetry_residual(curves: &[Vec<Vec3>], group: &SymmetryGroup) -> f64 {
    let mut worst: f64 = 0.0;
    for g in group.elements() {
        for c in curves {
            for p in c {
                let q = g * p;
                let mut best = f64::INFINITY;
                for d in curves {
                    for i in 0..d.len() {
                        best = best.min(point_segment_distance(&q, &d[i], &d[(i + 1) % d.len()]));
                        if best == 0.0 {
                            break;
                        }
                    }
                }
                worst = worst.max(best);
            }
        }
    }
    worst
}

fn validate_curves(
    curves: &[Vec<Vec3>],
    radius: f64,
    circles: Option<&[(f64, f64)]>,
    k: Option<usize>,
    eps_star: f64,
) -> Result<ValidationReport> {
    let tol = 1e-9 * radius;
    let mut rep = empty_report(eps_star);
    rep.curve_count = curves.len();
    rep.on_sphere = curves
        .iter()
        .flatten()
        .all(|p| (p.norm() - radius).abs() <= 1e-8 * radius);
    if !rep.on_sphere {
        rep.messages.push("curve points off the sphere".into());
    }
    rep.embedded = curves.iter().all(|c| closed_polyline_is_simple(c, tol));
    if !rep.embedded {
        rep.messages.push("a curve is not embedded".into());
    }
    let min_rho = curves
        .iter()
        .flatten()
        .map(|p| (p.x * p.x + p.y * p.y).sqrt())
        .fold(f64::INFINITY, f64::min);
    rep.off_axis = min_rho > tol;
    if !rep.off_axis {
        rep.messages.push("a curve meets the z-axis".into());
    }
    rep.pairwise_disjoint = true;
    for i in 0..curves.len() {
        for j in i + 1..curves.len() {
            if curves_distance(&curves[i], &curves[j]) <= tol {
                rep.pairwise_disjoint = false;
                rep.messages.push(format!("curves {i} and {j} intersect"));
            }
        }
    }
    rep.windings = curves
        .iter()
        .map(|c| winding_number(c).round() as i64)
        .collect();
    for (i, w) in rep.windings.iter().enumerate() {
        if w.abs() != 1 {
            rep.messages.push(format!("curve {i} winds {w} times around Z"));
        }
    }
    rep.eps_max = curves
        .iter()
        .flatten()
        .map(|p| p.z.abs() / (p.x * p.x + p.y * p.y).sqrt())
        .fold(0.0, f64::max);
    rep.region_ok = rep.eps_max <= eps_star;
    if !rep.region_ok {
        rep.messages.push(format!(
            "slope bound violated: eps_max = {:.6} > {eps_star}",
            rep.eps_max
        ));
    }
    if let Some(k) = k {
        let (ok, res) = match circles {
            // horizontal circles about Z: invariant iff the heights are symmetric
            Some(cs) => {
                let mut zs: Vec<f64> = cs.iter().map(|c| c.1).collect();
                zs.sort_by(f64::total_cmp);
                let mut neg: Vec<f64> = zs.iter().map(|z| -z).collect();
                neg.sort_by(f64::total_cmp);
                let res = zs
                    .iter()
                    .zip(&neg)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                (res <= tol, res)
            }
            None => {
                let g = SymmetryGroup::build(k)?;
                let res = symmetry_residual(curves, &g);
                (res <= tol, res)
            }
        };
        rep.symmetric = Some(ok);
        rep.symmetry_residual = Some(res);
        if !ok {
            rep.messages.push(format!("not G_{k}-invariant (residual {res:.3e})"));
        }
    }
    Ok(rep)
}

fn circle_points(rho: f64, z: f64, n: usize) -> Vec<Vec3> {
    (0..n)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / n as f64;
            Vec3::new(rho * t.cos(), rho * t.sin(), z)
        })
        .collect()
}

/// Three horizontal circles cut from ∂B(0,R) by the leaves with labels s, 0, −s.
pub fn make_circles_boundary(s: f64, radius: f64, n_seg: usize) -> Result<BoundarySpec> {
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "the three circles need a leaf label s > 0, got {s}"
        )));
    }
    if n_seg < 16 {
        return Err(Error::InvalidParameter(format!("n_seg must be at least 16, got {n_seg}")));
    }
    let (rho, z) = circle_of_leaf(s, radius)?;
    let circles = vec![(rho, z), (radius, 0.0), (rho, -z)];
    let curves = circles.iter().map(|&(r, h)| circle_points(r, h, n_seg)).collect();
    let mut spec = BoundarySpec {
        radius,
        curves,
        circles: Some(circles),
        leaf_label: Some(s),
        k: None,
        report: empty_report(DEFAULT_EPS_STAR),
    };
    spec.report = spec.validate(None, DEFAULT_EPS_STAR)?;
    Ok(spec)
}

/// Three horizontal circles at the given heights on ∂B(0,R).
pub fn circles_at_heights(heights: &[f64], radius: f64, n_seg: usize) -> Result<BoundarySpec> {
    let mut circles = Vec::new();
    for &z in heights {
        if z.abs() >= radius {
            return Err(Error::Geometry(format!("height {z} misses the sphere of radius {radius}")));
        }
        circles.push(((radius * radius - z * z).sqrt(), z));
    }
    circles.sort_by(|a, b| b.1.total_cmp(&a.1));
    let curves = circles.iter().map(|&(r, h)| circle_points(r, h, n_seg)).collect();
    let mut spec = BoundarySpec {
        radius,
        curves,
        circles: Some(circles),
        leaf_label: None,
        k: None,
        report: empty_report(DEFAULT_EPS_STAR),
    };
    spec.report = spec.validate(None, DEFAULT_EPS_STAR)?;
    Ok(spec)
}

/// Boundary from a link of three curves on the unit sphere, scaled by R and
/// checked against G_k and the default slope threshold.
pub fn make_cone_boundary(link: &[Vec<Vec3>], radius: f64, k: usize) -> Result<BoundarySpec> {
    make_cone_boundary_with(link, radius, k, DEFAULT_EPS_STAR)
}

pub fn make_cone_boundary_with(link: &[Vec<Vec3>], radius: f64, k: usize, eps_star: f64) -> Result<BoundarySpec> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    for c in link {
        if c.iter().any(|p| (p.norm() - 1.0).abs() > 1e-8) {
            return Err(Error::InvalidParameter("link curves must lie on the unit sphere".into()));
        }
    }
    let curves = link
        .iter()
        .map(|c| c.iter().map(|p| p * radius).collect())
        .collect();
    let spec = BoundarySpec::from_curves(curves, radius, Some(k), eps_star)?;
    let rep = &spec.report;
    if let Some((i, w)) = rep.windings.iter().enumerate().find(|(_, w)| w.abs() != 1) {
        return Err(Error::RejectedBoundary(format!("curve {i} winds {w} times around Z")));
    }
    if !rep.region_ok {
        return Err(Error::RejectedBoundary(format!(
            "slope bound violated: eps_max = {:.6} exceeds {eps_star}",
            rep.eps_max
        )));
    }
    if !rep.embedded || !rep.pairwise_disjoint || !rep.off_axis {
        return Err(Error::RejectedBoundary(rep.messages.join("; ")));
    }
    Ok(spec)
}

/// Pieces of Γ(ε).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GammaPiece {
    OuterArc,
    Radial,
    InnerArc,
}

/// The closed curve Γ(ε) in {z = 0}: the boundary of the union of the even
/// sectors of D_R with D_ε, traversed counterclockwise.
#[derive(Debug, Clone)]
pub struct Gamma {
    pub points: Vec<Vec3>,
    /// Piece containing the segment from point i to point i+1.
    pub pieces: Vec<GammaPiece>,
}

impl Gamma {
    pub fn enclosed_area(&self) -> f64 {
        let n = self.points.len();
        0.5 * (0..n)
            .map(|i| {
                let a = self.points[i];
                let b = self.points[(i + 1) % n];
                a.x * b.y - b.x * a.y
            })
            .sum::<f64>()
    }

    /// Sum of the exterior angles of the polygon.
    pub fn total_turning(&self) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|i| {
                let a = self.points[(i + n - 1) % n];
                let b = self.points[i];
                let c = self.points[(i + 1) % n];
                let u = b - a;
                let v = c - b;
                (u.x * v.y - u.y * v.x).atan2(u.x * v.x + u.y * v.y)
            })
            .sum()
    }

    pub fn is_simple(&self) -> bool {
        closed_polyline_is_simple(&self.points, 1e-12)
    }

    pub fn count(&self, piece: GammaPiece) -> usize {
        // pieces are contiguous runs
        let n = self.pieces.len();
        (0..n)
            .filter(|&i| self.pieces[i] == piece && self.pieces[(i + n - 1) % n] != piece)
            .count()
    }
}

/// Γ(ε) with roughly uniform spacing `h`.
pub fn make_gamma(k: usize, radius: f64, eps: f64) -> Result<Gamma> {
    make_gamma_with_spacing(k, radius, eps, radius / 48.0)
}

pub fn make_gamma_with_spacing(k: usize, radius: f64, eps: f64, h: f64) -> Result<Gamma> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if !(eps > 0.0) || eps >= radius {
        return Err(Error::InvalidParameter(format!("need 0 < ε < R, got ε = {eps}, R = {radius}")));
    }
    let kf = k as f64;
    let half = PI / (2.0 * kf);
    let polar = |r: f64, t: f64| Vec3::new(r * t.cos(), r * t.sin(), 0.0);
    let mut points = Vec::new();
    let mut pieces = Vec::new();
    let arc = |r: f64, t0: f64, t1: f64, piece: GammaPiece, pts: &mut Vec<Vec3>, pcs: &mut Vec<GammaPiece>| {
        let n = ((r * (t1 - t0)).abs() / h).ceil().max(4.0) as usize;
        for i in 0..n {
            pts.push(polar(r, t0 + (t1 - t0) * i as f64 / n as f64));
            pcs.push(piece);
        }
    };
    let radial = |t: f64, r0: f64, r1: f64, pts: &mut Vec<Vec3>, pcs: &mut Vec<GammaPiece>| {
        let n = ((r1 - r0).abs() / h).ceil().max(2.0) as usize;
        for i in 0..n {
            pts.push(polar(r0 + (r1 - r0) * i as f64 / n as f64, t));
            pcs.push(GammaPiece::Radial);
        }
    };
    for j in 0..k {
        let c = 2.0 * j as f64 * PI / kf;
        arc(radius, c - half, c + half, GammaPiece::OuterArc, &mut points, &mut pieces);
        radial(c + half, radius, eps, &mut points, &mut pieces);
        arc(eps, c + half, c + 3.0 * half, GammaPiece::InnerArc, &mut points, &mut pieces);
        radial(c + 3.0 * half, eps, radius, &mut points, &mut pieces);
    }
    Ok(Gamma { points, pieces })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn winding_of_circle() {
        let c = circle_points(1.0, 0.2, 40);
        assert!((winding_number(&c) - 1.0).abs() < 1e-12);
        let mut r = c.clone();
        r.reverse();
        assert!((winding_number(&r) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn segment_distance_cases() {
        let o = Vec3::zeros();
        let x = Vec3::x();
        let d = segment_distance(&o, &x, &Vec3::new(0.5, 1.0, 0.0), &Vec3::new(0.5, 2.0, 0.0));
        assert!((d - 1.0).abs() < 1e-15);
        let d = segment_distance(&o, &x, &Vec3::new(0.5, -1.0, 1.0), &Vec3::new(0.5, 1.0, 1.0));
        assert!((d - 1.0).abs() < 1e-15);
    }
}
