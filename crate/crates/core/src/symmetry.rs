//! The finite isometry groups G_k, the line family Q_k, and even/odd arcs.
//!
//! G_k is generated by rotations through π about the k horizontal lines at
//! angles that are odd multiples of π/(2k), together with reflections in the
//! vertical planes whose angle is a multiple of π/k. It has 4k elements.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::spatial::PointLocator;
use crate::{Mat3, Vec3};

/// Matrix distance used for deduplicating group elements.
pub const ELEMENT_TOL: f64 = 1e-12;
/// Distance within which a transformed vertex must land on another vertex.
pub const ORBIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct SymmetryGroup {
    k: usize,
    elements: Vec<Mat3>,
    q_lines: Vec<Vec3>,
    mirror_normals: Vec<Vec3>,
}

/// Rotation by π about the horizontal line through the origin at angle `theta`.
pub fn half_turn_about_horizontal(theta: f64) -> Mat3 {
    let u = Vec3::new(theta.cos(), theta.sin(), 0.0);
    2.0 * u * u.transpose() - Mat3::identity()
}

/// Reflection in the vertical plane P_α spanned by e₃ and (cos α, sin α, 0).
pub fn vertical_mirror(alpha: f64) -> Mat3 {
    let n = Vec3::new(-alpha.sin(), alpha.cos(), 0.0);
    Mat3::identity() - 2.0 * n * n.transpose()
}

/// Rotation about the z-axis.
pub fn rotation_z(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Reflection in the plane {z = 0}.
pub fn z_mirror() -> Mat3 {
    Mat3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0)
}

fn mat_dist(a: &Mat3, b: &Mat3) -> f64 {
    (a - b).abs().max()
}

impl SymmetryGroup {
    /// Build G_k as the closure of its generators.
    pub fn build(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        let kf = k as f64;
        let q_lines: Vec<Vec3> = (0..k)
            .map(|j| {
                let t = (2 * j + 1) as f64 * PI / (2.0 * kf);
                Vec3::new(t.cos(), t.sin(), 0.0)
            })
            .collect();
        let mirror_normals: Vec<Vec3> = (0..k)
            .map(|j| {
                let a = j as f64 * PI / kf;
                Vec3::new(-a.sin(), a.cos(), 0.0)
            })
            .collect();
        let mut gens = Vec::with_capacity(2 * k);
        for j in 0..k {
            gens.push(half_turn_about_horizontal((2 * j + 1) as f64 * PI / (2.0 * kf)));
            gens.push(vertical_mirror(j as f64 * PI / kf));
        }
        let elements = close_under_products(&gens);
        Ok(Self {
            k,
            elements,
            q_lines,
            mirror_normals,
        })
    }

    /// The group containing only the identity.
    pub fn trivial() -> Self {
        Self {
            k: 0,
            elements: vec![Mat3::identity()],
            q_lines: Vec::new(),
            mirror_normals: Vec::new(),
        }
    }

    /// Closure of an arbitrary set of orthogonal generators.
    pub fn from_generators(gens: &[Mat3]) -> Self {
        Self {
            k: 0,
            elements: close_under_products(gens),
            q_lines: Vec::new(),
            mirror_normals: Vec::new(),
        }
    }

    /// The subgroup of elements that do not exchange {z > 0} and {z < 0}.
    /// For G_k this is the dihedral group of order 2k fixing the upper half.
    pub fn z_preserving(&self) -> Self {
        Self {
            k: self.k,
            elements: self
                .elements
                .iter()
                .filter(|g| g[(2, 2)] > 0.0)
                .copied()
                .collect(),
            q_lines: self.q_lines.clone(),
            mirror_normals: self.mirror_normals.clone(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn elements(&self) -> &[Mat3] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn q_lines(&self) -> &[Vec3] {
        &self.q_lines
    }

    pub fn mirror_normals(&self) -> &[Vec3] {
        &self.mirror_normals
    }

    /// Whether `m` is an element, up to [`ELEMENT_TOL`].
    pub fn contains(&self, m: &Mat3) -> bool {
        self.elements.iter().any(|g| mat_dist(g, m) < ELEMENT_TOL)
    }

    /// Whether a point set is invariant (as a set) within `tol`.
    pub fn point_set_invariant(&self, pts: &[Vec3], tol: f64) -> bool {
        let loc = PointLocator::new(pts, tol);
        self.elements
            .iter()
            .all(|g| pts.iter().all(|p| loc.nearest(&(g * p), tol).is_some()))
    }
}

fn close_under_products(gens: &[Mat3]) -> Vec<Mat3> {
    let mut elements = vec![Mat3::identity()];
    let mut frontier = vec![Mat3::identity()];
    while let Some(a) = frontier.pop() {
        for g in gens {
            let p = g * a;
            if !elements.iter().any(|e| mat_dist(e, &p) < ELEMENT_TOL) {
                elements.push(p);
                frontier.push(p);
            }
        }
    }
    elements
}

/// Whether G_k is contained in G_n, decided by comparing group elements.
pub fn is_subgroup(k: usize, n: usize) -> Result<bool> {
    if k == 0 || n == 0 {
        return Err(Error::InvalidParameter("k and n must be positive".into()));
    }
    if k > n {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds n = {n}")));
    }
    let gk = SymmetryGroup::build(k)?;
    let gn = SymmetryGroup::build(n)?;
    Ok(gk.elements().iter().all(|g| gn.contains(g)))
}

/// The 2k points of Q_k ∩ ∂D_r, at angles that are odd multiples of π/(2k).
pub fn q_points(k: usize, r: f64) -> Result<Vec<Vec3>> {
    validate_k_r(k, r)?;
    let kf = k as f64;
    Ok((0..2 * k)
        .map(|j| {
            let t = (2 * j + 1) as f64 * PI / (2.0 * kf);
            Vec3::new(r * t.cos(), r * t.sin(), 0.0)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcParity {
    Even,
    Odd,
}

/// Midpoint of one component of ∂D_r ∖ Q_k.
#[derive(Debug, Clone, Copy)]
pub struct ArcMidpoint {
    pub theta: f64,
    pub point: Vec3,
    pub parity: ArcParity,
}

/// Midpoints of the 2k arcs of ∂D_r ∖ Q_k, at θ = jπ/k; even j gives an even arc.
pub fn arc_midpoints(k: usize, r: f64) -> Result<Vec<ArcMidpoint>> {
    validate_k_r(k, r)?;
    let kf = k as f64;
    Ok((0..2 * k)
        .map(|j| {
            let theta = j as f64 * PI / kf;
            ArcMidpoint {
                theta,
                point: Vec3::new(r * theta.cos(), r * theta.sin(), 0.0),
                parity: if j % 2 == 0 {
                    ArcParity::Even
                } else {
                    ArcParity::Odd
                },
            }
        })
        .collect())
}

/// Parity of the arc of ∂D_r ∖ Q_k containing angle `theta`.
pub fn arc_parity(k: usize, theta: f64) -> ArcParity {
    let kf = k as f64;
    let j = ((theta * kf / PI) + 0.5).floor() as i64;
    if j.rem_euclid(2) == 0 {
        ArcParity::Even
    } else {
        ArcParity::Odd
    }
}

fn validate_k_r(k: usize, r: f64) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {r}")));
    }
    Ok(())
}

/// Vertex permutations induced by every group element on a fixed point set.
#[derive(Debug, Clone)]
pub struct VertexAction {
    elements: Vec<Mat3>,
    /// `perm[g][v]` is the vertex that element `g` sends vertex `v` to.
    perm: Vec<Vec<usize>>,
}

impl VertexAction {
    /// Discover the action by nearest-image matching within [`ORBIT_TOL`].
    pub fn discover(points: &[Vec3], group: &SymmetryGroup) -> Result<Self> {
        Self::discover_with_tol(points, group, ORBIT_TOL)
    }

    pub fn discover_with_tol(points: &[Vec3], group: &SymmetryGroup, tol: f64) -> Result<Self> {
        let loc = PointLocator::new(points, tol);
        let mut perm = Vec::with_capacity(group.len());
        for (gi, g) in group.elements().iter().enumerate() {
            let mut p = Vec::with_capacity(points.len());
            let mut hit = vec![false; points.len()];
            for (v, x) in points.iter().enumerate() {
                let img = g * x;
                let u = loc.nearest(&img, tol).ok_or_else(|| {
                    Error::SymmetryMismatch(format!(
                        "element {gi} sends vertex {v} to a point with no vertex within {tol:e}"
                    ))
                })?;
                if hit[u] {
                    return Err(Error::SymmetryMismatch(format!(
                        "element {gi} is not a bijection on vertices (vertex {u} hit twice)"
                    )));
                }
                hit[u] = true;
                p.push(u);
            }
            perm.push(p);
        }
        Ok(Self {
            elements: group.elements().to_vec(),
            perm,
        })
    }

    pub fn elements(&self) -> &[Mat3] {
        &self.elements
    }

    pub fn permutation(&self, g: usize) -> &[usize] {
        &self.perm[g]
    }

    /// Replace each point by the average of its orbit images pulled back.
    pub fn average_points(&self, pts: &mut [Vec3]) {
        let src = pts.to_vec();
        let n = self.elements.len() as f64;
        for (v, out) in pts.iter_mut().enumerate() {
            let mut acc = Vec3::zeros();
            for (g, m) in self.elements.iter().enumerate() {
                acc += m.transpose() * src[self.perm[g][v]];
            }
            *out = acc / n;
        }
    }

    /// Same averaging for a vector field that transforms like positions.
    pub fn average_vectors(&self, vecs: &mut [Vec3]) {
        self.average_points(vecs)
    }

    /// Largest displacement between g·p_v and p_{σ_g(v)} over all g, v.
    pub fn residual(&self, pts: &[Vec3]) -> f64 {
        let mut worst: f64 = 0.0;
        for (g, m) in self.elements.iter().enumerate() {
            for (v, p) in pts.iter().enumerate() {
                worst = worst.max((m * p - pts[self.perm[g][v]]).norm());
            }
        }
        worst
    }

    /// Vertex orbits, each sorted, listed by smallest member.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let n = self.perm.first().map_or(0, |p| p.len());
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for v in 0..n {
            if seen[v] {
                continue;
            }
            let mut orbit: Vec<usize> = self.perm.iter().map(|p| p[v]).collect();
            orbit.sort_unstable();
            orbit.dedup();
            for &u in &orbit {
                seen[u] = true;
            }
            out.push(orbit);
        }
        out
    }
}

/// Replace vertex positions by exact orbit averages.
pub fn symmetrize_mesh(mesh: &TriMesh, group: &SymmetryGroup) -> Result<TriMesh> {
    let action = VertexAction::discover(mesh.positions(), group)?;
    let mut out = mesh.clone();
    action.average_points(out.positions_mut());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn element_counts() {
        for k in 1..=8 {
            assert_eq!(SymmetryGroup::build(k).unwrap().len(), 4 * k);
        }
    }

    #[test]
    fn k2_contains_quarter_line_half_turn() {
        let g = SymmetryGroup::build(2).unwrap();
        assert!(g.contains(&half_turn_about_horizontal(PI / 4.0)));
        assert!(g.contains(&Mat3::identity()));
    }

    #[test]
    fn contains_listed_families() {
        for k in 1..=6 {
            let g = SymmetryGroup::build(k).unwrap();
            let kf = k as f64;
            for j in 0..k {
                assert!(g.contains(&rotation_z(2.0 * PI * j as f64 / kf)));
                let odd = (2 * j + 1) as f64 * PI / kf;
                assert!(g.contains(&(z_mirror() * rotation_z(odd))));
            }
            assert!(g.contains(&vertical_mirror(0.0)));
            assert!(!g.contains(&z_mirror()));
        }
    }

    #[test]
    fn closure_and_inverses() {
        let g = SymmetryGroup::build(3).unwrap();
        for a in g.elements() {
            assert!(g.contains(&a.transpose()));
            for b in g.elements() {
                assert!(g.contains(&(a * b)));
            }
            let e3 = Vec3::z();
            assert!((a * e3).cross(&e3).norm() < 1e-12);
        }
    }

    #[test]
    fn subgroup_examples() {
        assert!(is_subgroup(2, 6).unwrap());
        assert!(!is_subgroup(2, 4).unwrap());
        assert!(is_subgroup(3, 3).unwrap());
        assert!(is_subgroup(3, 2).is_err());
    }

    #[test]
    fn q_points_k1() {
        let q = q_points(1, 1.0).unwrap();
        assert!((q[0] - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-15);
        assert!((q[1] - Vec3::new(0.0, -1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn arc_midpoints_k2() {
        let m = arc_midpoints(2, 1.0).unwrap();
        let thetas: Vec<f64> = m.iter().map(|a| a.theta).collect();
        for (t, want) in thetas.iter().zip([0.0, PI / 2.0, PI, 1.5 * PI]) {
            assert!((t - want).abs() < 1e-15);
        }
        let even: Vec<f64> = m
            .iter()
            .filter(|a| a.parity == ArcParity::Even)
            .map(|a| a.theta)
            .collect();
        assert_eq!(even.len(), 2);
        assert!(even[0].abs() < 1e-15 && (even[1] - PI).abs() < 1e-15);
    }
}
