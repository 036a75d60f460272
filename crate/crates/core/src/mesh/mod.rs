//! Oriented triangle meshes with boundary.

pub(crate) mod geometry;
mod io;
mod shapes;
mod slice;

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spatial::PointLocator;
use crate::{Mat3, Vec3};

pub use shapes::{flat_disk, radial_graph, sphere};
pub use geometry::{GeometryCache, VertexGeometry};
pub use io::{load_mesh, load_mesh_with_warnings, save_mesh, sidecar_path};
pub use slice::{slice_y0, BoundaryLabel, Slice, SlicePolyline};

/// A curve that boundary vertices may be attached to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Curve {
    /// Horizontal circle about the z-axis; parameter is the angle.
    Circle { z: f64, radius: f64 },
    /// Closed polyline; parameter is the cumulative chord length.
    Polyline { points: Vec<[f64; 3]> },
}

impl Curve {
    pub fn point_at(&self, param: f64) -> Vec3 {
        match self {
            Curve::Circle { z, radius } => {
                Vec3::new(radius * param.cos(), radius * param.sin(), *z)
            }
            Curve::Polyline { points } => polyline_point_at(points, param),
        }
    }

    /// Parameter of the point on the curve closest to `p`.
    pub fn project(&self, p: &Vec3) -> f64 {
        match self {
            Curve::Circle { .. } => p.y.atan2(p.x),
            Curve::Polyline { points } => polyline_project(points, p),
        }
    }
}

fn to_v(p: &[f64; 3]) -> Vec3 {
    Vec3::new(p[0], p[1], p[2])
}

fn polyline_point_at(points: &[[f64; 3]], param: f64) -> Vec3 {
    let n = points.len();
    let total: f64 = (0..n)
        .map(|i| (to_v(&points[(i + 1) % n]) - to_v(&points[i])).norm())
        .sum();
    let mut t = param.rem_euclid(total);
    for i in 0..n {
        let a = to_v(&points[i]);
        let b = to_v(&points[(i + 1) % n]);
        let l = (b - a).norm();
        if t <= l || i == n - 1 {
            return a + (b - a) * (t / l).clamp(0.0, 1.0);
        }
        t -= l;
    }
    to_v(&points[0])
}

fn polyline_project(points: &[[f64; 3]], p: &Vec3) -> f64 {
    let n = points.len();
    let mut best = (f64::INFINITY, 0.0);
    let mut acc = 0.0;
    for i in 0..n {
        let a = to_v(&points[i]);
        let b = to_v(&points[(i + 1) % n]);
        let d = b - a;
        let l2 = d.norm_squared();
        let t = if l2 > 0.0 { ((p - a).dot(&d) / l2).clamp(0.0, 1.0) } else { 0.0 };
        let dist = (a + d * t - p).norm();
        if dist < best.0 {
            best = (dist, acc + t * l2.sqrt());
        }
        acc += l2.sqrt();
    }
    best.1
}

/// Per-vertex boundary constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Constraint {
    Free,
    /// Held on curve `curve` at parameter `param`.
    OnCurve { curve: usize, param: f64 },
}

#[derive(Debug)]
struct Connectivity {
    /// Twin of half-edge `3f + i` (which runs from corner i to corner i+1 of face f).
    twin: Vec<Option<usize>>,
    boundary_loops: Vec<Vec<usize>>,
    vertex_faces: Vec<Vec<usize>>,
    neighbors: Vec<Vec<usize>>,
    edges: Vec<[usize; 2]>,
    on_boundary: Vec<bool>,
    isolated: Vec<usize>,
}

/// Triangle mesh with consistent orientation and manifold boundary.
///
/// Combinatorics are fixed at construction and shared between clones; vertex
/// positions and constraint tags are per-instance.
#[derive(Debug, Clone)]
pub struct TriMesh {
    positions: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    conn: Arc<Connectivity>,
    tags: Vec<Constraint>,
    curves: Vec<Curve>,
}

impl TriMesh {
    /// Build a mesh, checking orientation consistency and manifoldness.
    pub fn new(positions: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let conn = Connectivity::build(positions.len(), &faces)?;
        let n = positions.len();
        Ok(Self {
            positions,
            faces,
            conn: Arc::new(conn),
            tags: vec![Constraint::Free; n],
            curves: Vec::new(),
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_edges(&self) -> usize {
        self.conn.edges.len()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn positions_mut(&mut self) -> &mut [Vec3] {
        &mut self.positions
    }

    pub fn position(&self, v: usize) -> Vec3 {
        self.positions[v]
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.conn.edges
    }

    pub fn boundary_loops(&self) -> &[Vec<usize>] {
        &self.conn.boundary_loops
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.conn.on_boundary[v]
    }

    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.conn.vertex_faces[v]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.conn.neighbors[v]
    }

    /// Vertices referenced by no face.
    pub fn isolated_vertices(&self) -> &[usize] {
        &self.conn.isolated
    }

    /// Twin half-edge, `None` on the boundary.
    pub fn twin(&self, he: usize) -> Option<usize> {
        self.conn.twin[he]
    }

    pub fn tags(&self) -> &[Constraint] {
        &self.tags
    }

    pub fn curves(&self) -> &[Curve] {
        &self.curves
    }

    pub fn set_tag(&mut self, v: usize, tag: Constraint) {
        self.tags[v] = tag;
    }

    pub fn add_curve(&mut self, c: Curve) -> usize {
        self.curves.push(c);
        self.curves.len() - 1
    }

    pub fn set_curves(&mut self, curves: Vec<Curve>) {
        self.curves = curves;
    }

    pub fn set_tags(&mut self, tags: Vec<Constraint>) -> Result<()> {
        if tags.len() != self.positions.len() {
            return Err(Error::InvalidParameter("tag count differs from vertex count".into()));
        }
        self.tags = tags;
        Ok(())
    }

    /// Whether a vertex may move: interior and unconstrained.
    pub fn is_free(&self, v: usize) -> bool {
        !self.conn.on_boundary[v] && matches!(self.tags[v], Constraint::Free)
    }

    /// Attach every vertex of every boundary loop to the given curve per loop,
    /// projecting the vertex onto it.
    pub fn attach_loops_to_curves(&mut self, loop_curves: &[(usize, Curve)]) {
        for (li, curve) in loop_curves {
            let cid = self.add_curve(curve.clone());
            let lp = self.conn.boundary_loops[*li].clone();
            for v in lp {
                let t = curve.project(&self.positions[v]);
                self.tags[v] = Constraint::OnCurve { curve: cid, param: t };
            }
        }
    }

    /// Move constrained vertices onto their curves.
    pub fn project_constrained(&mut self) {
        for v in 0..self.positions.len() {
            if let Constraint::OnCurve { curve, param } = self.tags[v] {
                if let Some(c) = self.curves.get(curve) {
                    self.positions[v] = c.point_at(param);
                }
            }
        }
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f];
        0.5 * (self.positions[b] - self.positions[a])
            .cross(&(self.positions[c] - self.positions[a]))
            .norm()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    pub fn mean_edge_length(&self) -> f64 {
        let e = &self.conn.edges;
        if e.is_empty() {
            return 0.0;
        }
        e.iter()
            .map(|[a, b]| (self.positions[*a] - self.positions[*b]).norm())
            .sum::<f64>()
            / e.len() as f64
    }

    /// Smallest triangle quality 4√3·area/(sum of squared edges); 1 for equilateral.
    pub fn min_quality(&self) -> f64 {
        (0..self.faces.len())
            .map(|f| self.face_quality(f))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn face_quality(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f];
        let (pa, pb, pc) = (self.positions[a], self.positions[b], self.positions[c]);
        let s = (pb - pa).norm_squared() + (pc - pb).norm_squared() + (pa - pc).norm_squared();
        if s == 0.0 {
            return 0.0;
        }
        4.0 * 3f64.sqrt() * self.face_area(f) / s
    }

    /// Apply a linear map to every position. Face order is kept, so under an
    /// orientation-reversing map the new normals are −m·ν.
    pub fn transformed(&self, m: &Mat3) -> TriMesh {
        let mut out = self.clone();
        for p in out.positions.iter_mut() {
            *p = m * *p;
        }
        for c in out.curves.iter_mut() {
            *c = transform_curve(c, m);
        }
        for (v, t) in out.tags.iter_mut().enumerate() {
            if let Constraint::OnCurve { curve, .. } = *t {
                let param = out.curves[curve].project(&out.positions[v]);
                *t = Constraint::OnCurve { curve, param };
            }
        }
        out
    }

    /// Same surface with opposite orientation.
    pub fn reversed(&self) -> Result<TriMesh> {
        let faces = self.faces.iter().map(|&[a, b, c]| [a, c, b]).collect();
        let mut out = TriMesh::new(self.positions.clone(), faces)?;
        out.tags = self.tags.clone();
        out.curves = self.curves.clone();
        Ok(out)
    }

    /// Connected components as lists of face indices.
    pub fn face_components(&self) -> Vec<Vec<usize>> {
        let nf = self.faces.len();
        let mut comp = vec![usize::MAX; nf];
        let mut out = Vec::new();
        for start in 0..nf {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut stack = vec![start];
            comp[start] = id;
            let mut members = Vec::new();
            while let Some(f) = stack.pop() {
                members.push(f);
                for i in 0..3 {
                    if let Some(t) = self.conn.twin[3 * f + i] {
                        let g = t / 3;
                        if comp[g] == usize::MAX {
                            comp[g] = id;
                            stack.push(g);
                        }
                    }
                }
                // faces sharing only a vertex belong to the same component too
                for &v in &self.faces[f] {
                    for &g in &self.conn.vertex_faces[v] {
                        if comp[g] == usize::MAX {
                            comp[g] = id;
                            stack.push(g);
                        }
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    /// Merge this mesh with `other` into one mesh; vertices within `tol`
    /// of each other are identified.
    pub fn union_welded(&self, other: &TriMesh, tol: f64) -> Result<TriMesh> {
        let mut positions = self.positions.clone();
        positions.extend_from_slice(&other.positions);
        let off = self.positions.len();
        let mut faces = self.faces.clone();
        faces.extend(other.faces.iter().map(|&[a, b, c]| [a + off, b + off, c + off]));
        let mut tags = self.tags.clone();
        let coff = self.curves.len();
        tags.extend(other.tags.iter().map(|t| match *t {
            Constraint::OnCurve { curve, param } => Constraint::OnCurve {
                curve: curve + coff,
                param,
            },
            Constraint::Free => Constraint::Free,
        }));
        let mut curves = self.curves.clone();
        curves.extend(other.curves.iter().cloned());
        weld_raw(positions, faces, tags, curves, tol, None)
    }

    /// Build a mesh from an unoriented triangle soup: vertices within `tol`
    /// are identified, then each connected component is oriented to agree
    /// with its lowest-numbered face.
    pub fn from_soup(positions: Vec<Vec3>, faces: Vec<[usize; 3]>, tol: f64) -> Result<TriMesh> {
        let loc = PointLocator::new(&positions, tol);
        let mut rep = vec![usize::MAX; positions.len()];
        let mut new_pos = Vec::new();
        for v in 0..positions.len() {
            if rep[v] != usize::MAX {
                continue;
            }
            let id = new_pos.len();
            for u in loc.within(&positions[v], tol) {
                if rep[u] == usize::MAX {
                    rep[u] = id;
                }
            }
            rep[v] = id;
            new_pos.push(positions[v]);
        }
        let mut faces: Vec<[usize; 3]> = faces.iter().map(|&[a, b, c]| [rep[a], rep[b], rep[c]]).collect();
        if faces.iter().any(|f| f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
            return Err(Error::Weld("welding collapsed a triangle".into()));
        }
        let mut by_edge: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (i, f) in faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                by_edge.entry((a.min(b), a.max(b))).or_default().push(i);
            }
        }
        let has = |f: &[usize; 3], a: usize, b: usize| (0..3).any(|k| f[k] == a && f[(k + 1) % 3] == b);
        let mut done = vec![false; faces.len()];
        for start in 0..faces.len() {
            if done[start] {
                continue;
            }
            done[start] = true;
            let mut stack = vec![start];
            while let Some(i) = stack.pop() {
                let f = faces[i];
                for k in 0..3 {
                    let (a, b) = (f[k], f[(k + 1) % 3]);
                    for &j in &by_edge[&(a.min(b), a.max(b))] {
                        if j == i {
                            continue;
                        }
                        let same = has(&faces[j], a, b);
                        if done[j] {
                            if same {
                                return Err(Error::Topology("triangle soup is not orientable".into()));
                            }
                            continue;
                        }
                        if same {
                            faces[j].swap(1, 2);
                        }
                        done[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        TriMesh::new(new_pos, faces)
    }

    /// Identify coincident vertices (within `tol`) of this mesh.
    pub fn welded(&self, tol: f64) -> Result<TriMesh> {
        weld_raw(
            self.positions.clone(),
            self.faces.clone(),
            self.tags.clone(),
            self.curves.clone(),
            tol,
            None,
        )
    }

    /// Like [`TriMesh::union_welded`], but only boundary vertices of either
    /// mesh for which `accept` holds are identified.
    pub fn union_welded_where(&self, other: &TriMesh, tol: f64, accept: impl Fn(&Vec3) -> bool) -> Result<TriMesh> {
        let mut mergeable: Vec<bool> = (0..self.positions.len())
            .map(|v| self.conn.on_boundary[v] && accept(&self.positions[v]))
            .collect();
        mergeable.extend((0..other.positions.len()).map(|v| other.conn.on_boundary[v] && accept(&other.positions[v])));
        let mut positions = self.positions.clone();
        positions.extend_from_slice(&other.positions);
        let off = self.positions.len();
        let mut faces = self.faces.clone();
        faces.extend(other.faces.iter().map(|&[a, b, c]| [a + off, b + off, c + off]));
        let coff = self.curves.len();
        let mut tags = self.tags.clone();
        tags.extend(other.tags.iter().map(|t| match *t {
            Constraint::OnCurve { curve, param } => Constraint::OnCurve {
                curve: curve + coff,
                param,
            },
            Constraint::Free => Constraint::Free,
        }));
        let mut curves = self.curves.clone();
        curves.extend(other.curves.iter().cloned());
        weld_raw(positions, faces, tags, curves, tol, Some(&mergeable))
    }

    /// Replace all curves by one horizontal circle per boundary loop, fitted
    /// to the loop's mean height and radius.
    pub fn attach_loops_to_circles(&mut self) {
        self.curves.clear();
        self.tags.iter_mut().for_each(|t| *t = Constraint::Free);
        let loops: Vec<(usize, Curve)> = self
            .conn
            .boundary_loops
            .iter()
            .enumerate()
            .map(|(i, lp)| {
                let n = lp.len() as f64;
                let z = lp.iter().map(|&v| self.positions[v].z).sum::<f64>() / n;
                let radius = lp
                    .iter()
                    .map(|&v| {
                        let p = self.positions[v];
                        (p.x * p.x + p.y * p.y).sqrt()
                    })
                    .sum::<f64>()
                    / n;
                (i, Curve::Circle { z, radius })
            })
            .collect();
        self.attach_loops_to_curves(&loops);
    }

    /// Close boundary loop `li` with a fan of triangles around a new vertex at `center`.
    pub fn cap_loop(&self, li: usize, center: Vec3) -> Result<TriMesh> {
        let lp = self
            .conn
            .boundary_loops
            .get(li)
            .ok_or_else(|| Error::InvalidParameter(format!("no boundary loop {li}")))?;
        let mut positions = self.positions.clone();
        let c = positions.len();
        positions.push(center);
        let mut faces = self.faces.clone();
        // the loop runs with the surface on its left; the cap must run the other way
        for i in 0..lp.len() {
            let a = lp[i];
            let b = lp[(i + 1) % lp.len()];
            faces.push([b, a, c]);
        }
        let mut out = TriMesh::new(positions, faces)?;
        let mut tags = self.tags.clone();
        for &v in lp {
            tags[v] = Constraint::Free;
        }
        tags.push(Constraint::Free);
        out.tags = tags;
        out.curves = self.curves.clone();
        Ok(out)
    }

    /// One-to-four midpoint subdivision. New boundary midpoints are placed on
    /// the curve of their endpoints when both endpoints share a curve.
    pub fn subdivided(&self) -> Result<TriMesh> {
        self.refined(&vec![true; self.faces.len()])
    }

    /// Red-green refinement: marked faces are split 1→4, the split spreads
    /// to any face with two split edges, and faces left with a single split
    /// edge are bisected. Boundary midpoints are moved onto their curves.
    pub fn refined(&self, marked: &[bool]) -> Result<TriMesh> {
        if marked.len() != self.faces.len() {
            return Err(Error::InvalidParameter("one mark per face required".into()));
        }
        let key = |a: usize, b: usize| (a.min(b), a.max(b));
        let mut split: std::collections::HashSet<(usize, usize)> = std::collections::HashSet::new();
        for (f, &[a, b, c]) in self.faces.iter().enumerate() {
            if marked[f] {
                split.extend([key(a, b), key(b, c), key(c, a)]);
            }
        }
        loop {
            let mut grew = false;
            for &[a, b, c] in &self.faces {
                let e = [key(a, b), key(b, c), key(c, a)];
                if e.iter().filter(|k| split.contains(k)).count() == 2 {
                    split.extend(e);
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }
        let mut positions = self.positions.clone();
        let mut tags = self.tags.clone();
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        for &[a, b] in self.conn.edges.iter() {
            let k = key(a, b);
            if !split.contains(&k) {
                continue;
            }
            let idx = positions.len();
            let mut p = (self.positions[a] + self.positions[b]) * 0.5;
            let mut tag = Constraint::Free;
            if let (
                Constraint::OnCurve { curve: ca, param: ta },
                Constraint::OnCurve { curve: cb, param: tb },
            ) = (self.tags[a], self.tags[b])
            {
                let boundary_edge = self.conn.on_boundary[a] && self.conn.on_boundary[b];
                if ca == cb && boundary_edge {
                    let c = &self.curves[ca];
                    let t = match c {
                        Curve::Circle { .. } => {
                            let mut d = tb - ta;
                            while d > std::f64::consts::PI {
                                d -= 2.0 * std::f64::consts::PI;
                            }
                            while d < -std::f64::consts::PI {
                                d += 2.0 * std::f64::consts::PI;
                            }
                            ta + 0.5 * d
                        }
                        Curve::Polyline { .. } => c.project(&p),
                    };
                    p = c.point_at(t);
                    tag = Constraint::OnCurve { curve: ca, param: t };
                }
            }
            positions.push(p);
            tags.push(tag);
            mid.insert(k, idx);
        }
        let mut faces = Vec::with_capacity(self.faces.len() + 3 * mid.len());
        for &[a, b, c] in &self.faces {
            let m = |x: usize, y: usize| mid.get(&key(x, y)).copied();
            match (m(a, b), m(b, c), m(c, a)) {
                (Some(ab), Some(bc), Some(ca)) => {
                    faces.push([a, ab, ca]);
                    faces.push([ab, b, bc]);
                    faces.push([ca, bc, c]);
                    faces.push([ab, bc, ca]);
                }
                (Some(ab), None, None) => faces.extend([[a, ab, c], [ab, b, c]]),
                (None, Some(bc), None) => faces.extend([[a, b, bc], [a, bc, c]]),
                (None, None, Some(ca)) => faces.extend([[a, b, ca], [ca, b, c]]),
                (None, None, None) => faces.push([a, b, c]),
                _ => unreachable!("closure leaves no face with two split edges"),
            }
        }
        let mut out = TriMesh::new(positions, faces)?;
        out.tags = tags;
        out.curves = self.curves.clone();
        Ok(out)
    }
}

fn transform_curve(c: &Curve, m: &Mat3) -> Curve {
    match c {
        Curve::Circle { z, radius } => {
            // horizontal circles about Z map to horizontal circles under G_k
            let p = m * Vec3::new(*radius, 0.0, *z);
            Curve::Circle {
                z: p.z,
                radius: (p.x * p.x + p.y * p.y).sqrt(),
            }
        }
        Curve::Polyline { points } => Curve::Polyline {
            points: points
                .iter()
                .map(|p| {
                    let q = m * to_v(p);
                    [q.x, q.y, q.z]
                })
                .collect(),
        },
    }
}

fn weld_raw(
    positions: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    tags: Vec<Constraint>,
    curves: Vec<Curve>,
    tol: f64,
    mergeable: Option<&[bool]>,
) -> Result<TriMesh> {
    let loc = PointLocator::new(&positions, tol);
    let mut rep = vec![usize::MAX; positions.len()];
    let mut new_pos = Vec::new();
    let mut new_tags = Vec::new();
    let can = |v: usize| mergeable.map_or(true, |m| m[v]);
    for v in 0..positions.len() {
        if rep[v] != usize::MAX {
            continue;
        }
        let id = new_pos.len();
        if can(v) {
            for u in loc.within(&positions[v], tol) {
                if rep[u] == usize::MAX && can(u) {
                    rep[u] = id;
                }
            }
        }
        rep[v] = id;
        new_pos.push(positions[v]);
        new_tags.push(tags[v]);
    }
    let new_faces: Vec<[usize; 3]> = faces
        .iter()
        .map(|&[a, b, c]| [rep[a], rep[b], rep[c]])
        .collect();
    for f in &new_faces {
        if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            return Err(Error::Weld("welding collapsed a triangle".into()));
        }
    }
    let mut out = TriMesh::new(new_pos, new_faces).map_err(|e| Error::Weld(e.to_string()))?;
    // welded vertices that became interior lose their curve constraint
    for v in 0..out.positions.len() {
        if !out.conn.on_boundary[v] {
            new_tags[v] = Constraint::Free;
        }
    }
    out.tags = new_tags;
    out.curves = curves;
    Ok(out)
}

impl Connectivity {
    fn build(nv: usize, faces: &[[usize; 3]]) -> Result<Self> {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 3);
        for (f, tri) in faces.iter().enumerate() {
            for i in 0..3 {
                let (a, b) = (tri[i], tri[(i + 1) % 3]);
                if a >= nv || b >= nv {
                    return Err(Error::Topology(format!("face {f} references a missing vertex")));
                }
                if a == b {
                    return Err(Error::Topology(format!("face {f} repeats a vertex")));
                }
                if directed.insert((a, b), 3 * f + i).is_some() {
                    return Err(Error::Topology(format!(
                        "directed edge ({a},{b}) used twice: inconsistent orientation or non-manifold edge"
                    )));
                }
            }
        }
        let mut twin = vec![None; faces.len() * 3];
        let mut edges = Vec::new();
        let mut vertex_faces = vec![Vec::new(); nv];
        for (f, tri) in faces.iter().enumerate() {
            for i in 0..3 {
                let (a, b) = (tri[i], tri[(i + 1) % 3]);
                twin[3 * f + i] = directed.get(&(b, a)).copied();
                if a < b || twin[3 * f + i].is_none() {
                    edges.push([a, b]);
                }
                vertex_faces[tri[i]].push(f);
            }
        }
        edges.sort_unstable();

        // boundary half-edges: a -> b with the face on the left
        let mut out_boundary: HashMap<usize, usize> = HashMap::new();
        let mut on_boundary = vec![false; nv];
        for (h, t) in twin.iter().enumerate() {
            if t.is_none() {
                let f = h / 3;
                let a = faces[f][h % 3];
                if out_boundary.insert(a, h).is_some() {
                    return Err(Error::Topology(format!(
                        "vertex {a} has two outgoing boundary edges (pinched boundary)"
                    )));
                }
                on_boundary[a] = true;
            }
        }
        let mut used = vec![false; twin.len()];
        let mut boundary_loops = Vec::new();
        let mut starts: Vec<usize> = out_boundary.values().copied().collect();
        starts.sort_unstable();
        for h0 in starts {
            if used[h0] {
                continue;
            }
            let mut lp = Vec::new();
            let mut h = h0;
            loop {
                used[h] = true;
                let f = h / 3;
                let a = faces[f][h % 3];
                let b = faces[f][(h % 3 + 1) % 3];
                lp.push(a);
                h = *out_boundary
                    .get(&b)
                    .ok_or_else(|| Error::Topology("open boundary chain".into()))?;
                if h == h0 {
                    break;
                }
                if used[h] {
                    return Err(Error::Topology("boundary chains merge".into()));
                }
            }
            boundary_loops.push(lp);
        }

        // each vertex star must be a single fan
        for v in 0..nv {
            let nfaces = vertex_faces[v].len();
            if nfaces == 0 {
                continue;
            }
            let start = match out_boundary.get(&v) {
                Some(&h) => h,
                None => {
                    let f = vertex_faces[v][0];
                    let i = faces[f].iter().position(|&x| x == v).unwrap();
                    3 * f + i
                }
            };
            let mut h = start;
            let mut count = 0;
            loop {
                count += 1;
                if count > nfaces {
                    break;
                }
                let f = h / 3;
                let prev = 3 * f + (h % 3 + 2) % 3;
                match twin[prev] {
                    Some(t) if t != start => h = t,
                    _ => break,
                }
            }
            if count != nfaces {
                return Err(Error::Topology(format!(
                    "vertex {v} is non-manifold ({count} of {nfaces} faces in its fan)"
                )));
            }
        }

        let mut neighbors = vec![Vec::new(); nv];
        for &[a, b] in &edges {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for n in neighbors.iter_mut() {
            n.sort_unstable();
            n.dedup();
        }
        let isolated = (0..nv).filter(|&v| vertex_faces[v].is_empty()).collect();
        Ok(Self {
            twin,
            boundary_loops,
            vertex_faces,
            neighbors,
            edges,
            on_boundary,
            isolated,
        })
    }
}

/// Euler characteristic, boundary count and genus of one connected piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentTopology {
    pub chi: i64,
    pub boundary_loops: usize,
    pub genus: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    /// χ of the whole mesh, isolated vertices excluded.
    pub chi: i64,
    pub boundary_loops: usize,
    /// Genus of the whole mesh when it is connected; for a disconnected mesh
    /// the sum over components.
    pub genus: i64,
    pub components: Vec<ComponentTopology>,
    pub warnings: Vec<String>,
}

/// χ = V − E + F, b = number of boundary loops, g = (2 − χ − b)/2.
pub fn euler_and_genus(mesh: &TriMesh) -> Result<Topology> {
    let mut warnings = Vec::new();
    if !mesh.isolated_vertices().is_empty() {
        warnings.push(format!(
            "{} isolated vertices excluded from the Euler characteristic",
            mesh.isolated_vertices().len()
        ));
    }
    let comps = mesh.face_components();
    if comps.len() > 1 {
        warnings.push(format!("mesh has {} connected components", comps.len()));
    }
    let mut comp_of_vertex = vec![usize::MAX; mesh.num_vertices()];
    for (ci, fs) in comps.iter().enumerate() {
        for &f in fs {
            for &v in &mesh.faces()[f] {
                comp_of_vertex[v] = ci;
            }
        }
    }
    let mut out = Vec::with_capacity(comps.len());
    for (ci, fs) in comps.iter().enumerate() {
        let v = comp_of_vertex.iter().filter(|&&c| c == ci).count() as i64;
        let e = mesh
            .edges()
            .iter()
            .filter(|[a, _]| comp_of_vertex[*a] == ci)
            .count() as i64;
        let f = fs.len() as i64;
        let b = mesh
            .boundary_loops()
            .iter()
            .filter(|l| comp_of_vertex[l[0]] == ci)
            .count();
        let chi = v - e + f;
        let twice_g = 2 - chi - b as i64;
        if twice_g.rem_euclid(2) != 0 || twice_g < 0 {
            return Err(Error::Topology(format!(
                "component {ci}: 2 - chi - b = {twice_g} is not a non-negative even number"
            )));
        }
        out.push(ComponentTopology {
            chi,
            boundary_loops: b,
            genus: twice_g / 2,
        });
    }
    Ok(Topology {
        chi: out.iter().map(|c| c.chi).sum(),
        boundary_loops: out.iter().map(|c| c.boundary_loops).sum(),
        genus: out.iter().map(|c| c.genus).sum(),
        components: out,
        warnings,
    })
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn octahedron() -> TriMesh {
        let p = vec![
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, -1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(0.0, 0.0, -1.0),
        ];
        let f = vec![
            [0, 2, 4],
            [2, 1, 4],
            [1, 3, 4],
            [3, 0, 4],
            [2, 0, 5],
            [1, 2, 5],
            [3, 1, 5],
            [0, 3, 5],
        ];
        TriMesh::new(p, f).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::octahedron;
    use super::*;

    #[test]
    fn octahedron_topology() {
        let m = octahedron();
        let t = euler_and_genus(&m).unwrap();
        assert_eq!((t.chi, t.boundary_loops, t.genus), (2, 0, 0));
        assert_eq!(m.num_edges(), 12);
    }

    #[test]
    fn inconsistent_orientation_rejected() {
        let p = vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::new(1.0, 1.0, 0.0)];
        assert!(TriMesh::new(p, vec![[0, 1, 2], [1, 2, 3]]).is_err());
    }

    #[test]
    fn two_triangles_boundary_loop() {
        let p = vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::new(1.0, 1.0, 0.0)];
        let m = TriMesh::new(p, vec![[0, 1, 2], [2, 1, 3]]).unwrap();
        assert_eq!(m.boundary_loops().len(), 1);
        assert_eq!(m.boundary_loops()[0].len(), 4);
        let t = euler_and_genus(&m).unwrap();
        assert_eq!((t.chi, t.genus), (1, 0));
    }

    #[test]
    fn cap_and_subdivide_preserve_topology_rules() {
        let p = vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::new(1.0, 1.0, 0.0)];
        let m = TriMesh::new(p, vec![[0, 1, 2], [2, 1, 3]]).unwrap();
        let s = m.subdivided().unwrap();
        assert_eq!(s.num_faces(), 8);
        assert_eq!(euler_and_genus(&s).unwrap().chi, 1);
        let capped = m.cap_loop(0, Vec3::new(0.5, 0.5, 1.0)).unwrap();
        let t = euler_and_genus(&capped).unwrap();
        assert_eq!((t.chi, t.boundary_loops), (2, 0));
    }
}
