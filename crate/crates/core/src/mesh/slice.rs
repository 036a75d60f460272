//! Intersection of a mesh with the plane {y = 0}.

use std::collections::HashMap;

use super::TriMesh;
use crate::Vec3;

/// Vertices with |y| below this are treated as lying slightly on the y > 0 side.
pub const ON_PLANE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SlicePolyline {
    pub points: Vec<Vec3>,
    pub closed: bool,
}

impl SlicePolyline {
    pub fn endpoints(&self) -> Option<(Vec3, Vec3)> {
        if self.closed || self.points.is_empty() {
            None
        } else {
            Some((self.points[0], *self.points.last().unwrap()))
        }
    }
}

/// Names of the three boundary points on the half-plane {y = 0, x > 0}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryLabel {
    Upper,
    Middle,
    Lower,
}

#[derive(Debug, Clone)]
pub struct Slice {
    pub polylines: Vec<SlicePolyline>,
    /// Boundary endpoints on {y = 0, x > 0} sorted by decreasing z, each with
    /// the polyline it ends and whether it is that polyline's first point.
    pub halfplane_endpoints: Vec<(Vec3, usize, bool)>,
    pub warnings: Vec<String>,
}

impl Slice {
    pub fn arcs(&self) -> impl Iterator<Item = &SlicePolyline> {
        self.polylines.iter().filter(|p| !p.closed)
    }

    pub fn loops(&self) -> impl Iterator<Item = &SlicePolyline> {
        self.polylines.iter().filter(|p| p.closed)
    }

    /// Label of each half-plane endpoint when there are exactly three.
    pub fn labels(&self) -> Option<Vec<(BoundaryLabel, usize)>> {
        if self.halfplane_endpoints.len() != 3 {
            return None;
        }
        let l = [BoundaryLabel::Upper, BoundaryLabel::Middle, BoundaryLabel::Lower];
        Some(
            self.halfplane_endpoints
                .iter()
                .zip(l)
                .map(|(&(_, poly, _), lab)| (lab, poly))
                .collect(),
        )
    }
}

/// Slice the mesh by {y = 0}. Open polylines end on boundary edges.
pub fn slice_y0(mesh: &TriMesh) -> Slice {
    let pos = mesh.positions();
    let mut warnings = Vec::new();
    let on_plane = pos.iter().filter(|p| p.y.abs() <= ON_PLANE_TOL).count();
    if on_plane > 0 {
        warnings.push(format!(
            "{on_plane} vertices within {ON_PLANE_TOL:e} of y = 0 perturbed toward y > 0"
        ));
    }
    let positive = |v: usize| pos[v].y >= -ON_PLANE_TOL;
    let crossing = |a: usize, b: usize| {
        let (ya, yb) = (
            if positive(a) { pos[a].y.max(0.0) } else { pos[a].y },
            if positive(b) { pos[b].y.max(0.0) } else { pos[b].y },
        );
        let t = if ya == yb { 0.0 } else { (ya / (ya - yb)).clamp(0.0, 1.0) };
        pos[a] + (pos[b] - pos[a]) * t
    };
    let key = |a: usize, b: usize| (a.min(b), a.max(b));

    // graph on crossing edges; each crossed face joins two of them
    let mut node_of: HashMap<(usize, usize), usize> = HashMap::new();
    let mut nodes: Vec<(usize, usize)> = Vec::new();
    let mut adj: Vec<Vec<usize>> = Vec::new();
    let mut node = |e: (usize, usize), nodes: &mut Vec<(usize, usize)>, adj: &mut Vec<Vec<usize>>| {
        *node_of.entry(e).or_insert_with(|| {
            nodes.push(e);
            adj.push(Vec::new());
            nodes.len() - 1
        })
    };
    for tri in mesh.faces() {
        let mut hits = Vec::with_capacity(2);
        for i in 0..3 {
            let (a, b) = (tri[i], tri[(i + 1) % 3]);
            if positive(a) != positive(b) {
                hits.push(key(a, b));
            }
        }
        if hits.len() == 2 {
            let u = node(hits[0], &mut nodes, &mut adj);
            let w = node(hits[1], &mut nodes, &mut adj);
            adj[u].push(w);
            adj[w].push(u);
        }
    }

    let mut visited = vec![false; nodes.len()];
    let mut polylines = Vec::new();
    let walk = |start: usize, visited: &mut Vec<bool>| -> (Vec<usize>, bool) {
        let mut path = vec![start];
        visited[start] = true;
        let mut prev = usize::MAX;
        let mut cur = start;
        loop {
            let next = adj[cur].iter().copied().find(|&n| n != prev && !visited[n]);
            match next {
                Some(n) => {
                    visited[n] = true;
                    path.push(n);
                    prev = cur;
                    cur = n;
                }
                None => {
                    let closed = adj[cur].len() == 2 && adj[cur].contains(&start) && path.len() > 2;
                    return (path, closed);
                }
            }
        }
    };
    // open arcs start from degree-one nodes, i.e. crossings of boundary edges
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by_key(|&n| (adj[n].len() != 1, nodes[n]));
    for n in order {
        if visited[n] {
            continue;
        }
        let (path, closed) = walk(n, &mut visited);
        let points = path
            .iter()
            .map(|&i| crossing(nodes[i].0, nodes[i].1))
            .collect();
        polylines.push(SlicePolyline { points, closed });
    }

    let mut halfplane_endpoints = Vec::new();
    for (i, pl) in polylines.iter().enumerate() {
        if let Some((a, b)) = pl.endpoints() {
            if a.x > 0.0 {
                halfplane_endpoints.push((a, i, true));
            }
            if b.x > 0.0 {
                halfplane_endpoints.push((b, i, false));
            }
        }
    }
    halfplane_endpoints.sort_by(|a, b| b.0.z.total_cmp(&a.0.z));
    Slice {
        polylines,
        halfplane_endpoints,
        warnings,
    }
}
