//! Graded triangulation of a planar polygon with prescribed boundary nodes.

use spade::handles::FixedVertexHandle;
use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

use crate::error::{Error, Result};

pub(crate) struct PlanarMesh {
    /// Boundary nodes come first, in the order given.
    pub points: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
}

fn point_in_polygon(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn dist_to_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let l2 = d[0] * d[0] + d[1] * d[1];
    let t = if l2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((a[0] + t * d[0] - p[0]).powi(2) + (a[1] + t * d[1] - p[1]).powi(2)).sqrt()
}

/// Triangulate the simple polygon `boundary` (counterclockwise, nodes kept
/// as given) with interior spacing following `size`.
pub(crate) fn triangulate(boundary: &[[f64; 2]], size: &dyn Fn([f64; 2]) -> f64) -> Result<PlanarMesh> {
    let nb = boundary.len();
    if nb < 3 {
        return Err(Error::MeshQuality("polygon needs at least 3 nodes".into()));
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in boundary {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let side = (hi[0] - lo[0]).max(hi[1] - lo[1]);

    // quadtree leaves sized to the local spacing give the candidates
    let mut candidates: Vec<([f64; 2], f64)> = Vec::new();
    let mut stack = vec![(lo, side)];
    while let Some((c0, l)) = stack.pop() {
        let center = [c0[0] + l / 2.0, c0[1] + l / 2.0];
        let h = size(center);
        if l > 0.5 * h {
            let half = l / 2.0;
            for (dx, dy) in [(0.0, 0.0), (half, 0.0), (0.0, half), (half, half)] {
                stack.push(([c0[0] + dx, c0[1] + dy], half));
            }
        } else if point_in_polygon(boundary, center) {
            candidates.push((center, h));
        }
    }
    candidates.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0[0].total_cmp(&b.0[0])).then(a.0[1].total_cmp(&b.0[1])));

    // Poisson-disk selection on a hash grid
    let cell = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min).max(1e-12);
    let key = |p: [f64; 2]| (((p[0] - lo[0]) / cell).floor() as i64, ((p[1] - lo[1]) / cell).floor() as i64);
    let mut grid: std::collections::HashMap<(i64, i64), Vec<[f64; 2]>> = std::collections::HashMap::new();
    for &p in boundary {
        grid.entry(key(p)).or_default().push(p);
    }
    let seg_cell = side / 64.0;
    let mut seg_grid: std::collections::HashMap<(i64, i64), Vec<usize>> = std::collections::HashMap::new();
    let skey = |p: [f64; 2]| (((p[0] - lo[0]) / seg_cell).floor() as i64, ((p[1] - lo[1]) / seg_cell).floor() as i64);
    for i in 0..nb {
        let a = boundary[i];
        let b = boundary[(i + 1) % nb];
        let (ka, kb) = (skey(a), skey(b));
        for x in ka.0.min(kb.0)..=ka.0.max(kb.0) {
            for y in ka.1.min(kb.1)..=ka.1.max(kb.1) {
                seg_grid.entry((x, y)).or_default().push(i);
            }
        }
    }
    let mut interior = Vec::new();
    for (p, h) in candidates {
        let r = 0.8 * h;
        let reach = (r / cell).ceil() as i64;
        let (kx, ky) = key(p);
        let mut ok = true;
        'outer: for x in kx - reach..=kx + reach {
            for y in ky - reach..=ky + reach {
                if let Some(v) = grid.get(&(x, y)) {
                    if v.iter().any(|q| (q[0] - p[0]).hypot(q[1] - p[1]) < r) {
                        ok = false;
                        break 'outer;
                    }
                }
            }
        }
        if !ok {
            continue;
        }
        let sreach = (0.6 * h / seg_cell).ceil() as i64;
        let (sx, sy) = skey(p);
        'seg: for x in sx - sreach..=sx + sreach {
            for y in sy - sreach..=sy + sreach {
                if let Some(v) = seg_grid.get(&(x, y)) {
                    for &i in v {
                        if dist_to_segment(p, boundary[i], boundary[(i + 1) % nb]) < 0.6 * h {
                            ok = false;
                            break 'seg;
                        }
                    }
                }
            }
        }
        if ok {
            grid.entry(key(p)).or_default().push(p);
            interior.push(p);
        }
    }

    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::new();
    let mut handles: Vec<FixedVertexHandle> = Vec::with_capacity(nb);
    for p in boundary {
        let h = cdt
            .insert(Point2::new(p[0], p[1]))
            .map_err(|e| Error::MeshQuality(format!("triangulation insert failed: {e:?}")))?;
        handles.push(h);
    }
    for i in 0..nb {
        if !cdt.can_add_constraint(handles[i], handles[(i + 1) % nb]) {
            return Err(Error::MeshQuality("boundary polygon self-intersects".into()));
        }
        cdt.add_constraint(handles[i], handles[(i + 1) % nb]);
    }
    for p in &interior {
        cdt.insert(Point2::new(p[0], p[1]))
            .map_err(|e| Error::MeshQuality(format!("triangulation insert failed: {e:?}")))?;
    }
    let extra = cdt.num_vertices();
    cdt.refine(
        RefinementParameters::<f64>::new()
            .with_angle_limit(AngleLimit::from_deg(25.0))
            .keep_constraint_edges()
            .exclude_outer_faces(true)
            .with_max_additional_vertices(extra),
    );

    let mut index = vec![usize::MAX; cdt.num_vertices()];
    let mut points: Vec<[f64; 2]> = boundary.to_vec();
    for (i, h) in handles.iter().enumerate() {
        if index[h.index()] != usize::MAX {
            return Err(Error::MeshQuality("duplicate boundary node".into()));
        }
        index[h.index()] = i;
    }
    for v in cdt.vertices() {
        let i = v.fix().index();
        if index[i] == usize::MAX {
            index[i] = points.len();
            let p = v.position();
            points.push([p.x, p.y]);
        }
    }
    let mut triangles = Vec::new();
    for f in cdt.inner_faces() {
        let [a, b, c] = f.vertices();
        let (pa, pb, pc) = (a.position(), b.position(), c.position());
        let centroid = [(pa.x + pb.x + pc.x) / 3.0, (pa.y + pb.y + pc.y) / 3.0];
        if !point_in_polygon(boundary, centroid) {
            continue;
        }
        let tri = [index[a.fix().index()], index[b.fix().index()], index[c.fix().index()]];
        let cross = (pb.x - pa.x) * (pc.y - pa.y) - (pb.y - pa.y) * (pc.x - pa.x);
        if cross > 0.0 {
            triangles.push(tri);
        } else {
            triangles.push([tri[0], tri[2], tri[1]]);
        }
    }
    // drop vertices that ended up outside the polygon
    let mut used = vec![false; points.len()];
    for t in &triangles {
        for &v in t {
            used[v] = true;
        }
    }
    if used[..nb].iter().any(|u| !u) {
        return Err(Error::MeshQuality("a boundary node is not part of any triangle".into()));
    }
    let mut remap = vec![usize::MAX; points.len()];
    let mut kept = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if used[i] {
            remap[i] = kept.len();
            kept.push(*p);
        }
    }
    for t in triangles.iter_mut() {
        for v in t.iter_mut() {
            *v = remap[*v];
        }
    }
    smooth_interior(&mut kept, &triangles, nb, 3);
    Ok(PlanarMesh {
        points: kept,
        triangles,
    })
}

/// A few Laplacian sweeps over the interior nodes; a move is kept only if no
/// incident triangle flips.
fn smooth_interior(points: &mut [[f64; 2]], tris: &[[usize; 3]], nb: usize, sweeps: usize) {
    let n = points.len();
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut inc: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (f, t) in tris.iter().enumerate() {
        for i in 0..3 {
            nbrs[t[i]].push(t[(i + 1) % 3]);
            inc[t[i]].push(f);
        }
    }
    let area = |pts: &[[f64; 2]], t: &[usize; 3]| {
        let (a, b, c) = (pts[t[0]], pts[t[1]], pts[t[2]]);
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    };
    for _ in 0..sweeps {
        for v in nb..n {
            if nbrs[v].is_empty() {
                continue;
            }
            let m = nbrs[v].len() as f64;
            let c = nbrs[v].iter().fold([0.0, 0.0], |acc, &u| [acc[0] + points[u][0] / m, acc[1] + points[u][1] / m]);
            let old = points[v];
            points[v] = c;
            let min_new = inc[v].iter().map(|&f| area(points, &tris[f])).fold(f64::INFINITY, f64::min);
            if min_new <= 0.0 {
                points[v] = old;
            }
        }
    }
}
