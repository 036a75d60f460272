//! Weighted-area minimisation in the expander metric, the expander residual
//! and the Jacobi (stability) operator.
//!
//! An expander is a critical point of W(M) = ∫_M e^{|p|²/4} dA. The discrete
//! functional uses one-point centroid quadrature per face; the residual is
//! the normal part of its negative gradient per unit weighted area, which is
//! the discrete form of H − ½(p·ν)ν.

use nalgebra::DMatrix;
use nalgebra_sparse::CsrMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dense_generalized_eigen, smallest_generalized_eigen, Cholesky, Triplets};
use crate::mesh::geometry::cot_at;
use crate::mesh::{GeometryCache, TriMesh};
use crate::symmetry::{SymmetryGroup, VertexAction};
use crate::Vec3;

/// Density of the expander metric's area element.
pub fn expander_weight(p: &Vec3) -> f64 {
    (0.25 * p.norm_squared()).exp()
}

fn face_weighted_area(pos: &[Vec3], [a, b, c]: [usize; 3]) -> f64 {
    let (pa, pb, pc) = (pos[a], pos[b], pos[c]);
    let area = 0.5 * (pb - pa).cross(&(pc - pa)).norm();
    expander_weight(&((pa + pb + pc) / 3.0)) * area
}

/// Σ_f e^{|c_f|²/4}·area(f) with c_f the centroid.
pub fn weighted_area(mesh: &TriMesh) -> f64 {
    let pos = mesh.positions();
    mesh.faces().iter().map(|&f| face_weighted_area(pos, f)).sum()
}

/// Weighted area at `new` minus weighted area at `old`, summed face by face
/// so that small changes are not lost against the total.
fn weighted_area_change(mesh: &TriMesh, old: &[Vec3], new: &[Vec3]) -> f64 {
    mesh.faces()
        .iter()
        .map(|&f| face_weighted_area(new, f) - face_weighted_area(old, f))
        .sum()
}

/// Gradient of [`weighted_area`] at every vertex, and each vertex's share of
/// the weighted area (a third of every incident face).
pub fn weighted_area_gradient(mesh: &TriMesh) -> (Vec<Vec3>, Vec<f64>) {
    let pos = mesh.positions();
    let mut grad = vec![Vec3::zeros(); pos.len()];
    let mut share = vec![0.0; pos.len()];
    for &[a, b, c] in mesh.faces() {
        let (pa, pb, pc) = (pos[a], pos[b], pos[c]);
        let n2 = (pb - pa).cross(&(pc - pa));
        let len = n2.norm();
        if len == 0.0 {
            continue;
        }
        let n = n2 / len;
        let area = 0.5 * len;
        let centroid = (pa + pb + pc) / 3.0;
        let w = expander_weight(&centroid);
        let dw = centroid * (w * area / 6.0);
        grad[a] += n.cross(&(pc - pb)) * (0.5 * w) + dw;
        grad[b] += n.cross(&(pa - pc)) * (0.5 * w) + dw;
        grad[c] += n.cross(&(pb - pa)) * (0.5 * w) + dw;
        for v in [a, b, c] {
            share[v] += w * area / 3.0;
        }
    }
    (grad, share)
}

/// Area-weighted vertex normals (zero for isolated vertices).
pub fn vertex_normals(mesh: &TriMesh) -> Vec<Vec3> {
    let pos = mesh.positions();
    let mut n = vec![Vec3::zeros(); pos.len()];
    for &[a, b, c] in mesh.faces() {
        let n2 = (pos[b] - pos[a]).cross(&(pos[c] - pos[a]));
        for v in [a, b, c] {
            n[v] += n2;
        }
    }
    n.into_iter()
        .map(|v| if v.norm() > 0.0 { v.normalize() } else { Vec3::zeros() })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ExpanderResidual {
    /// Per-vertex residual divided by max(1, |p|); zero on the boundary.
    pub vectors: Vec<Vec3>,
    pub max: f64,
    /// Root mean square weighted by the vertex shares of weighted area.
    pub l2: f64,
    /// Interior vertices with a degenerate one-ring, left out of the norms.
    pub excluded: Vec<usize>,
}

fn residual_from(mesh: &TriMesh, grad: &[Vec3], share: &[f64], normals: &[Vec3]) -> ExpanderResidual {
    let pos = mesh.positions();
    let mut vectors = vec![Vec3::zeros(); pos.len()];
    let mut excluded = Vec::new();
    let (mut max, mut sum, mut wsum) = (0.0f64, 0.0, 0.0);
    for v in 0..pos.len() {
        if mesh.is_boundary_vertex(v) || mesh.vertex_faces(v).is_empty() {
            continue;
        }
        if !(share[v] > 0.0) || normals[v].norm() == 0.0 {
            excluded.push(v);
            continue;
        }
        let nu = normals[v];
        let r = -nu * (grad[v].dot(&nu) / share[v]) / pos[v].norm().max(1.0);
        let m = r.norm();
        max = max.max(m);
        sum += share[v] * m * m;
        wsum += share[v];
        vectors[v] = r;
    }
    let l2 = if wsum > 0.0 { (sum / wsum).sqrt() } else { 0.0 };
    ExpanderResidual {
        vectors,
        max,
        l2,
        excluded,
    }
}

/// Discrete H − ½(p·ν)ν at interior vertices, scaled by 1/max(1, |p|).
pub fn expander_residual(mesh: &TriMesh) -> ExpanderResidual {
    let (grad, share) = weighted_area_gradient(mesh);
    residual_from(mesh, &grad, &share, &vertex_normals(mesh))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Convergence threshold on the scaled residual maximum.
    pub tol: f64,
    pub max_iter: usize,
    /// First trial step in units of the preconditioned (Newton-like) step.
    pub step: f64,
    /// Iterations between refactorisations of the preconditioner.
    pub refactor_every: usize,
    /// Iterations between tangential smoothing passes (0 disables them).
    pub smooth_every: usize,
    /// Abort when the worst triangle quality falls below this.
    pub min_quality: f64,
    /// Length of a burst of full-gradient steps. The full preconditioned
    /// gradient also slides vertices tangentially, which keeps triangles
    /// healthy during large shape changes; afterwards steps move vertices
    /// along their normals only, and a failed normal step starts a new burst.
    pub full_steps: usize,
    /// Leave a full-gradient burst early once the residual is below this.
    pub normal_switch: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            max_iter: 3000,
            step: 1.0,
            refactor_every: 10,
            smooth_every: 50,
            min_quality: 1e-3,
            full_steps: 30,
            normal_switch: 0.25,
        }
    }
}

impl SolveOptions {
    /// Default options with tolerance 1e-3·(1 + R).
    pub fn for_radius(radius: f64) -> Self {
        Self {
            tol: 1e-3 * (1.0 + radius),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepKind {
    Start,
    Descent,
    Smoothing,
    /// A normal-only step failed; full steps resume with the mesh unchanged.
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub weighted_area: f64,
    pub residual_max: f64,
    /// Accepted line-search step (0 for non-descent entries).
    pub step: f64,
    pub kind: StepKind,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    #[serde(skip)]
    pub mesh: TriMesh,
    pub iterations: usize,
    pub weighted_area: f64,
    pub residual_max: f64,
    pub residual_l2: f64,
    pub converged: bool,
    pub history: Vec<HistoryEntry>,
    pub warnings: Vec<String>,
}

impl SolveResult {
    pub fn into_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                iterations: self.iterations,
                residual: self.residual_max,
            })
        }
    }

    pub fn history_csv(&self) -> String {
        let mut s = String::from("iteration,weighted_area,residual_max,step,kind\n");
        for h in &self.history {
            s.push_str(&format!(
                "{},{:.15e},{:.6e},{:.6e},{:?}\n",
                h.iteration, h.weighted_area, h.residual_max, h.step, h.kind
            ));
        }
        s
    }
}

/// Weighted cotangent stiffness on the free vertices plus `shift` times the
/// weighted mass. With `clamp` negative cotangents are dropped, which keeps
/// the matrix an M-matrix (used for the preconditioner).
fn weighted_stiffness(mesh: &TriMesh, index: &[usize], share: &[f64], shift: &[f64], clamp: bool) -> CsrMatrix<f64> {
    let nf = index.iter().filter(|&&i| i != usize::MAX).count();
    let pos = mesh.positions();
    let mut t = Triplets::new(nf);
    for &[a, b, c] in mesh.faces() {
        let ids = [a, b, c];
        let p = [pos[a], pos[b], pos[c]];
        let w = expander_weight(&((p[0] + p[1] + p[2]) / 3.0));
        for i in 0..3 {
            let (j, l) = ((i + 1) % 3, (i + 2) % 3);
            let mut cot = cot_at(&p[i], &p[j], &p[l]);
            if clamp {
                cot = cot.max(0.0);
            }
            let e = 0.5 * w * cot;
            let (vj, vl) = (index[ids[j]], index[ids[l]]);
            if vj != usize::MAX {
                t.add(vj, vj, e);
            }
            if vl != usize::MAX {
                t.add(vl, vl, e);
            }
            if vj != usize::MAX && vl != usize::MAX {
                t.add(vj, vl, -e);
                t.add(vl, vj, -e);
            }
        }
    }
    for (v, &i) in index.iter().enumerate() {
        if i != usize::MAX {
            t.add(i, i, shift[v] * share[v]);
        }
    }
    t.to_csr()
}

fn free_index(mesh: &TriMesh) -> (Vec<usize>, Vec<usize>) {
    let mut index = vec![usize::MAX; mesh.num_vertices()];
    let mut free = Vec::new();
    for v in 0..mesh.num_vertices() {
        if mesh.is_free(v) && !mesh.vertex_faces(v).is_empty() {
            index[v] = free.len();
            free.push(v);
        }
    }
    (index, free)
}

fn face_normals2(mesh: &TriMesh, pos: &[Vec3]) -> Vec<Vec3> {
    mesh.faces()
        .iter()
        .map(|&[a, b, c]| (pos[b] - pos[a]).cross(&(pos[c] - pos[a])))
        .collect()
}

fn min_quality_of(mesh: &TriMesh, pos: &[Vec3]) -> f64 {
    mesh.faces()
        .iter()
        .map(|&[a, b, c]| {
            let (pa, pb, pc) = (pos[a], pos[b], pos[c]);
            let s = (pb - pa).norm_squared() + (pc - pb).norm_squared() + (pa - pc).norm_squared();
            if s == 0.0 {
                0.0
            } else {
                2.0 * 3f64.sqrt() * (pb - pa).cross(&(pc - pa)).norm() / s
            }
        })
        .fold(f64::INFINITY, f64::min)
}

fn no_flips(old: &[Vec3], new: &[Vec3]) -> bool {
    old.iter().zip(new).all(|(a, b)| a.dot(b) > 0.0)
}

/// Minimise the weighted area with the boundary held fixed, keeping the
/// mesh invariant under `group`.
///
/// Each step moves vertices along their normals by the preconditioned
/// normal gradient; the preconditioner is the weighted cotangent Laplacian
/// plus half the weighted mass, i.e. the Jacobi operator without its |A|²
/// term. Steps pass an Armijo test after orbit averaging. Returns the last
/// iterate with `converged = false` when `max_iter` is reached or the line
/// search stalls.
pub fn minimize(seed: &TriMesh, group: &SymmetryGroup, opts: &SolveOptions) -> Result<SolveResult> {
    if !(opts.tol > 0.0) || !(opts.step > 0.0) {
        return Err(Error::InvalidParameter("tol and step must be positive".into()));
    }
    let mut mesh = seed.clone();
    mesh.project_constrained();
    let action = if group.len() > 1 {
        Some(VertexAction::discover(mesh.positions(), group)?)
    } else {
        None
    };
    let symmetrize = |pos: &mut [Vec3]| {
        if let Some(a) = &action {
            a.average_points(pos);
        }
    };
    symmetrize(mesh.positions_mut());
    let (index, free) = free_index(&mesh);
    let half = vec![0.5; mesh.num_vertices()];

    let mut history = Vec::new();
    let mut warnings = Vec::new();
    let mut chol: Option<Cholesky> = None;
    let mut factored_at = 0usize;
    let mut last_alpha = opts.step;
    let mut converged = false;
    let mut it = 0usize;
    let mut kind = StepKind::Start;
    let mut alpha_taken = 0.0;
    // full-gradient steps are forced up to this iteration
    let full_until = opts.full_steps;
    let mut fallback_until = 0usize;
    let residual = loop {
        let (grad, share) = weighted_area_gradient(&mesh);
        let normals = vertex_normals(&mesh);
        let res = residual_from(&mesh, &grad, &share, &normals);
        let w_now: f64 = weighted_area(&mesh);
        history.push(HistoryEntry {
            iteration: it,
            weighted_area: w_now,
            residual_max: res.max,
            step: alpha_taken,
            kind,
        });
        if res.max < opts.tol {
            converged = true;
            break res;
        }
        if it >= opts.max_iter {
            break res;
        }
        it += 1;

        let old_fn = face_normals2(&mesh, mesh.positions());
        if opts.smooth_every > 0 && it % opts.smooth_every == 0 {
            let mut trial = mesh.positions().to_vec();
            for &v in &free {
                let nb = mesh.neighbors(v);
                let c = nb.iter().fold(Vec3::zeros(), |acc, &u| acc + mesh.position(u)) / nb.len() as f64;
                let d = c - trial[v];
                trial[v] += 0.5 * (d - normals[v] * d.dot(&normals[v]));
            }
            symmetrize(&mut trial);
            let saved = mesh.positions().to_vec();
            mesh.positions_mut().copy_from_slice(&trial);
            let ok = no_flips(&old_fn, &face_normals2(&mesh, &trial)) && weighted_area_change(&mesh, &saved, &trial) <= 0.0;
            if ok {
                kind = StepKind::Smoothing;
                alpha_taken = 0.0;
                chol = None;
                continue;
            }
            mesh.positions_mut().copy_from_slice(&saved);
        }

        if chol.is_none() || it - factored_at >= opts.refactor_every {
            let p = weighted_stiffness(&mesh, &index, &share, &half, true);
            chol = Some(Cholesky::new(&p)?);
            factored_at = it;
        }
        let solver = chol.as_ref().expect("factored above");
        let normal_mode = it > fallback_until && (res.max < opts.normal_switch || it > full_until);
        let mut d = vec![Vec3::zeros(); mesh.num_vertices()];
        for c in 0..3 {
            let rhs: Vec<f64> = free
                .iter()
                .map(|&v| {
                    if normal_mode {
                        -normals[v][c] * grad[v].dot(&normals[v])
                    } else {
                        -grad[v][c]
                    }
                })
                .collect();
            let x = solver.solve(&rhs);
            for (i, &v) in free.iter().enumerate() {
                d[v][c] = x[i];
            }
        }
        let mut slope = 0.0;
        for &v in &free {
            if normal_mode {
                d[v] = normals[v] * d[v].dot(&normals[v]);
            }
            slope += grad[v].dot(&d[v]);
        }
        if !(slope < 0.0) {
            warnings.push(format!("iteration {it}: no descent direction"));
            break res;
        }
        let base = mesh.positions().to_vec();
        let mut alpha = (2.0 * last_alpha).min(opts.step);
        let mut accepted = false;
        for _ in 0..40 {
            let mut trial: Vec<Vec3> = base.iter().zip(&d).map(|(p, dv)| p + dv * alpha).collect();
            symmetrize(&mut trial);
            if no_flips(&old_fn, &face_normals2(&mesh, &trial))
                && min_quality_of(&mesh, &trial) >= opts.min_quality
                && weighted_area_change(&mesh, &base, &trial) <= 1e-4 * alpha * slope
            {
                mesh.positions_mut().copy_from_slice(&trial);
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            mesh.positions_mut().copy_from_slice(&base);
            if normal_mode {
                fallback_until = it + opts.full_steps;
                kind = StepKind::Fallback;
                alpha_taken = 0.0;
                continue;
            }
            if min_quality_of(&mesh, mesh.positions()) < 2.0 * opts.min_quality {
                return Err(Error::Degeneration(format!(
                    "line search blocked by triangle quality near {:.2e} at iteration {it}",
                    opts.min_quality
                )));
            }
            warnings.push(format!("iteration {it}: line search stalled"));
            break res;
        }
        last_alpha = alpha;
        alpha_taken = alpha;
        kind = StepKind::Descent;
    };
    for v in &residual.excluded {
        warnings.push(format!("vertex {v} has a degenerate one-ring"));
    }
    Ok(SolveResult {
        weighted_area: weighted_area(&mesh),
        mesh,
        iterations: it,
        residual_max: residual.max,
        residual_l2: residual.l2,
        converged,
        history,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subspace {
    Full,
    GInvariant,
}

/// −L on the interior vertices in the weighted inner product: `stiffness`
/// is the weighted cotangent matrix plus (½ − |A|²)·mass, `mass` the vertex
/// shares of weighted area. Boundary vertices carry the Dirichlet condition.
#[derive(Debug, Clone)]
pub struct JacobiSystem {
    pub stiffness: CsrMatrix<f64>,
    pub mass: Vec<f64>,
    /// Mesh vertex of each row.
    pub free: Vec<usize>,
}

pub fn jacobi_system(mesh: &TriMesh) -> JacobiSystem {
    let geo = GeometryCache::new(mesh);
    let (_, share) = weighted_area_gradient(mesh);
    let mut index = vec![usize::MAX; mesh.num_vertices()];
    let mut free = Vec::new();
    for v in 0..mesh.num_vertices() {
        if !mesh.is_boundary_vertex(v) && !mesh.vertex_faces(v).is_empty() {
            index[v] = free.len();
            free.push(v);
        }
    }
    let potential: Vec<f64> = geo.vertices.iter().map(|g| 0.5 - g.a2).collect();
    let stiffness = weighted_stiffness(mesh, &index, &share, &potential, false);
    let mass = free.iter().map(|&v| share[v]).collect();
    JacobiSystem { stiffness, mass, free }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityResult {
    pub lambda_min: f64,
    /// Eigenfunction on all mesh vertices, zero on the boundary.
    pub eigenvector: Vec<f64>,
    pub subspace: Subspace,
    /// Dimension of the discrete space the eigenvalue was taken over.
    pub dimension: usize,
}

/// Sign by which each group element acts on the oriented normal.
pub fn normal_characters(mesh: &TriMesh, action: &VertexAction) -> Result<Vec<f64>> {
    let normals = vertex_normals(mesh);
    let mut out = Vec::new();
    for (g, m) in action.elements().iter().enumerate() {
        let perm = action.permutation(g);
        let (mut sum, mut count) = (0.0, 0usize);
        for v in 0..normals.len() {
            if normals[v].norm() > 0.0 {
                sum += normals[perm[v]].dot(&(m * normals[v]));
                count += 1;
            }
        }
        let mean = sum / count.max(1) as f64;
        if mean.abs() < 0.5 {
            return Err(Error::SymmetryMismatch(format!(
                "element {g} does not act on the normal by a sign (mean {mean:.3})"
            )));
        }
        out.push(mean.signum());
    }
    Ok(out)
}

/// Smallest eigenvalue of −L with Dirichlet data, over all functions or,
/// with a group, over functions u with u∘g = χ(g)u where χ(g) is the sign
/// by which g acts on the normal (so that uν is G-invariant).
pub fn jacobi_min_eigenvalue(mesh: &TriMesh, group: Option<&SymmetryGroup>) -> Result<StabilityResult> {
    let sys = jacobi_system(mesh);
    let n = sys.free.len();
    if n == 0 {
        return Err(Error::Numerical("no interior vertices".into()));
    }
    let mut row_of = vec![usize::MAX; mesh.num_vertices()];
    for (i, &v) in sys.free.iter().enumerate() {
        row_of[v] = i;
    }
    // basis: column per orbit, entries ±1
    let (col, sign, ncols, subspace) = match group {
        None => ((0..n).collect::<Vec<_>>(), vec![1.0; n], n, Subspace::Full),
        Some(g) => {
            let action = VertexAction::discover(mesh.positions(), g)?;
            let chi = normal_characters(mesh, &action)?;
            let mut col = vec![usize::MAX; n];
            let mut sign = vec![0.0; n];
            let mut ncols = 0;
            for &v in &sys.free {
                if col[row_of[v]] != usize::MAX {
                    continue;
                }
                let mut coef: Vec<(usize, f64)> = Vec::new();
                let mut forced_zero = false;
                for (gi, &c) in chi.iter().enumerate() {
                    let u = action.permutation(gi)[v];
                    match coef.iter().find(|e| e.0 == u) {
                        Some(e) if e.1 != c => forced_zero = true,
                        Some(_) => {}
                        None => coef.push((u, c)),
                    }
                }
                for &(u, c) in &coef {
                    let r = row_of[u];
                    if r == usize::MAX {
                        return Err(Error::SymmetryMismatch("group mixes boundary and interior".into()));
                    }
                    col[r] = if forced_zero { usize::MAX - 1 } else { ncols };
                    sign[r] = if forced_zero { 0.0 } else { c };
                }
                if !forced_zero {
                    ncols += 1;
                }
            }
            (col, sign, ncols, Subspace::GInvariant)
        }
    };
    if ncols == 0 {
        return Err(Error::Numerical("invariant subspace is trivial".into()));
    }
    let mut k = Triplets::new(ncols);
    let mut m = vec![0.0; ncols];
    for (i, row) in sys.stiffness.row_iter().enumerate() {
        if sign[i] == 0.0 {
            continue;
        }
        for (&j, &val) in row.col_indices().iter().zip(row.values()) {
            if sign[j] == 0.0 {
                continue;
            }
            k.add(col[i], col[j], sign[i] * sign[j] * val);
        }
        m[col[i]] += sys.mass[i];
    }
    let kc = k.to_csr();
    let (lambda, y) = if ncols <= 600 {
        let mut dense = DMatrix::zeros(ncols, ncols);
        for (i, row) in kc.row_iter().enumerate() {
            for (&j, &val) in row.col_indices().iter().zip(row.values()) {
                dense[(i, j)] += val;
            }
        }
        let (vals, vecs) = dense_generalized_eigen(&dense, &m);
        (vals[0], vecs.column(0).iter().copied().collect::<Vec<_>>())
    } else {
        smallest_generalized_eigen(&kc, &m, 400, 1e-10)?
    };
    let mut eigenvector = vec![0.0; mesh.num_vertices()];
    for (i, &v) in sys.free.iter().enumerate() {
        if sign[i] != 0.0 {
            eigenvector[v] = sign[i] * y[col[i]];
        }
    }
    Ok(StabilityResult {
        lambda_min: lambda,
        eigenvector,
        subspace,
        dimension: ncols,
    })
}

/// Rayleigh quotient of −L for a vertex function (boundary values ignored).
pub fn jacobi_rayleigh(sys: &JacobiSystem, u: &[f64]) -> f64 {
    let x: Vec<f64> = sys.free.iter().map(|&v| u[v]).collect();
    let kx = crate::linalg::matvec(&sys.stiffness, &x);
    let num: f64 = x.iter().zip(&kx).map(|(a, b)| a * b).sum();
    let den: f64 = x.iter().zip(&sys.mass).map(|(a, b)| a * a * b).sum();
    num / den
}
