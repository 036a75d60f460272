//! Curve-shortening flow of closed curves on the cylinder {x² + y² = 1}
//! that wind once around Z, and the homotopy it induces on boundary data.

use std::f64::consts::PI;

use serde::Serialize;

use crate::boundary::BoundarySpec;
use crate::error::{Error, Result};
use crate::Vec3;

const TAU: f64 = 2.0 * PI;

/// The semi-implicit step is allowed this many times the explicit bound
/// 0.25·h_min².
pub const IMPLICIT_FACTOR: f64 = 10.0;

/// Closed polyline on the flat cylinder, stored as a lift (θ_j, z_j) to the
/// universal cover. The segment after the last vertex ends at (θ_0 + 2π, z_0).
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderCurve {
    pub theta: Vec<f64>,
    pub z: Vec<f64>,
}

impl CylinderCurve {
    pub fn new(theta: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        if theta.len() != z.len() {
            return Err(Error::InvalidParameter("theta and z lengths differ".into()));
        }
        if theta.len() < 8 {
            return Err(Error::InvalidParameter(format!("a cylinder curve needs at least 8 points, got {}", theta.len())));
        }
        if theta.iter().chain(&z).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coordinate".into()));
        }
        Ok(Self { theta, z })
    }

    /// The graph z = f(θ) sampled at n equally spaced angles from θ = 0.
    pub fn from_graph(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let theta: Vec<f64> = (0..n).map(|j| TAU * j as f64 / n as f64).collect();
        let z = theta.iter().map(|&t| f(t)).collect();
        Self::new(theta, z)
    }

    /// Radial projection p ↦ p/ρ of a closed curve that winds once around Z.
    /// The orientation is flipped if needed so that θ increases by 2π.
    pub fn from_space_curve(curve: &[Vec3]) -> Result<Self> {
        let mut theta = Vec::with_capacity(curve.len());
        let mut z = Vec::with_capacity(curve.len());
        let mut acc = 0.0;
        for (i, p) in curve.iter().enumerate() {
            let rho = (p.x * p.x + p.y * p.y).sqrt();
            if rho <= 0.0 {
                return Err(Error::Geometry("curve meets the z-axis".into()));
            }
            let t = p.y.atan2(p.x);
            if i == 0 {
                acc = t;
            } else {
                let prev = curve[i - 1].y.atan2(curve[i - 1].x);
                acc += wrap(t - prev);
            }
            theta.push(acc);
            z.push(p.z / rho);
        }
        let closing = wrap(theta[0] - curve[curve.len() - 1].y.atan2(curve[curve.len() - 1].x));
        let total = theta[theta.len() - 1] + closing - theta[0];
        let winding = (total / TAU).round();
        if winding == -1.0 {
            let pts: Vec<Vec3> = curve.iter().rev().copied().collect();
            return Self::from_space_curve(&pts);
        }
        if winding != 1.0 {
            return Err(Error::Geometry(format!("curve winds {winding} times around Z")));
        }
        Self::new(theta, z)
    }

    /// Inverse of the radial projection onto ∂B(0, R).
    pub fn to_sphere(&self, radius: f64) -> Vec<Vec3> {
        self.theta
            .iter()
            .zip(&self.z)
            .map(|(&t, &z)| Vec3::new(t.cos(), t.sin(), z) * (radius / (1.0 + z * z).sqrt()))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Vertex j of the lift, for any integer j.
    pub fn point(&self, j: isize) -> [f64; 2] {
        let n = self.len() as isize;
        let (q, r) = (j.div_euclid(n), j.rem_euclid(n) as usize);
        [self.theta[r] + TAU * q as f64, self.z[r]]
    }

    pub fn segment_lengths(&self) -> Vec<f64> {
        (0..self.len() as isize)
            .map(|j| {
                let (a, b) = (self.point(j), self.point(j + 1));
                (b[0] - a[0]).hypot(b[1] - a[1])
            })
            .collect()
    }

    pub fn length(&self) -> f64 {
        self.segment_lengths().iter().sum()
    }

    pub fn max_abs_z(&self) -> f64 {
        self.z.iter().fold(0.0, |m, z| m.max(z.abs()))
    }

    /// Winding number around the cylinder from the wrapped angle increments.
    pub fn winding(&self) -> f64 {
        (0..self.len() as isize)
            .map(|j| wrap(self.point(j + 1)[0] - self.point(j)[0]))
            .sum::<f64>()
            / TAU
    }

    /// No two non-adjacent segments of the lift meet, including segments of
    /// the copies shifted by ±2π.
    pub fn is_simple(&self) -> bool {
        let n = self.len() as isize;
        if (0..n).all(|j| self.point(j + 1)[0] > self.point(j)[0]) {
            return true;
        }
        for i in 0..n {
            let (a0, a1) = (self.point(i), self.point(i + 1));
            for j in i..i + 2 * n {
                let dj = j - i;
                if dj == 0 || dj == 1 || dj == n - 1 || dj == n || dj == n + 1 || dj == 2 * n - 1 {
                    continue;
                }
                for shift in [-n, 0] {
                    let (b0, b1) = (self.point(j + shift), self.point(j + shift + 1));
                    if segments_cross(a0, a1, b0, b1) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Uniform arclength resampling with `n` points, keeping vertex 0.
    pub fn resampled(&self, n: usize) -> Self {
        let lens = self.segment_lengths();
        let total: f64 = lens.iter().sum();
        let mut theta = Vec::with_capacity(n);
        let mut z = Vec::with_capacity(n);
        let mut seg = 0usize;
        let mut start = 0.0;
        for i in 0..n {
            let s = total * i as f64 / n as f64;
            while seg + 1 < lens.len() && start + lens[seg] < s {
                start += lens[seg];
                seg += 1;
            }
            let t = if lens[seg] > 0.0 { ((s - start) / lens[seg]).clamp(0.0, 1.0) } else { 0.0 };
            let (a, b) = (self.point(seg as isize), self.point(seg as isize + 1));
            theta.push(a[0] + t * (b[0] - a[0]));
            z.push(a[1] + t * (b[1] - a[1]));
        }
        Self { theta, z }
    }

    /// The same curve started at its first crossing of the plane θ ≡ 0.
    pub fn started_at_zero(&self) -> Self {
        let n = self.len() as isize;
        for j in 0..n {
            let (a, b) = (self.point(j), self.point(j + 1));
            let m = (a[0] / TAU).ceil();
            let target = m * TAU;
            if a[0] <= target && target < b[0] || b[0] < target && target <= a[0] {
                let t = if b[0] != a[0] { (target - a[0]) / (b[0] - a[0]) } else { 0.0 };
                let mut theta = vec![0.0];
                let mut z = vec![a[1] + t * (b[1] - a[1])];
                let first = if t >= 1.0 { j + 2 } else { j + 1 };
                for i in first..j + 1 + n {
                    let p = self.point(i);
                    if t <= 0.0 && i == j + n {
                        break;
                    }
                    theta.push(p[0] - target);
                    z.push(p[1]);
                }
                return Self { theta, z };
            }
        }
        self.clone()
    }

    /// Rows θ,z.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("theta,z\n");
        for (t, z) in self.theta.iter().zip(&self.z) {
            s.push_str(&format!("{t:?},{z:?}\n"));
        }
        s
    }
}

/// Angle difference reduced to (−π, π].
fn wrap(mut d: f64) -> f64 {
    while d > PI {
        d -= TAU;
    }
    while d <= -PI {
        d += TAU;
    }
    d
}

fn segments_cross(a0: [f64; 2], a1: [f64; 2], b0: [f64; 2], b1: [f64; 2]) -> bool {
    let orient = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
    let d1 = orient(b0, b1, a0);
    let d2 = orient(b0, b1, a1);
    let d3 = orient(a0, a1, b0);
    let d4 = orient(a0, a1, b1);
    d1 * d2 <= 0.0 && d3 * d4 <= 0.0 && !(d1 == 0.0 && d2 == 0.0)
}

/// Solve the cyclic tridiagonal system lower_j x_{j−1} + diag_j x_j +
/// upper_j x_{j+1} = rhs_j (indices mod n) by Sherman–Morrison.
fn solve_cyclic(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= lower[0] * upper[n - 1] / gamma;
    let x = solve_tridiagonal(lower, &d, upper, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = upper[n - 1];
    let zz = solve_tridiagonal(lower, &d, upper, &u);
    let fact = (x[0] + lower[0] * x[n - 1] / gamma) / (1.0 + zz[0] + lower[0] * zz[n - 1] / gamma);
    x.iter().zip(&zz).map(|(a, b)| a - fact * b).collect()
}

/// Thomas algorithm; lower[0] and upper[n−1] are ignored.
fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut b = diag[0];
    x[0] = rhs[0] / b;
    for j in 1..n {
        c[j] = upper[j - 1] / b;
        b = diag[j] - lower[j] * c[j];
        x[j] = (rhs[j] - lower[j] * x[j - 1]) / b;
    }
    for j in (0..n - 1).rev() {
        x[j] -= c[j + 1] * x[j + 1];
    }
    x
}

/// One backward-Euler step of X_t = X_ss with the arclength weights frozen.
pub fn csf_step(curve: &CylinderCurve, dt: f64) -> CylinderCurve {
    let n = curve.len();
    let l = curve.segment_lengths();
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs_t = curve.theta.clone();
    for j in 0..n {
        let lp = l[(j + n - 1) % n];
        let ln = l[j];
        let w = 2.0 / (lp + ln);
        let (a, c) = (dt * w / lp, dt * w / ln);
        lower[j] = -a;
        upper[j] = -c;
        diag[j] = 1.0 + a + c;
    }
    // The lift of the neighbour across the seam is shifted by 2π.
    rhs_t[n - 1] += -upper[n - 1] * TAU;
    rhs_t[0] -= -lower[0] * TAU;
    let theta = solve_cyclic(&lower, &diag, &upper, &rhs_t);
    let z = solve_cyclic(&lower, &diag, &upper, &curve.z);
    CylinderCurve { theta, z }
}

#[derive(Debug, Clone, Copy)]
pub struct CsfOptions {
    /// Uniform arclength redistribution after every step.
    pub redistribute: bool,
    /// Keep a snapshot every this many steps (0: first and last only).
    pub snapshot_every: usize,
}

impl Default for CsfOptions {
    fn default() -> Self {
        Self {
            redistribute: true,
            snapshot_every: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CsfStepRecord {
    pub time: f64,
    pub max_abs_z: f64,
    pub length: f64,
}

#[derive(Debug, Clone)]
pub struct CsfTrajectory {
    pub records: Vec<CsfStepRecord>,
    pub snapshots: Vec<(f64, CylinderCurve)>,
    pub last: CylinderCurve,
}

impl CsfTrajectory {
    pub fn records_csv(&self) -> String {
        let mut s = String::from("time,max_abs_z,length\n");
        for r in &self.records {
            s.push_str(&format!("{:?},{:?},{:?}\n", r.time, r.max_abs_z, r.length));
        }
        s
    }
}

/// Largest step accepted for `curve`.
pub fn max_time_step(curve: &CylinderCurve) -> f64 {
    let h = curve.segment_lengths().into_iter().fold(f64::INFINITY, f64::min);
    IMPLICIT_FACTOR * 0.25 * h * h
}

/// Incremental flow state, shared by [`csf_run`] and the homotopy.
struct Flow {
    curve: CylinderCurve,
    n: usize,
    redistribute: bool,
}

impl Flow {
    fn advance(&mut self, dt: f64, time: f64) -> Result<()> {
        let mut next = csf_step(&self.curve, dt);
        if self.redistribute {
            next = next.resampled(self.n);
        }
        if !next.is_simple() {
            return Err(Error::Flow {
                time,
                msg: "curve lost embeddedness".into(),
            });
        }
        self.curve = next;
        Ok(())
    }
}

fn step_count(dt: f64, t_end: f64) -> usize {
    ((t_end / dt) - 1e-9).ceil().max(0.0) as usize
}

/// Flow `curve` from time 0 to `t_end` with steps of at most `dt`.
pub fn csf_run(curve: &CylinderCurve, dt: f64, t_end: f64, opts: &CsfOptions) -> Result<CsfTrajectory> {
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::InvalidParameter(format!("need dt > 0 and T ≥ 0, got dt={dt}, T={t_end}")));
    }
    let bound = max_time_step(curve);
    if dt > bound {
        return Err(Error::InvalidParameter(format!("dt = {dt:.3e} exceeds the step bound {bound:.3e}")));
    }
    if !curve.is_simple() {
        return Err(Error::Flow {
            time: 0.0,
            msg: "initial curve is not embedded".into(),
        });
    }
    let mut flow = Flow {
        curve: curve.clone(),
        n: curve.len(),
        redistribute: opts.redistribute,
    };
    let mut records = vec![CsfStepRecord {
        time: 0.0,
        max_abs_z: curve.max_abs_z(),
        length: curve.length(),
    }];
    let mut snapshots = vec![(0.0, curve.clone())];
    let steps = step_count(dt, t_end);
    let mut t = 0.0;
    for i in 0..steps {
        let h = dt.min(t_end - t);
        t = if i + 1 == steps { t_end } else { t + h };
        flow.advance(h, t)?;
        records.push(CsfStepRecord {
            time: t,
            max_abs_z: flow.curve.max_abs_z(),
            length: flow.curve.length(),
        });
        if opts.snapshot_every > 0 && (i + 1) % opts.snapshot_every == 0 && i + 1 != steps {
            snapshots.push((t, flow.curve.clone()));
        }
    }
    if steps > 0 {
        snapshots.push((t_end, flow.curve.clone()));
    }
    Ok(CsfTrajectory {
        records,
        snapshots,
        last: flow.curve,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct HomotopyOptions {
    pub t_end: f64,
    /// Points per curve; rounded up to a multiple of 2k so the discrete flow
    /// commutes with G_k.
    pub points: usize,
    /// Step as a fraction of the largest accepted step.
    pub step_fraction: f64,
    pub eps_star: f64,
}

impl Default for HomotopyOptions {
    fn default() -> Self {
        Self {
            t_end: 10.0,
            points: 192,
            step_fraction: 0.8,
            eps_star: crate::boundary::DEFAULT_EPS_STAR,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HomotopyStep {
    pub time: f64,
    /// Per curve, in the order of the input specification.
    pub max_abs_z: Vec<f64>,
    pub length: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Homotopy {
    /// `steps + 1` validated triples at equally spaced times in [0, T].
    pub specs: Vec<BoundarySpec>,
    /// One record per flow step.
    pub records: Vec<HomotopyStep>,
    pub final_curves: Vec<CylinderCurve>,
}

impl Homotopy {
    pub fn records_csv(&self) -> String {
        let mut s = String::from("time,curve,max_abs_z,length\n");
        for r in &self.records {
            for (i, (z, l)) in r.max_abs_z.iter().zip(&r.length).enumerate() {
                s.push_str(&format!("{:?},{i},{z:?},{l:?}\n", r.time));
            }
        }
        s
    }
}

fn homotopy_record(flows: &[Flow], time: f64) -> HomotopyStep {
    HomotopyStep {
        time,
        max_abs_z: flows.iter().map(|f| f.curve.max_abs_z()).collect(),
        length: flows.iter().map(|f| f.curve.length()).collect(),
    }
}

/// G_k-symmetric triple on ∂B(0, R) with cylinder heights
/// h + a·cos kθ, 1.5a·cos kθ and −h + a·cos kθ, sampled at n points.
pub fn wiggled_triple(k: usize, height: f64, amplitude: f64, radius: f64, n: usize, eps_star: f64) -> Result<BoundarySpec> {
    if !(height > 0.0) || !(amplitude >= 0.0) || !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "wiggled triple needs height > 0, amplitude ≥ 0, radius > 0 (got {height}, {amplitude}, {radius})"
        )));
    }
    let kf = k as f64;
    let curves = [height, 0.0, -height]
        .iter()
        .zip([1.0, 1.5, 1.0])
        .map(|(&h, m)| Ok(CylinderCurve::from_graph(n, |t| h + m * amplitude * (kf * t).cos())?.to_sphere(radius)))
        .collect::<Result<Vec<_>>>()?;
    BoundarySpec::from_curves(curves, radius, Some(k), eps_star)
}

/// Boundary data along the flow of each curve to a horizontal circle,
/// sampled at `steps + 1` equally spaced times in [0, T]; every sample is
/// checked against the admissible class.
pub fn homotopy_to_circles(spec: &BoundarySpec, steps: usize, opts: &HomotopyOptions) -> Result<Homotopy> {
    if steps == 0 {
        return Err(Error::InvalidParameter("the homotopy needs at least one step".into()));
    }
    let rep = spec.validate(spec.k, opts.eps_star)?;
    if !rep.admissible() {
        return Err(Error::RejectedBoundary(rep.messages.join("; ")));
    }
    if let Some(circles) = &spec.circles {
        let finals: Vec<CylinderCurve> = spec
            .curves
            .iter()
            .map(|c| CylinderCurve::from_space_curve(c))
            .collect::<Result<_>>()?;
        let rec = |time| HomotopyStep {
            time,
            max_abs_z: circles.iter().map(|c| (c.1 / c.0).abs()).collect(),
            length: vec![TAU; circles.len()],
        };
        return Ok(Homotopy {
            specs: vec![spec.clone(); steps + 1],
            records: vec![rec(0.0), rec(opts.t_end)],
            final_curves: finals,
        });
    }
    let block = 2 * spec.k.unwrap_or(1);
    let n = opts.points.div_ceil(block) * block;
    let mut flows = Vec::with_capacity(spec.curves.len());
    for c in &spec.curves {
        let cc = CylinderCurve::from_space_curve(c)?.started_at_zero().resampled(n);
        flows.push(Flow {
            curve: cc,
            n,
            redistribute: true,
        });
    }
    let dt = flows
        .iter()
        .map(|f| max_time_step(&f.curve))
        .fold(f64::INFINITY, f64::min)
        * opts.step_fraction;
    let snapshot = |flows: &[Flow], t: f64| -> Result<BoundarySpec> {
        let curves = flows.iter().map(|f| f.curve.to_sphere(spec.radius)).collect();
        let out = BoundarySpec::from_curves(curves, spec.radius, spec.k, opts.eps_star)?;
        if !out.report.admissible() {
            return Err(Error::Homotopy {
                time: t,
                msg: out.report.messages.join("; "),
            });
        }
        Ok(out)
    };
    let mut out = vec![snapshot(&flows, 0.0)?];
    let mut records = vec![homotopy_record(&flows, 0.0)];
    let mut t = 0.0;
    for i in 1..=steps {
        let target = opts.t_end * i as f64 / steps as f64;
        let sub = step_count(dt, target - t);
        for j in 0..sub {
            let h = dt.min(target - t);
            t = if j + 1 == sub { target } else { t + h };
            for f in flows.iter_mut() {
                f.advance(h, t).map_err(|e| match e {
                    Error::Flow { time, msg } => Error::Homotopy { time, msg },
                    e => e,
                })?;
            }
            records.push(homotopy_record(&flows, t));
        }
        t = target;
        out.push(snapshot(&flows, t)?);
    }
    Ok(Homotopy {
        specs: out,
        records,
        final_curves: flows.into_iter().map(|f| f.curve).collect(),
    })
}

/// Largest distance of the curve from the horizontal circle at its mean height,
/// measured on the cylinder.
pub fn distance_from_circle(curve: &CylinderCurve) -> f64 {
    let lens = curve.segment_lengths();
    let total: f64 = lens.iter().sum();
    let n = curve.len();
    let mean = (0..n)
        .map(|j| 0.5 * (lens[(j + n - 1) % n] + lens[j]) * curve.z[j])
        .sum::<f64>()
        / total;
    curve.z.iter().fold(0.0, |m, z| m.max((z - mean).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_solver_matches_dense() {
        let n = 9;
        let lower: Vec<f64> = (0..n).map(|j| -0.3 - 0.01 * j as f64).collect();
        let upper: Vec<f64> = (0..n).map(|j| -0.2 - 0.02 * j as f64).collect();
        let diag: Vec<f64> = (0..n).map(|j| 2.0 + 0.1 * j as f64).collect();
        let rhs: Vec<f64> = (0..n).map(|j| (j as f64).sin()).collect();
        let x = solve_cyclic(&lower, &diag, &upper, &rhs);
        for j in 0..n {
            let r = lower[j] * x[(j + n - 1) % n] + diag[j] * x[j] + upper[j] * x[(j + 1) % n];
            assert!((r - rhs[j]).abs() < 1e-13);
        }
    }

    #[test]
    fn start_at_zero_keeps_shape() {
        let c = CylinderCurve::from_graph(64, |t| 0.1 * t.sin()).unwrap();
        let shifted = CylinderCurve::new(c.theta.iter().map(|t| t + 0.05).collect(), c.z.clone()).unwrap();
        let s = shifted.started_at_zero();
        assert_eq!(s.theta[0], 0.0);
        assert!((s.length() - shifted.length()).abs() < 1e-12);
        assert!((s.winding() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn space_curve_round_trip() {
        let c = CylinderCurve::from_graph(32, |t| 0.02 * (3.0 * t).cos()).unwrap();
        let back = CylinderCurve::from_space_curve(&c.to_sphere(2.0)).unwrap();
        for j in 0..32 {
            assert!((back.theta[j] - c.theta[j]).abs() < 1e-12);
            assert!((back.z[j] - c.z[j]).abs() < 1e-12);
        }
        let rev: Vec<Vec3> = c.to_sphere(2.0).into_iter().rev().collect();
        assert!((CylinderCurve::from_space_curve(&rev).unwrap().winding() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn folded_curve_is_detected() {
        let mut c = CylinderCurve::from_graph(16, |_| 0.0).unwrap();
        assert!(c.is_simple());
        // 4 → 5 runs past 6 and 7; the segment 6 → 7 then cuts it.
        c.theta[5] = c.theta[7];
        c.theta[7] = c.theta[6];
        c.z[6] = 0.2;
        c.z[7] = -0.2;
        assert!(!c.is_simple());
    }
}
