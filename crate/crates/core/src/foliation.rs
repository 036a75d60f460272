//! Rotationally symmetric expanders z = f_s(r) and the foliation they form.
//!
//! The profile satisfies f″/(1+f′²) + f′/r = (f − r f′)/2 with f(0) = s,
//! f′(0) = 0. Leaves are ordered by s and fill space; ζ(p) is the label of
//! the leaf through p.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::Vec3;

/// Radius up to which the power series replaces the singular ODE at the axis.
pub const SERIES_RADIUS: f64 = 1e-3;
/// Largest step the adaptive integrator may take.
pub const MAX_STEP: f64 = 5e-3;
const RK_TOL: f64 = 1e-13;

/// Right-hand side f″ of the radial equation.
pub fn profile_rhs(r: f64, f: f64, fp: f64) -> f64 {
    (1.0 + fp * fp) * ((f - r * fp) / 2.0 - fp / r)
}

/// Series solution near the axis: f = s + a r² + b r⁴ with a = s/8, b = a³/2 − a/32.
fn series(s: f64, r: f64) -> (f64, f64) {
    let a = s / 8.0;
    let b = a * a * a / 2.0 - a / 32.0;
    (s + a * r * r + b * r.powi(4), 2.0 * a * r + 4.0 * b * r.powi(3))
}

#[derive(Debug, Clone)]
pub struct ProfileCurve {
    pub s: f64,
    pub r: Vec<f64>,
    pub f: Vec<f64>,
    pub fp: Vec<f64>,
    /// Estimate of the asymptotic slope, f′(r_max).
    pub slope: f64,
    /// Whether f′ has settled over the last tenth of the range.
    pub slope_converged: bool,
}

/// Integrate the profile with label `s` out to `r_max`.
pub fn integrate_profile(s: f64, r_max: f64) -> Result<ProfileCurve> {
    if !(r_max > 0.0) || !r_max.is_finite() || !s.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "need finite s and r_max > 0, got s = {s}, r_max = {r_max}"
        )));
    }
    if s < 0.0 {
        let mut p = integrate_profile(-s, r_max)?;
        p.s = s;
        p.f.iter_mut().for_each(|v| *v = -*v);
        p.fp.iter_mut().for_each(|v| *v = -*v);
        p.slope = -p.slope;
        return Ok(p);
    }
    let mut r = vec![0.0];
    let mut f = vec![s];
    let mut fp = vec![0.0];
    if s == 0.0 {
        let n = (r_max / MAX_STEP).ceil() as usize;
        for i in 1..=n {
            r.push(r_max * i as f64 / n as f64);
            f.push(0.0);
            fp.push(0.0);
        }
        return Ok(finish(s, r, f, fp));
    }
    let r0 = SERIES_RADIUS.min(r_max);
    let (f0, fp0) = series(s, r0);
    r.push(r0);
    f.push(f0);
    fp.push(fp0);
    dopri_to(&mut r, &mut f, &mut fp, r_max)?;
    Ok(finish(s, r, f, fp))
}

/// Classical RK4 with fixed step `h` after the series start. Slower than
/// [`integrate_profile`]; used as an independent cross-check.
pub fn integrate_profile_rk4(s: f64, r_max: f64, h: f64) -> Result<ProfileCurve> {
    if !(r_max > 0.0) || !(h > 0.0) {
        return Err(Error::InvalidParameter("need r_max > 0 and h > 0".into()));
    }
    let n = (r_max / h).round().max(1.0) as usize;
    let h = r_max / n as f64;
    let mut r = vec![0.0];
    let mut f = vec![s];
    let mut fp = vec![0.0];
    let (mut y0, mut y1) = series(s, h);
    r.push(h);
    f.push(y0);
    fp.push(y1);
    let rhs = |x: f64, a: f64, b: f64| (b, profile_rhs(x, a, b));
    for i in 1..n {
        let x = i as f64 * h;
        let k1 = rhs(x, y0, y1);
        let k2 = rhs(x + h / 2.0, y0 + h / 2.0 * k1.0, y1 + h / 2.0 * k1.1);
        let k3 = rhs(x + h / 2.0, y0 + h / 2.0 * k2.0, y1 + h / 2.0 * k2.1);
        let k4 = rhs(x + h, y0 + h * k3.0, y1 + h * k3.1);
        y0 += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        y1 += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        if !y0.is_finite() || !y1.is_finite() {
            return Err(Error::IntegrationFailure(format!("non-finite state at r = {x}")));
        }
        r.push(x + h);
        f.push(y0);
        fp.push(y1);
    }
    Ok(finish(s, r, f, fp))
}

fn finish(s: f64, r: Vec<f64>, f: Vec<f64>, fp: Vec<f64>) -> ProfileCurve {
    let n = r.len();
    let slope = fp[n - 1];
    let r_max = r[n - 1];
    let j = r.partition_point(|&x| x < 0.9 * r_max).min(n - 1);
    let change = (fp[n - 1] - fp[j]).abs();
    let slope_converged = change <= 1e-2 * fp[n - 1].abs().max(1e-300) || s == 0.0;
    ProfileCurve {
        s,
        r,
        f,
        fp,
        slope,
        slope_converged,
    }
}

/// Dormand–Prince 5(4) from the last stored sample out to `r_end`.
fn dopri_to(r: &mut Vec<f64>, f: &mut Vec<f64>, fp: &mut Vec<f64>, r_end: f64) -> Result<()> {
    const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let rhs = |x: f64, y: [f64; 2]| [y[1], profile_rhs(x, y[0], y[1])];
    let mut x = *r.last().unwrap();
    let mut y = [*f.last().unwrap(), *fp.last().unwrap()];
    let mut h = MAX_STEP.min(r_end - x);
    while x < r_end - 1e-15 {
        h = h.min(r_end - x).min(MAX_STEP);
        if h < 1e-14 {
            return Err(Error::IntegrationFailure(format!("step size underflow at r = {x}")));
        }
        let mut k = [[0.0; 2]; 7];
        for i in 0..7 {
            let mut yi = y;
            for j in 0..i {
                yi[0] += h * A[i][j] * k[j][0];
                yi[1] += h * A[i][j] * k[j][1];
            }
            k[i] = rhs(x + C[i] * h, yi);
        }
        let mut y5 = y;
        let mut y4 = y;
        for i in 0..7 {
            y5[0] += h * B5[i] * k[i][0];
            y5[1] += h * B5[i] * k[i][1];
            y4[0] += h * B4[i] * k[i][0];
            y4[1] += h * B4[i] * k[i][1];
        }
        let scale0 = RK_TOL * (1.0 + y[0].abs().max(y5[0].abs()));
        let scale1 = RK_TOL * (1.0 + y[1].abs().max(y5[1].abs()));
        let err = (((y5[0] - y4[0]) / scale0).powi(2) + ((y5[1] - y4[1]) / scale1).powi(2)).sqrt()
            / 2f64.sqrt();
        if !err.is_finite() {
            return Err(Error::IntegrationFailure(format!("non-finite state at r = {x}")));
        }
        if err <= 1.0 {
            x += h;
            y = y5;
            r.push(x);
            f.push(y[0]);
            fp.push(y[1]);
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
    }
    Ok(())
}

impl ProfileCurve {
    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap()
    }

    fn f2(&self, i: usize) -> f64 {
        if self.r[i] == 0.0 {
            self.s / 4.0
        } else {
            profile_rhs(self.r[i], self.f[i], self.fp[i])
        }
    }

    /// (f, f′) at radius `x` by quintic Hermite interpolation of the samples.
    pub fn eval(&self, x: f64) -> Result<(f64, f64)> {
        if !(0.0..=self.r_max() * (1.0 + 1e-14)).contains(&x) {
            return Err(Error::OutOfRange(format!(
                "radius {x} outside [0, {}]",
                self.r_max()
            )));
        }
        let i = self.r.partition_point(|&v| v <= x).saturating_sub(1).min(self.r.len() - 2);
        let (x0, x1) = (self.r[i], self.r[i + 1]);
        let h = x1 - x0;
        let t = ((x - x0) / h).clamp(0.0, 1.0);
        let (p0, d0, a0) = (self.f[i], self.fp[i] * h, self.f2(i) * h * h);
        let (p1, d1, a1) = (self.f[i + 1], self.fp[i + 1] * h, self.f2(i + 1) * h * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let t5 = t4 * t;
        let h00 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h10 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        let h20 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
        let h21 = 0.5 * (t3 - 2.0 * t4 + t5);
        let h11 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
        let h01 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        let v = h00 * p0 + h10 * d0 + h20 * a0 + h21 * a1 + h11 * d1 + h01 * p1;
        let dh00 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
        let dh10 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
        let dh20 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
        let dh21 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4);
        let dh11 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
        let dh01 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
        let d = (dh00 * p0 + dh10 * d0 + dh20 * a0 + dh21 * a1 + dh11 * d1 + dh01 * p1) / h;
        Ok((v, d))
    }

    /// |f″ − RHS| at each interior sample, with f″ from a five-point Lagrange
    /// derivative of the sampled f′.
    pub fn ode_residuals(&self) -> Vec<(f64, f64)> {
        let n = self.r.len();
        let mut out = Vec::new();
        for i in 3..n.saturating_sub(2) {
            let xs = &self.r[i - 2..=i + 2];
            let ys = &self.fp[i - 2..=i + 2];
            let d2 = lagrange_derivative(xs, ys, self.r[i]);
            let rhs = profile_rhs(self.r[i], self.f[i], self.fp[i]);
            out.push((self.r[i], (d2 - rhs).abs()));
        }
        out
    }

    pub fn max_ode_residual(&self) -> f64 {
        self.ode_residuals().iter().map(|x| x.1).fold(0.0, f64::max)
    }

    /// Residual of the graphical expander equation
    /// div(Df/W) − (f − x·Df)/(2W), W = √(1+|Df|²), for the surface of revolution.
    pub fn max_graph_residual(&self) -> f64 {
        let n = self.r.len();
        let mut worst: f64 = 0.0;
        for (k, (_, res)) in self.ode_residuals().into_iter().enumerate() {
            let i = k + 3;
            if i >= n {
                break;
            }
            let w = (1.0 + self.fp[i] * self.fp[i]).sqrt();
            worst = worst.max(res / w);
        }
        worst
    }

    /// min over samples of f(r) − slope·r; positive when the leaf lies above its cone.
    pub fn cone_gap(&self) -> f64 {
        self.r
            .iter()
            .zip(&self.f)
            .map(|(r, f)| f - self.slope * r)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,f,fp\n");
        for i in 0..self.r.len() {
            let _ = writeln!(s, "{:?},{:?},{:?}", self.r[i], self.f[i], self.fp[i]);
        }
        s
    }
}

/// Derivative at `x` of the polynomial interpolating (xs, ys).
pub fn lagrange_derivative(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    let mut total = 0.0;
    for j in 0..n {
        let mut denom = 1.0;
        for m in 0..n {
            if m != j {
                denom *= xs[j] - xs[m];
            }
        }
        let mut num = 0.0;
        for i in 0..n {
            if i == j {
                continue;
            }
            let mut prod = 1.0;
            for m in 0..n {
                if m != j && m != i {
                    prod *= x - xs[m];
                }
            }
            num += prod;
        }
        total += ys[j] * num / denom;
    }
    total
}

/// Minimum over common samples of f_{upper} − f_{lower}.
pub fn leaf_gap(lower: &ProfileCurve, upper: &ProfileCurve) -> Result<f64> {
    let r_max = lower.r_max().min(upper.r_max());
    let mut worst = f64::INFINITY;
    for &r in lower.r.iter().chain(upper.r.iter()) {
        if r <= r_max {
            worst = worst.min(upper.eval(r)?.0 - lower.eval(r)?.0);
        }
    }
    Ok(worst)
}

/// Profiles on a uniform grid of leaf labels.
#[derive(Debug, Clone)]
pub struct FoliationTable {
    pub s: Vec<f64>,
    pub profiles: Vec<ProfileCurve>,
    pub r_max: f64,
}

impl FoliationTable {
    /// Default grid s ∈ [−2, 2], spacing 0.01, profiles to r = 10.
    pub fn default_grid() -> Result<Self> {
        Self::build(-2.0, 2.0, 0.01, 10.0)
    }

    pub fn build(s_min: f64, s_max: f64, ds: f64, r_max: f64) -> Result<Self> {
        if !(ds > 0.0) || !(s_max > s_min) {
            return Err(Error::InvalidParameter("need s_max > s_min and ds > 0".into()));
        }
        let n = ((s_max - s_min) / ds).round() as usize;
        let s: Vec<f64> = (0..=n).map(|i| s_min + ds * i as f64).collect();
        let profiles = s
            .iter()
            .map(|&si| integrate_profile(si, r_max))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { s, profiles, r_max })
    }

    /// f_s(r) for tabulated leaves, monotone-cubic interpolated in s.
    pub fn interpolated_height(&self, s: f64, r: f64) -> Result<f64> {
        let vals = self.heights_at(r)?;
        pchip_eval(&self.s, &vals, s)
            .ok_or_else(|| Error::OutOfRange(format!("s = {s} outside the table")))
    }

    fn heights_at(&self, r: f64) -> Result<Vec<f64>> {
        self.profiles.iter().map(|p| p.eval(r).map(|v| v.0)).collect()
    }

    /// Leaf label of the point `p`.
    pub fn zeta(&self, p: &Vec3) -> Result<f64> {
        let r = (p.x * p.x + p.y * p.y).sqrt();
        if r > self.r_max {
            return Err(Error::OutOfRange(format!(
                "radius {r} beyond the tabulated {}",
                self.r_max
            )));
        }
        let vals = self.heights_at(r)?;
        let z = p.z;
        let n = vals.len();
        if z < vals[0] || z > vals[n - 1] {
            return Err(Error::OutOfRange(format!(
                "height {z} at radius {r} outside the leaves s ∈ [{}, {}]",
                self.s[0],
                self.s[n - 1]
            )));
        }
        let j = vals.partition_point(|&v| v <= z).saturating_sub(1).min(n - 2);
        if vals[j] == z {
            return Ok(self.s[j]);
        }
        // bracket [s_j, s_{j+1}], start from the interpolated inverse and
        // polish with exact leaf evaluations
        let g = |s: f64| -> Result<f64> {
            let prof = integrate_profile(s, r.max(SERIES_RADIUS))?;
            Ok(prof.eval(r)?.0 - z)
        };
        let (mut a, mut b) = (self.s[j], self.s[j + 1]);
        let (mut ga, mut gb) = (vals[j] - z, vals[j + 1] - z);
        let mut side = 0i32;
        for _ in 0..100 {
            if (b - a).abs() < 1e-13 {
                break;
            }
            let c = (a * gb - b * ga) / (gb - ga);
            let gc = g(c)?;
            if gc == 0.0 {
                return Ok(c);
            }
            if (gc < 0.0) == (ga < 0.0) {
                a = c;
                ga = gc;
                if side == -1 {
                    gb /= 2.0;
                }
                side = -1;
            } else {
                b = c;
                gb = gc;
                if side == 1 {
                    ga /= 2.0;
                }
                side = 1;
            }
            if gc.abs() < 1e-14 {
                return Ok(c);
            }
        }
        Ok(0.5 * (a + b))
    }

    /// CSV of s ↦ (ρ, z_s) on the sphere of radius `big_r`, for s ≥ 0 leaves.
    pub fn circle_map_csv(&self, big_r: f64) -> Result<String> {
        let mut s = String::from("s,rho,z\n");
        for p in &self.profiles {
            if p.s < 0.0 || p.s >= big_r {
                continue;
            }
            let (rho, z) = circle_of_profile(p, big_r)?;
            let _ = writeln!(s, "{:?},{:?},{:?}", p.s, rho, z);
        }
        Ok(s)
    }
}

/// Monotone piecewise-cubic (Fritsch–Carlson) interpolation.
pub fn pchip_eval(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    let n = xs.len();
    if n < 2 || x < xs[0] || x > xs[n - 1] {
        return None;
    }
    let i = xs.partition_point(|&v| v <= x).saturating_sub(1).min(n - 2);
    let d = |k: usize| (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
    let slope = |k: usize| -> f64 {
        if k == 0 {
            return d(0);
        }
        if k == n - 1 {
            return d(n - 2);
        }
        let (a, b) = (d(k - 1), d(k));
        if a * b <= 0.0 {
            0.0
        } else {
            let (h0, h1) = (xs[k] - xs[k - 1], xs[k + 1] - xs[k]);
            let w1 = 2.0 * h1 + h0;
            let w2 = h1 + 2.0 * h0;
            (w1 + w2) / (w1 / a + w2 / b)
        }
    };
    let h = xs[i + 1] - xs[i];
    let t = (x - xs[i]) / h;
    let (m0, m1) = (slope(i) * h, slope(i + 1) * h);
    let t2 = t * t;
    let t3 = t2 * t;
    Some(
        (2.0 * t3 - 3.0 * t2 + 1.0) * ys[i]
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * ys[i + 1]
            + (t3 - t2) * m1,
    )
}

fn circle_of_profile(p: &ProfileCurve, big_r: f64) -> Result<(f64, f64)> {
    if p.s == 0.0 {
        return Ok((big_r, 0.0));
    }
    let g = |rho: f64| -> Result<f64> {
        let f = p.eval(rho)?.0;
        Ok(rho * rho + f * f - big_r * big_r)
    };
    let (mut lo, mut hi) = (0.0, big_r.min(p.r_max()));
    if g(lo)? >= 0.0 || g(hi)? < 0.0 {
        return Err(Error::Geometry(format!(
            "leaf s = {} does not meet the sphere of radius {big_r}",
            p.s
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    let rho = 0.5 * (lo + hi);
    Ok((rho, p.eval(rho)?.0))
}

/// Intersection of the leaf with label `s ≥ 0` with the sphere ∂B(0, R):
/// the root ρ of ρ² + f_s(ρ)² = R², together with z_s = f_s(ρ).
pub fn circle_of_leaf(s: f64, big_r: f64) -> Result<(f64, f64)> {
    if s < 0.0 {
        return Err(Error::InvalidParameter(format!("circle_of_leaf needs s ≥ 0, got {s}")));
    }
    if !(big_r > s) {
        return Err(Error::Geometry(format!("leaf s = {s} does not meet the sphere of radius {big_r}")));
    }
    let p = integrate_profile(s, big_r)?;
    circle_of_profile(&p, big_r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_leaf_is_plane() {
        let p = integrate_profile(0.0, 3.0).unwrap();
        assert!(p.f.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn oddness() {
        let a = integrate_profile(0.3, 4.0).unwrap();
        let b = integrate_profile(-0.3, 4.0).unwrap();
        for x in [0.5, 1.7, 3.9] {
            assert_eq!(a.eval(x).unwrap().0, -b.eval(x).unwrap().0);
        }
    }

    #[test]
    fn pchip_reproduces_linear() {
        let xs = [0.0, 1.0, 2.0, 3.5];
        let ys = [1.0, 3.0, 5.0, 8.0];
        assert!((pchip_eval(&xs, &ys, 2.7).unwrap() - 6.4).abs() < 1e-12);
    }

    #[test]
    fn lagrange_derivative_of_quartic_is_exact() {
        let xs = [0.0, 0.3, 0.5, 0.9, 1.4];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| x.powi(4) - 2.0 * x).collect();
        let d = lagrange_derivative(&xs, &ys, 0.5);
        assert!((d - (4.0 * 0.125 - 2.0)).abs() < 1e-12);
    }
}
