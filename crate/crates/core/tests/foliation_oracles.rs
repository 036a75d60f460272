use expander_lab::foliation::{
    circle_of_leaf, integrate_profile, integrate_profile_rk4, leaf_gap, FoliationTable,
};
use expander_lab::Vec3;

// Reference values from an independent scipy solve_ivp (DOP853, rtol 1e-12).
const CIRCLES_R2: [(f64, f64, f64); 5] = [
    (0.025, 1.99967, 0.03616),
    (0.05, 1.99869, 0.07230),
    (0.1, 1.99478, 0.14445),
    (0.5, 1.8738, 0.6993),
    (1.0, 1.5374, 1.2792),
];

#[test]
fn circles_on_sphere_of_radius_two() {
    for (s, rho, z) in CIRCLES_R2 {
        let (r, h) = circle_of_leaf(s, 2.0).unwrap();
        let tol = if s < 0.2 { 2e-5 } else { 2e-4 };
        assert!((r - rho).abs() < tol, "s={s}: rho {r} vs {rho}");
        assert!((h - z).abs() < tol, "s={s}: z {h} vs {z}");
        assert!((r * r + h * h - 4.0).abs() < 1e-10);
    }
}

#[test]
fn curvature_at_axis() {
    for s in [0.05, 0.7, 1.5] {
        let p = integrate_profile(s, 1.0).unwrap();
        let (f, _) = p.eval(1e-3).unwrap();
        // f(r) = s + (s/8) r² + O(r⁴)
        assert!((f - s - s * 1e-6 / 8.0).abs() < 1e-12);
    }
}

#[test]
fn asymptotic_slopes() {
    for (s, eps) in [(0.025, 0.01396), (0.05, 0.02792), (0.1, 0.05585), (0.5, 0.2803), (1.0, 0.5666)] {
        let p = integrate_profile(s, 10.0).unwrap();
        assert!((p.slope - eps).abs() < 2e-4, "s={s}: {}", p.slope);
        assert!(p.cone_gap() > 0.0, "s={s} leaf dips below its cone");
    }
}

#[test]
fn ode_residual_small() {
    for s in [-1.3, 0.01, 0.4, 2.0] {
        let p = integrate_profile(s, 10.0).unwrap();
        assert!(p.max_ode_residual() < 1e-10, "s={s}: {}", p.max_ode_residual());
        assert!(p.max_graph_residual() < 1e-8);
    }
}

#[test]
fn leaves_ordered() {
    let a = integrate_profile(0.3, 10.0).unwrap();
    let b = integrate_profile(0.31, 10.0).unwrap();
    assert!(leaf_gap(&a, &b).unwrap() > 0.0);
}

#[test]
fn zeta_round_trip() {
    let table = FoliationTable::build(-2.0, 2.0, 0.01, 10.0).unwrap();
    for s in [-1.234, -0.05, 0.0317, 0.5, 1.999] {
        let p = integrate_profile(s, 10.0).unwrap();
        for r in [0.0, 0.3, 2.0, 7.5] {
            let (f, _) = p.eval(r).unwrap();
            let pt = Vec3::new(r * 0.6, r * 0.8, f);
            let z = table.zeta(&pt).unwrap();
            assert!((z - s).abs() < 1e-6, "s={s} r={r}: {z}");
        }
    }
    assert!(table.zeta(&Vec3::new(11.0, 0.0, 0.0)).is_err());
    assert!(table.zeta(&Vec3::new(0.0, 0.0, 5.0)).is_err());
}


#[test]
fn step_halving_agrees() {
    let a = integrate_profile_rk4(0.5, 10.0, 1e-3).unwrap();
    let b = integrate_profile_rk4(0.5, 10.0, 5e-4).unwrap();
    let c = integrate_profile(0.5, 10.0).unwrap();
    let fa = *a.f.last().unwrap();
    let fb = *b.f.last().unwrap();
    assert!((fa - fb).abs() < 1e-8);
    assert!((fb - c.eval(10.0).unwrap().0).abs() < 1e-8);
}

#[test]
fn second_derivative_at_axis_matches_fine_integrator() {
    let p = integrate_profile_rk4(0.1, 0.05, 1e-5).unwrap();
    // central difference of f' around r = 0.01
    let i = p.r.iter().position(|&r| (r - 0.01).abs() < 1e-9).unwrap();
    let d2 = (p.fp[i + 1] - p.fp[i - 1]) / (p.r[i + 1] - p.r[i - 1]);
    assert!((d2 - 0.025).abs() < 1e-5, "{d2}");
}

#[test]
fn plane_leaf_and_axis_points() {
    let table = FoliationTable::build(-1.0, 1.0, 0.01, 10.0).unwrap();
    assert_eq!(table.zeta(&Vec3::new(1.3, -2.2, 0.0)).unwrap(), 0.0);
    assert!((table.zeta(&Vec3::new(0.0, 0.0, 0.3)).unwrap() - 0.3).abs() < 1e-12);
    assert_eq!(circle_of_leaf(0.0, 3.0).unwrap(), (3.0, 0.0));
}

#[test]
fn circle_bisection_matches_grid_scan() {
    let (rho, _) = circle_of_leaf(0.1, 2.0).unwrap();
    let p = integrate_profile(0.1, 2.0).unwrap();
    let n = 200_000;
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..=n {
        let r = 2.0 * i as f64 / n as f64;
        let f = p.eval(r).unwrap().0;
        let g = (r * r + f * f - 4.0).abs();
        if g < best.0 {
            best = (g, r);
        }
    }
    assert!((best.1 - rho).abs() < 2e-5);
}

#[test]
fn circle_heights_increase_with_label() {
    let mut prev = 0.0;
    for i in 1..=10 {
        let (_, z) = circle_of_leaf(0.05 * i as f64, 2.0).unwrap();
        assert!(z > prev);
        prev = z;
    }
}
