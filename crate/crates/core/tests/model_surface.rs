use std::f64::consts::PI;
use std::sync::OnceLock;

use expander_lab::mesh::flat_disk;
use expander_lab::model::*;
use expander_lab::Error;
use nalgebra::Complex;
use proptest::prelude::*;

struct Fixture {
    chart: ModelChart,
    surface: ModelSurface,
    report: ModelReport,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let chart = harmonic_field(256).unwrap();
        let surface = weierstrass_reconstruct(&chart, DEFAULT_TRUNCATION).unwrap();
        let report = model_report(&chart, &surface);
        Fixture { chart, surface, report }
    })
}

#[test]
fn resolution_must_be_even_and_large_enough() {
    assert!(matches!(harmonic_field(32), Err(Error::InvalidParameter(_))));
    assert!(matches!(harmonic_field(65), Err(Error::InvalidParameter(_))));
    let chart = harmonic_field(64).unwrap();
    assert!(weierstrass_reconstruct(&chart, 1.0).is_err());
}

#[test]
fn height_function_bounds_and_centre() {
    let f = fixture();
    let (lo, hi) = f.chart.u_range();
    assert!(lo > -1.0 && hi < 1.0);
    assert_eq!(f.chart.u_center(), 0.0);
    // Odd under x ↦ −x, so zero on the chart axis.
    let c = f.chart.resolution / 2;
    for j in 1..f.chart.resolution {
        let u = f.chart.u_at(c, j);
        assert!(u.is_nan() || u.abs() < 1e-14);
    }
}

#[test]
fn height_vanishes_toward_the_middle_of_j0() {
    // w = −i is the chart point of −e₃, inside the arc with data 0.
    for d in [1e-2, 1e-3, 1e-4] {
        let u = harmonic_u(Complex::new(0.0, -(1.0 - d)));
        assert!(u.abs() < 2.0 * d, "{d}: {u}");
    }
}

#[test]
fn five_point_residual_is_fourth_order() {
    let coarse = harmonic_field(128).unwrap().five_point_residual(0.5);
    let fine = fixture().chart.five_point_residual(0.5);
    // Un-normalised stencil: h⁴ for a harmonic function, so the Laplacian
    // itself falls like resolution⁻².
    assert!(coarse / fine > 12.0, "{coarse} {fine}");
    assert!(fine < 1e-7);
}

#[test]
fn reconstruction_is_minimal_and_bounded_by_three_lines() {
    let r = &fixture().report;
    assert!(r.period_mismatch < PERIOD_TOL);
    assert!(r.minimality_residual < 1e-3, "{}", r.minimality_residual);
    assert!(r.boundary_line_distance < 1e-2, "{}", r.boundary_line_distance);
    assert!(r.slab_excess < 1e-2);
}

#[test]
fn reconstruction_contains_the_negative_x_ray() {
    let r = &fixture().report;
    assert!(r.x_minus_distance < 1e-3);
    assert!(r.x_minus_range.1 < 1e-3);
    assert!(r.x_minus_range.0 < -100.0);
}

#[test]
fn gauss_degrees_and_total_curvature() {
    let r = &fixture().report;
    let d = r.degrees.as_ref().unwrap();
    assert_eq!((d.d_plus, d.d_minus), (0, 1));
    assert!((r.total_curvature / (2.0 * PI) - 1.0).abs() < 0.05);
    for h in [r.half_curvatures.0, r.half_curvatures.1] {
        assert!(h <= PI * 1.05, "{h}");
    }
}

#[test]
fn reversed_orientation_swaps_hemispheres() {
    let m = fixture().surface.mesh.reversed().unwrap();
    let d = gauss_degrees(&m).unwrap();
    assert_eq!((d.d_plus, d.d_minus), (1, 0));
}

#[test]
fn flat_disk_has_zero_degrees() {
    let d = gauss_degrees(&flat_disk(1.0, 12).unwrap()).unwrap();
    assert_eq!((d.d_plus, d.d_minus), (0, 0));
    assert_eq!(gauss_image_area(&flat_disk(1.0, 12).unwrap(), |_| true), 0.0);
}

#[test]
fn report_is_deterministic() {
    let chart = harmonic_field(64).unwrap();
    let a = model_report(&chart, &weierstrass_reconstruct(&chart, 0.999).unwrap());
    let b = model_report(&chart, &weierstrass_reconstruct(&chart, 0.999).unwrap());
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn height_is_odd_and_bounded(r in 0.0..0.999f64, t in 0.0..(2.0 * PI)) {
        let w = Complex::from_polar(r, t);
        let u = harmonic_u(w);
        prop_assert!(u > -1.0 && u < 1.0);
        prop_assert!((harmonic_u(Complex::new(-w.re, w.im)) + u).abs() < 1e-12);
    }

    #[test]
    fn conjugate_satisfies_cauchy_riemann(r in 0.0..0.9f64, t in 0.0..(2.0 * PI)) {
        let w = Complex::from_polar(r, t);
        let h = 1e-6;
        let dx = Complex::new(h, 0.0);
        let dy = Complex::new(0.0, h);
        let ux = (harmonic_u(w + dx) - harmonic_u(w - dx)) / (2.0 * h);
        let uy = (harmonic_u(w + dy) - harmonic_u(w - dy)) / (2.0 * h);
        let vx = (harmonic_conjugate(w + dx) - harmonic_conjugate(w - dx)) / (2.0 * h);
        let vy = (harmonic_conjugate(w + dy) - harmonic_conjugate(w - dy)) / (2.0 * h);
        let scale = 1.0 + ux.abs() + uy.abs();
        prop_assert!((ux - vy).abs() < 1e-5 * scale);
        prop_assert!((uy + vx).abs() < 1e-5 * scale);
    }
}
