use expander_lab::boundary::make_circles_boundary;
use expander_lab::csf::*;
use expander_lab::Error;
use proptest::prelude::*;

#[test]
fn small_mode_decays_like_the_heat_equation() {
    // Linearised flow z_t = z_θθ on the unit cylinder: a·cos mθ decays by e^{−m²t}.
    let m = 2.0;
    let c = CylinderCurve::from_graph(256, |t| 1e-4 * (m * t).cos()).unwrap();
    let dt = max_time_step(&c);
    let t_end = 0.25;
    let run = csf_run(&c, dt, t_end, &CsfOptions::default()).unwrap();
    let ratio = run.last.max_abs_z() / c.max_abs_z();
    assert!((ratio / (-m * m * t_end).exp() - 1.0).abs() < 0.01, "{ratio}");
}

#[test]
fn oversized_step_is_rejected() {
    let c = CylinderCurve::from_graph(64, |t| 0.1 * t.cos()).unwrap();
    let dt = 2.0 * max_time_step(&c);
    assert!(matches!(csf_run(&c, dt, 1.0, &CsfOptions::default()), Err(Error::InvalidParameter(_))));
}

#[test]
fn wiggled_triple_flows_to_circles() {
    let spec = wiggled_triple(3, 0.03, 0.01, 2.0, 192, 0.05).unwrap();
    assert!(spec.report.admissible());
    let h = homotopy_to_circles(&spec, 20, &HomotopyOptions::default()).unwrap();
    assert_eq!(h.specs.len(), 21);
    for w in h.records.windows(2) {
        for (a, b) in w[0].max_abs_z.iter().zip(&w[1].max_abs_z) {
            assert!(*b <= a + 1e-15, "max|z| rose from {a} to {b} at t = {}", w[1].time);
        }
    }
    for s in &h.specs {
        assert_eq!(s.report.windings, vec![1, 1, 1]);
        assert_eq!(s.report.symmetric, Some(true));
        assert!(s.report.admissible());
    }
    for c in &h.final_curves {
        assert!(distance_from_circle(c) < 1e-3);
        assert!((c.winding() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn circles_are_already_the_end_point() {
    let spec = make_circles_boundary(0.05, 2.0, 128).unwrap();
    let h = homotopy_to_circles(&spec, 5, &HomotopyOptions::default()).unwrap();
    assert_eq!(h.records.first().unwrap().max_abs_z, h.records.last().unwrap().max_abs_z);
    assert!(h.final_curves.iter().all(|c| distance_from_circle(c) < 1e-12));
}

fn fourier_curve(coef: &[f64], n: usize) -> CylinderCurve {
    CylinderCurve::from_graph(n, |t| {
        coef.iter()
            .enumerate()
            .map(|(m, a)| a * ((m + 1) as f64 * t + m as f64).cos())
            .sum()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn height_and_length_never_increase(coef in prop::collection::vec(-0.05..0.05f64, 1..5)) {
        let c = fourier_curve(&coef, 96);
        let run = csf_run(&c, max_time_step(&c), 0.5, &CsfOptions::default()).unwrap();
        for w in run.records.windows(2) {
            prop_assert!(w[1].max_abs_z <= w[0].max_abs_z + 1e-15);
            prop_assert!(w[1].length <= w[0].length + 1e-12);
        }
        prop_assert!((run.last.winding() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flow_commutes_with_the_z_mirror(coef in prop::collection::vec(-0.05..0.05f64, 1..5)) {
        let c = fourier_curve(&coef, 64);
        let m = CylinderCurve::new(c.theta.clone(), c.z.iter().map(|z| -z).collect()).unwrap();
        let dt = max_time_step(&c);
        let a = csf_run(&c, dt, 0.2, &CsfOptions::default()).unwrap().last;
        let b = csf_run(&m, dt, 0.2, &CsfOptions::default()).unwrap().last;
        for j in 0..a.len() {
            prop_assert!((a.z[j] + b.z[j]).abs() < 1e-13);
            prop_assert!((a.theta[j] - b.theta[j]).abs() < 1e-13);
        }
    }
}
