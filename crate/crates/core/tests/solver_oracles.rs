use std::f64::consts::PI;

use expander_lab::foliation::integrate_profile;
use expander_lab::linalg::asymmetry;
use expander_lab::mesh::{flat_disk, radial_graph, sphere, TriMesh};
use expander_lab::pipeline::{solve_disk, solve_three_circles, ThreeCircleOptions};
use expander_lab::solver::*;
use expander_lab::symmetry::{SymmetryGroup, VertexAction};
use expander_lab::Vec3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Smallest Dirichlet eigenvalue of −Δ − ½x·∇ + ½ on the flat disk of radius
/// 1 and 2, by shooting on the radial equation (scipy, rtol 1e-12).
const DISK_LAMBDA_R1: f64 = 6.796_809_625_368;
const DISK_LAMBDA_R2: f64 = 2.5;

#[test]
fn single_triangle_weighted_area() {
    let m = TriMesh::new(
        vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)],
        vec![[0, 1, 2]],
    )
    .unwrap();
    let c = Vec3::new(1.0 / 3.0, 1.0 / 3.0, 0.0);
    assert!((weighted_area(&m) - 0.5 * (c.norm_squared() / 4.0).exp()).abs() < 1e-15);
}

#[test]
fn flat_disk_weighted_area() {
    // ∫ e^{r²/4} dA over the disk of radius R is 4π(e^{R²/4} − 1).
    let exact = |r: f64| 4.0 * PI * ((r * r / 4.0).exp() - 1.0);
    let one = weighted_area(&flat_disk(1.0, 32).unwrap());
    let two = weighted_area(&flat_disk(2.0, 32).unwrap());
    assert!((one / exact(1.0) - 1.0).abs() < 5e-3, "{one}");
    assert!((two / exact(2.0) - 1.0).abs() < 5e-3, "{two}");
    let ratio = (1f64.exp() - 1.0) / (0.25f64.exp() - 1.0);
    assert!((two / one / ratio - 1.0).abs() < 5e-3);
}

#[test]
fn flat_disk_is_already_critical() {
    let run = solve_disk(2.0, 16, &SolveOptions::default()).unwrap();
    assert!(run.result.converged);
    assert_eq!(run.result.iterations, 0);
    assert!(run.result.residual_max < 1e-12);
}

#[test]
fn sphere_residual_points_inward() {
    // On the sphere of radius r, H − ½(p·ν)ν = −(2/r + r/2)ν.
    let r = 2.0;
    let s = sphere(r, 3).unwrap();
    let res = expander_residual(&s);
    let expected = (2.0 / r + r / 2.0) / r;
    for (v, x) in res.vectors.iter().enumerate() {
        let p = s.position(v);
        assert!(x.dot(&p) < 0.0);
        assert!((x.norm() / expected - 1.0).abs() < 0.1, "{}", x.norm());
    }
}

#[test]
fn revolution_leaf_is_an_expander() {
    let p = integrate_profile(0.3, 3.0).unwrap();
    let f = |r: f64| p.eval(r).unwrap().0;
    let l2: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&n| expander_residual(&radial_graph(2.0, n, f).unwrap()).l2)
        .collect();
    assert!(l2[0] > 2.0 * l2[1] && l2[1] > 2.0 * l2[2], "{l2:?}");
    assert!(l2[2] < 1e-4);
    // The minimiser from the exact leaf stays on it.
    let seed = radial_graph(2.0, 24, f).unwrap();
    let out = minimize(&seed, &SymmetryGroup::trivial(), &SolveOptions::default()).unwrap();
    assert!(out.converged && out.residual_max < 1e-3);
    for q in out.mesh.positions() {
        assert!((q.z - f(q.x.hypot(q.y).min(2.0))).abs() < 2e-3);
    }
}

fn wavy_disk(seed: u64, amp: f64) -> TriMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = flat_disk(1.0, 10).unwrap();
    let bd: Vec<bool> = (0..m.num_vertices()).map(|v| m.is_boundary_vertex(v)).collect();
    for (v, p) in m.positions_mut().iter_mut().enumerate() {
        if !bd[v] {
            p.z += amp * rng.gen_range(-1.0..1.0) * (1.0 - p.norm_squared());
        }
    }
    m
}

#[test]
fn gradient_matches_finite_differences() {
    let m = wavy_disk(7, 0.2);
    let (g, _) = weighted_area_gradient(&m);
    let h = 1e-6;
    for v in [0, 5, 40, 100] {
        for axis in 0..3 {
            let mut plus = m.clone();
            plus.positions_mut()[v][axis] += h;
            let mut minus = m.clone();
            minus.positions_mut()[v][axis] -= h;
            let fd = (weighted_area(&plus) - weighted_area(&minus)) / (2.0 * h);
            assert!((fd - g[v][axis]).abs() < 1e-7 * (1.0 + g[v][axis].abs()), "{v} {axis}: {fd} vs {}", g[v][axis]);
        }
    }
}

#[test]
fn perturbed_disk_relaxes_back() {
    let m = wavy_disk(11, 0.05);
    let out = minimize(&m, &SymmetryGroup::trivial(), &SolveOptions::default()).unwrap();
    assert!(out.converged);
    let zmax = out.mesh.positions().iter().map(|p| p.z.abs()).fold(0.0, f64::max);
    assert!(zmax < 1e-3, "{zmax}");
    assert!(out.history.windows(2).all(|w| w[1].weighted_area <= w[0].weighted_area));
}

#[test]
fn jacobi_on_flat_disks() {
    for (r, exact) in [(1.0, DISK_LAMBDA_R1), (2.0, DISK_LAMBDA_R2)] {
        let disk = flat_disk(r, 24).unwrap();
        let sys = jacobi_system(&disk);
        assert!(asymmetry(&sys.stiffness) < 1e-12);
        let st = jacobi_min_eigenvalue(&disk, None).unwrap();
        assert!((st.lambda_min / exact - 1.0).abs() < 0.01, "R = {r}: {}", st.lambda_min);
        assert!((jacobi_rayleigh(&sys, &st.eigenvector) - st.lambda_min).abs() < 1e-8 * exact);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn flat_rayleigh_quotient_at_least_half(seed in any::<u64>()) {
        let disk = flat_disk(1.5, 8).unwrap();
        let sys = jacobi_system(&disk);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u: Vec<f64> = (0..disk.num_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        prop_assert!(jacobi_rayleigh(&sys, &u) >= 0.5 - 1e-12);
    }

    #[test]
    fn weighted_area_is_rotation_invariant(angle in 0.0..(2.0 * PI), seed in 0u64..1000) {
        let m = wavy_disk(seed, 0.3);
        let rot = expander_lab::symmetry::rotation_z(angle);
        let a = weighted_area(&m);
        prop_assert!((weighted_area(&m.transformed(&rot)) - a).abs() < 1e-12 * a);
    }
}

#[test]
fn three_circle_solve_is_symmetric_and_monotone() {
    let run = solve_three_circles(&ThreeCircleOptions {
        refine_levels: 0,
        ..ThreeCircleOptions::default()
    })
    .unwrap();
    let r = &run.result;
    assert!(r.converged, "{:?}", run.stages);
    let group = SymmetryGroup::build(3).unwrap();
    let action = VertexAction::discover(r.mesh.positions(), &group).unwrap();
    assert!(action.residual(r.mesh.positions()) < 1e-9);
    assert!(r.history.windows(2).all(|w| w[1].weighted_area <= w[0].weighted_area));
}
