use std::f64::consts::PI;

use expander_lab::boundary::{
    capped_seed, make_circles_boundary, make_gamma, reflect_union, seed_annulus, GammaPiece, SeedOptions,
};
use expander_lab::mesh::euler_and_genus;
use expander_lab::symmetry::{SymmetryGroup, VertexAction};

#[test]
fn annulus_topology_and_area() {
    let (s, eps, k, r) = (0.05, 0.04, 3, 2.0);
    let a = seed_annulus(s, eps, k, r, &SeedOptions::default()).unwrap();
    let t = euler_and_genus(&a).unwrap();
    assert_eq!((t.chi, t.boundary_loops, t.genus), (0, 2, 0));
    let (_, z) = expander_lab::foliation::circle_of_leaf(s, r).unwrap();
    let expected = 2.0 * PI * r * z + 0.5 * PI * (r * r - eps * eps);
    let area = a.total_area();
    println!("verts {} faces {} area {area} expected {expected} minq {}", a.num_vertices(), a.num_faces(), a.min_quality());
    assert!((area - expected).abs() < 0.01 * expected);
    let g = SymmetryGroup::build(k).unwrap().z_preserving();
    let act = VertexAction::discover(a.positions(), &g).unwrap();
    assert!(act.residual(a.positions()) < 1e-12);
}

#[test]
fn union_and_cap() {
    let (s, eps, k, r) = (0.05, 0.04, 3, 2.0);
    let a = seed_annulus(s, eps, k, r, &SeedOptions::default()).unwrap();
    let u = reflect_union(&a, k).unwrap();
    let t = euler_and_genus(&u).unwrap();
    assert_eq!((t.chi, t.boundary_loops, t.genus), (-2 * k as i64, 4, k as i64 - 1));
    let m = capped_seed(s, eps, k, r, &SeedOptions::default()).unwrap();
    let t = euler_and_genus(&m).unwrap();
    assert_eq!((t.chi, t.boundary_loops, t.genus), (1 - 2 * k as i64, 3, k as i64 - 1));
    let g = SymmetryGroup::build(k).unwrap();
    let act = VertexAction::discover(m.positions(), &g).unwrap();
    assert!(act.residual(m.positions()) < 1e-9);
}

#[test]
fn k1_union_is_sphere_with_four_holes() {
    let a = seed_annulus(0.1, 0.1, 1, 2.0, &SeedOptions::default()).unwrap();
    let u = reflect_union(&a, 1).unwrap();
    let t = euler_and_genus(&u).unwrap();
    assert_eq!((t.chi, t.genus), (-2, 0));
}

#[test]
fn gamma_pieces_and_area() {
    let g = make_gamma(1, 2.0, 0.3).unwrap();
    assert_eq!(g.count(GammaPiece::Radial), 2);
    assert_eq!(g.count(GammaPiece::OuterArc), 1);
    assert_eq!(g.count(GammaPiece::InnerArc), 1);
    assert!((g.total_turning() - 2.0 * PI).abs() < 1e-9);
    assert!(g.is_simple());
    let g3 = make_gamma(3, 2.0, 0.04).unwrap();
    let want = 0.5 * PI * 4.0 + 0.5 * PI * 0.04 * 0.04;
    assert!((g3.enclosed_area() - want).abs() < 5e-3 * want);
}

#[test]
fn circles_spec() {
    let b = make_circles_boundary(0.1, 2.0, 64).unwrap();
    assert_eq!(b.circles.as_ref().unwrap()[1], (2.0, 0.0));
    assert!(b.report.admissible() || b.report.eps_max > 0.05);
    assert!(make_circles_boundary(0.0, 2.0, 64).is_err());
}
