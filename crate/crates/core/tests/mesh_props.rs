use std::f64::consts::PI;

use expander_lab::mesh::{euler_and_genus, flat_disk, load_mesh, save_mesh, sphere, TriMesh};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn subdivision_counts_and_area() {
    let disk = flat_disk(1.0, 6).unwrap();
    let fine = disk.subdivided().unwrap();
    assert_eq!(fine.num_vertices(), disk.num_vertices() + disk.num_edges());
    assert_eq!(fine.num_faces(), 4 * disk.num_faces());
    // Boundary midpoints move out onto the circle.
    let (a0, a1) = (disk.total_area(), fine.total_area());
    assert!(a0 < a1 && a1 < PI);
    let t = euler_and_genus(&fine).unwrap();
    assert_eq!((t.chi, t.boundary_loops, t.genus), (1, 1, 0));
}

#[test]
fn subdivided_sphere_keeps_its_topology() {
    let s = sphere(1.0, 1).unwrap().subdivided().unwrap();
    let t = euler_and_genus(&s).unwrap();
    assert_eq!((t.chi, t.boundary_loops, t.genus), (2, 0, 0));
}

#[test]
fn obj_round_trip_keeps_positions_and_constraints() {
    let dir = tempfile::tempdir().unwrap();
    let disk = flat_disk(2.0, 5).unwrap();
    let path = dir.path().join("disk.obj");
    save_mesh(&disk, &path).unwrap();
    let back = load_mesh(&path).unwrap();
    assert_eq!(back.faces(), disk.faces());
    assert_eq!(back.positions(), disk.positions());
    assert_eq!(back.tags(), disk.tags());
}

fn soup_of(m: &TriMesh, seed: u64, jitter: f64) -> (Vec<expander_lab::Vec3>, Vec<[usize; 3]>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos = Vec::new();
    let mut faces = Vec::new();
    for (i, &[a, b, c]) in m.faces().iter().enumerate() {
        for v in [a, b, c] {
            let d = expander_lab::Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.0);
            pos.push(m.position(v) + d * jitter);
        }
        let k = pos.len();
        // Every other triangle is flipped; welding has to restore a consistent orientation.
        faces.push(if i % 2 == 0 { [k - 3, k - 2, k - 1] } else { [k - 3, k - 1, k - 2] });
    }
    (pos, faces)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn red_green_refinement_preserves_topology(seed in any::<u64>(), density in 0.05..0.6f64) {
        let disk = flat_disk(1.0, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let marked: Vec<bool> = (0..disk.num_faces()).map(|_| rng.gen_bool(density)).collect();
        let fine = disk.refined(&marked).unwrap();
        let t = euler_and_genus(&fine).unwrap();
        prop_assert_eq!((t.chi, t.boundary_loops), (1, 1));
        prop_assert!(fine.num_faces() >= disk.num_faces() + 3 * marked.iter().filter(|&&m| m).count());
        prop_assert!(fine.min_quality() > 0.0);
        prop_assert!(fine.total_area() >= disk.total_area() - 1e-12);
    }

    #[test]
    fn soup_welds_back_to_the_mesh(seed in any::<u64>()) {
        let disk = flat_disk(1.0, 4).unwrap();
        let (pos, faces) = soup_of(&disk, seed, 1e-9);
        let m = TriMesh::from_soup(pos, faces, 1e-6).unwrap();
        prop_assert_eq!(m.num_vertices(), disk.num_vertices());
        prop_assert_eq!(m.num_faces(), disk.num_faces());
        let t = euler_and_genus(&m).unwrap();
        prop_assert_eq!((t.chi, t.boundary_loops), (1, 1));
        prop_assert!((m.total_area() - disk.total_area()).abs() < 1e-7);
    }
}
