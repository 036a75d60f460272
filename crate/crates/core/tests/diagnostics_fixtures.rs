use std::f64::consts::PI;

use expander_lab::boundary::{capped_seed, SeedOptions};
use expander_lab::diagnostics::*;
use expander_lab::mesh::{flat_disk, TriMesh};
use expander_lab::symmetry::{rotation_z, z_mirror};
use expander_lab::{Mat3, Vec3};
use nalgebra::Rotation3;
use proptest::prelude::*;

fn shifted(m: &TriMesh, dz: f64) -> TriMesh {
    let mut out = m.clone();
    for p in out.positions_mut() {
        p.z += dz;
    }
    out
}

fn disjoint_union(a: &TriMesh, b: &TriMesh) -> TriMesh {
    let n = a.num_vertices();
    let pos = a.positions().iter().chain(b.positions()).copied().collect();
    let faces = a
        .faces()
        .iter()
        .copied()
        .chain(b.faces().iter().map(|f| f.map(|v| v + n)))
        .collect();
    TriMesh::new(pos, faces).unwrap()
}

#[test]
fn two_close_sheets_are_big() {
    let disk = flat_disk(2.0, 32).unwrap();
    let two = disjoint_union(&shifted(&disk, 0.01), &shifted(&disk, -0.01).reversed().unwrap());
    let s = size_class(&two);
    assert!((s.phi_integral - 2.0).abs() < 0.02, "{}", s.phi_integral);
    assert_eq!(s.size, SizeClass::Big);
    assert!(s.dichotomy_ok);
}

#[test]
fn sheet_through_origin_counts_once_and_far_sheet_not_at_all() {
    let disk = flat_disk(2.0, 32).unwrap();
    assert!((phi_integral(&disk) - 1.0).abs() < 1e-3);
    assert_eq!(phi_integral(&shifted(&disk, 5.0)), 0.0);
    assert_eq!(size_class(&shifted(&disk, 5.0)).size, SizeClass::Small);
}

#[test]
fn offset_disk_ratio_increases() {
    let disk = shifted(&flat_disk(2.0, 32).unwrap(), 0.3);
    let radii: Vec<f64> = (1..=30).map(|i| 0.3 + 1.6 * i as f64 / 30.0).collect();
    let rep = monotonicity_series(&disk, &radii).unwrap();
    assert!(rep.monotone_ok);
    assert!(rep.series.iter().all(|e| e.valid));
    // Ball below the sheet meets nothing.
    assert_eq!(monotonicity_series(&disk, &[0.29]).unwrap().series[0].ratio, 0.0);
}

#[test]
fn cone_bound_is_equality_for_a_flat_disk() {
    let disk = flat_disk(2.0, 32).unwrap();
    let rep = monotonicity_series(&disk, &default_radii(&disk, 8)).unwrap();
    assert!(rep.cone_bound_ok);
    assert!((rep.area / rep.cone_bound - 1.0).abs() < 1e-3);
    assert!((rep.area - 4.0 * PI).abs() < 0.01);
}

#[test]
fn seed_is_type1_and_its_mirror_type2() {
    let seed = capped_seed(0.05, 0.04, 3, 2.0, &SeedOptions::default()).unwrap();
    assert_eq!(classify_type(&seed).unwrap(), SurfaceType::Type1);
    let mirror = seed.transformed(&z_mirror());
    assert_eq!(classify_type(&mirror).unwrap(), SurfaceType::Type2);
    // Mirroring then turning by π/k lands in the symmetry group and keeps the type.
    let turned = mirror.transformed(&rotation_z(PI / 3.0));
    assert_eq!(classify_type(&turned).unwrap(), SurfaceType::Type1);
}

#[test]
fn classification_needs_three_loops() {
    assert!(matches!(
        classify_type(&flat_disk(1.0, 8).unwrap()),
        Err(expander_lab::Error::ClassificationUnavailable(_))
    ));
}

#[test]
fn report_round_trips_through_json() {
    let disk = flat_disk(2.0, 16).unwrap();
    let rep = diagnose(&disk, &default_radii(&disk, 6)).unwrap();
    let text = serde_json::to_string(&rep).unwrap();
    let back: DiagnosticsReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, rep);
    assert_eq!(rep.schema_version, SCHEMA_VERSION);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gauss_bonnet_exact_on_planes_through_origin(
        seed in any::<u64>(),
        axis in prop::array::uniform3(-1.0..1.0f64),
        angle in 0.0..PI,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut m = flat_disk(1.5, 10).unwrap();
        let bd: Vec<bool> = (0..m.num_vertices()).map(|v| m.is_boundary_vertex(v)).collect();
        for (v, p) in m.positions_mut().iter_mut().enumerate() {
            if !bd[v] {
                p.x += 0.02 * rng.gen_range(-1.0..1.0);
                p.y += 0.02 * rng.gen_range(-1.0..1.0);
            }
        }
        let a = Vec3::from(axis);
        let rot: Mat3 = if a.norm() > 1e-3 {
            *Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(a), angle).matrix()
        } else {
            Mat3::identity()
        };
        let gb = gauss_bonnet_residual(&m.transformed(&rot)).unwrap();
        prop_assert!(gb.residual.abs() < 1e-6, "{:?}", gb);
    }
}
