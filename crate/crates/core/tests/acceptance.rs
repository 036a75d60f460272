//! End-to-end acceptance run: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use expander_lab::boundary::{make_circles_boundary, BigSeedOptions};
use expander_lab::csf::{distance_from_circle, homotopy_to_circles, wiggled_triple, HomotopyOptions};
use expander_lab::diagnostics::*;
use expander_lab::foliation::{integrate_profile, FoliationTable};
use expander_lab::mesh::{euler_and_genus, flat_disk, TriMesh};
use expander_lab::model::{gauss_degrees, harmonic_field, model_report, weierstrass_reconstruct, DEFAULT_TRUNCATION};
use expander_lab::pipeline::{solve_big, solve_disk, solve_three_circles, PipelineSolve, ThreeCircleOptions};
use expander_lab::solver::{expander_residual, jacobi_min_eigenvalue, minimize, SolveOptions};
use expander_lab::symmetry::{rotation_z, z_mirror, SymmetryGroup, VertexAction};
use expander_lab::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const K: usize = 3;
const R: f64 = 2.0;
const LABELS: [f64; 3] = [0.10, 0.05, 0.025];

/// Criteria that cannot hold as stated; their line still prints FAIL, and
/// the test checks the facts that show why instead.
const UNATTAINABLE: [usize; 1] = [6];

struct Solved {
    s: f64,
    run: PipelineSolve,
    seconds: f64,
    diag: DiagnosticsReport,
}

struct Context {
    solved: Vec<Solved>,
    disk: TriMesh,
    disk_diag: DiagnosticsReport,
}

impl Context {
    fn build() -> Self {
        let solved = LABELS
            .iter()
            .map(|&s| {
                let t = Instant::now();
                let run = solve_three_circles(&ThreeCircleOptions {
                    k: K,
                    radius: R,
                    s,
                    ..ThreeCircleOptions::default()
                })
                .unwrap();
                let seconds = t.elapsed().as_secs_f64();
                let mesh = &run.result.mesh;
                let diag = diagnose(mesh, &default_radii(mesh, 32)).unwrap();
                Solved { s, run, seconds, diag }
            })
            .collect();
        let disk = solve_disk(R, 16, &SolveOptions::default()).unwrap().result.mesh;
        let disk_diag = diagnose(&disk, &default_radii(&disk, 32)).unwrap();
        Self {
            solved,
            disk,
            disk_diag,
        }
    }

    fn main(&self) -> &Solved {
        self.solved.iter().find(|x| x.s == 0.05).unwrap()
    }
}

type Outcome = (bool, String);

fn c1_foliation() -> Outcome {
    let t = Instant::now();
    let p: Vec<_> = [0.1, 0.5, 1.0].iter().map(|&s| integrate_profile(s, 10.0).unwrap()).collect();
    let secs = t.elapsed().as_secs_f64();
    let res = p.iter().map(|q| q.max_ode_residual()).fold(0.0, f64::max);
    let (mut ordered, mut above_cone) = (true, true);
    for i in 0..=1000 {
        let r = 10.0 * i as f64 / 1000.0;
        let f: Vec<f64> = p.iter().map(|q| q.eval(r).unwrap().0).collect();
        ordered &= f[0] < f[1] && f[1] < f[2];
        above_cone &= p.iter().zip(&f).all(|(q, &fr)| fr > q.slope * r);
    }
    (
        res < 1e-8 && ordered && above_cone && secs < 1.0,
        format!("ODE residual {res:.1e}, ordered {ordered}, above cone {above_cone}, {secs:.3} s"),
    )
}

fn c2_zeta() -> Outcome {
    let table = FoliationTable::default_grid().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let i = rng.gen_range(0..table.s.len());
        let r = rng.gen_range(0.0..table.r_max);
        let t = rng.gen_range(0.0..2.0 * PI);
        let (f, _) = table.profiles[i].eval(r).unwrap();
        let z = table.zeta(&Vec3::new(r * t.cos(), r * t.sin(), f)).unwrap();
        worst = worst.max((z - table.s[i]).abs());
    }
    (worst < 1e-6, format!("max |ζ(p) − s| = {worst:.1e} over 100 points"))
}

fn c3_solve(ctx: &Context) -> Outcome {
    let m = ctx.main();
    let d = &m.diag;
    let res = expander_residual(&m.run.result.mesh).max;
    let ok = m.run.result.converged
        && d.boundary_loops == 3
        && d.genus == 2
        && d.surface_type == SurfaceType::Type1
        && d.size == SizeClass::Small
        && res < 1e-3
        && m.seconds < 600.0;
    (
        ok,
        format!(
            "loops {}, genus {}, {:?}, {:?}, residual {res:.2e}, {:.1} s",
            d.boundary_loops, d.genus, d.surface_type, d.size, m.seconds
        ),
    )
}

fn c4_total_curvature(ctx: &Context) -> Outcome {
    let target = 4.0 * PI * K as f64;
    let half: Vec<f64> = ctx.solved.iter().map(|x| x.diag.gauss_bonnet.lhs).collect();
    let gaps: Vec<f64> = half.iter().map(|h| (h - target).abs()).collect();
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    let last = gaps[gaps.len() - 1] / target;
    (
        monotone && last < 0.2,
        format!("½∫|A|² = {half:.3?} for s = {LABELS:?}, target {target:.3}, final gap {:.2}%", 100.0 * last),
    )
}

fn c5_stability(ctx: &Context) -> Outcome {
    let group = SymmetryGroup::build(K).unwrap();
    let mesh = &ctx.main().run.result.mesh;
    let coarse = jacobi_min_eigenvalue(mesh, Some(&group)).unwrap().lambda_min;
    let fine_seed = mesh.subdivided().unwrap();
    let fine = minimize(&fine_seed, &group, &SolveOptions::default()).unwrap();
    let fine_lambda = jacobi_min_eigenvalue(&fine.mesh, Some(&group)).unwrap().lambda_min;
    let drift = (fine_lambda - coarse).abs() / coarse.abs();
    (
        coarse > 0.0 && fine.converged && fine_lambda > 0.0 && drift < 0.1,
        format!(
            "λ_min {coarse:.4} ({} vertices), {fine_lambda:.4} after h/2 ({} vertices), drift {:.2}%",
            mesh.num_vertices(),
            fine.mesh.num_vertices(),
            100.0 * drift
        ),
    )
}

/// Returns the literal outcome and whether the supporting facts hold.
fn c6_type_swap(ctx: &Context) -> (Outcome, bool) {
    let mesh = &ctx.main().run.result.mesh;
    let group = SymmetryGroup::build(K).unwrap();
    let res = expander_residual(mesh).max;
    let composed = rotation_z(PI / K as f64) * z_mirror();
    let swapped = mesh.transformed(&composed);
    let swapped_type = classify_type(&swapped).ok();
    let swapped_res = expander_residual(&swapped).max;
    let in_group = group.contains(&composed);
    let maps_to_itself = VertexAction::discover(mesh.positions(), &SymmetryGroup::from_generators(&[composed])).is_ok();
    let mirrored = mesh.transformed(&z_mirror());
    let mirrored_type = classify_type(&mirrored).ok();
    let mirrored_res = expander_residual(&mirrored).max;
    let literal = swapped_type == Some(SurfaceType::Type2) && (swapped_res - res).abs() < 1e-12;
    let facts = in_group
        && maps_to_itself
        && swapped_type == Some(SurfaceType::Type1)
        && mirrored_type == Some(SurfaceType::Type2)
        && (mirrored_res - res).abs() < 1e-12;
    let detail = format!(
        "mirror∘rotation(π/k) gives {swapped_type:?} (element of G_k: {in_group}, maps the surface to itself: {maps_to_itself}); \
         mirror in {{z=0}} alone gives {mirrored_type:?} with residual change {:.1e}",
        (mirrored_res - res).abs()
    );
    ((literal, detail), facts)
}

fn c7_dichotomy(ctx: &Context) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for x in &ctx.solved {
        let eps = make_circles_boundary(x.s, R, 256).unwrap().report.eps_max;
        if !x.run.result.converged || eps > 0.05 {
            lines.push(format!("s={} skipped (ε_max {eps:.3})", x.s));
            continue;
        }
        let phi = x.diag.phi_integral;
        ok &= x.diag.dichotomy_ok && (x.diag.size != SizeClass::Small || phi < 4.0 / 3.0);
        lines.push(format!("s={} φ={phi:.4}", x.s));
    }
    ok &= ctx.disk_diag.dichotomy_ok;
    lines.push(format!("disk φ={:.4}", ctx.disk_diag.phi_integral));
    match solve_big(0.05, K, R, &BigSeedOptions::default(), &SolveOptions::default()) {
        Ok(b) if b.result.converged => {
            let sz = size_class(&b.result.mesh);
            ok &= sz.dichotomy_ok;
            lines.push(format!("big φ={:.4}", sz.phi_integral));
        }
        Ok(_) => lines.push("big seed not converged, excluded".into()),
        Err(e) => lines.push(format!("big seed excluded: {e}")),
    }
    (ok, lines.join(", "))
}

fn c8_monotonicity(ctx: &Context) -> Outcome {
    let reports = ctx
        .solved
        .iter()
        .filter(|x| x.run.result.converged)
        .map(|x| (format!("s={}", x.s), &x.diag))
        .chain(std::iter::once(("disk".to_string(), &ctx.disk_diag)));
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, d) in reports {
        let m = &d.monotonicity;
        ok &= m.monotone_ok && m.cone_bound_ok;
        lines.push(format!("{name}: monotone {}, area/bound {:.4}", m.monotone_ok, m.area / m.cone_bound));
    }
    (ok, lines.join(", "))
}

fn c9_gauss_bonnet(ctx: &Context) -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for x in ctx.solved.iter().filter(|x| x.run.result.converged) {
        let gb = &x.diag.gauss_bonnet;
        let rel = gb.residual.abs() / gb.lhs;
        ok &= rel < 0.02;
        lines.push(format!("s={}: {:.3}%", x.s, 100.0 * rel));
    }
    let flat = [gauss_bonnet_residual(&ctx.disk).unwrap().residual, gauss_bonnet_residual(&flat_disk(1.0, 7).unwrap()).unwrap().residual];
    ok &= flat.iter().all(|r| r.abs() < 1e-6);
    lines.push(format!("flat {:.1e}", flat.iter().map(|r| r.abs()).fold(0.0, f64::max)));
    (ok, lines.join(", "))
}

fn c10_model() -> Outcome {
    let t = Instant::now();
    let chart = harmonic_field(256).unwrap();
    let surface = weierstrass_reconstruct(&chart, DEFAULT_TRUNCATION).unwrap();
    let r = model_report(&chart, &surface);
    let secs = t.elapsed().as_secs_f64();
    let deg = gauss_degrees(&surface.mesh).ok().map(|d| (d.d_plus, d.d_minus));
    let ok = r.u_min >= -1.0
        && r.u_max <= 1.0
        && r.u_center == 0.0
        && r.minimality_residual < 1e-3
        && r.boundary_line_distance < 1e-2
        && deg == Some((0, 1))
        && (r.total_curvature / (2.0 * PI) - 1.0).abs() < 0.05
        && secs < 60.0;
    (
        ok,
        format!(
            "u ∈ [{:.4}, {:.4}], u(0) = {}, minimality {:.1e}, lines {:.1e}, degrees {deg:?}, ∫|K| = {:.4}, {secs:.1} s",
            r.u_min, r.u_max, r.u_center, r.minimality_residual, r.boundary_line_distance, r.total_curvature
        ),
    )
}

fn c11_csf() -> Outcome {
    let spec = wiggled_triple(K, 0.03, 0.01, R, 192, 0.05).unwrap();
    let h = homotopy_to_circles(&spec, 20, &HomotopyOptions::default()).unwrap();
    let monotone = h.records.windows(2).all(|w| {
        w[0].max_abs_z.iter().zip(&w[1].max_abs_z).all(|(a, b)| *b <= *a + 1e-15)
    });
    let winding = h.specs.iter().all(|s| s.report.windings == [1, 1, 1]);
    let dist = h.final_curves.iter().map(distance_from_circle).fold(0.0, f64::max);
    (
        monotone && winding && dist < 1e-3,
        format!("monotone {monotone}, windings kept {winding}, final distance {dist:.1e} at T = 10"),
    )
}

fn c12_eta(ctx: &Context) -> Outcome {
    let cone = Cone::from_spec(&make_circles_boundary(0.05, R, 256).unwrap(), 2048).unwrap();
    let t = cone_tracking_checks(&ctx.main().run.result.mesh, &cone).unwrap();
    let vacuous = if t.r_c >= R { " (R_C beyond the boundary: no points to test)" } else { "" };
    (
        t.eta_ok,
        format!(
            "λ̂ = {:.4}, 16/λ̂ = {:.1}, R_C = {:.1}, max product outside R_C {:.3e}{vacuous}",
            t.lambda_hat, t.eta, t.r_c, t.max_product_outside_r_c
        ),
    )
}

#[test]
fn acceptance() {
    let ctx = Context::build();
    let (c6, c6_facts) = c6_type_swap(&ctx);
    let results: Vec<(usize, &str, Outcome)> = vec![
        (1, "foliation fidelity", c1_foliation()),
        (2, "ζ round trip", c2_zeta()),
        (3, "circular-boundary solve", c3_solve(&ctx)),
        (4, "total-curvature limit", c4_total_curvature(&ctx)),
        (5, "strict stability", c5_stability(&ctx)),
        (6, "type bijection", c6),
        (7, "big/small dichotomy", c7_dichotomy(&ctx)),
        (8, "monotonicity", c8_monotonicity(&ctx)),
        (9, "Gauss–Bonnet residual", c9_gauss_bonnet(&ctx)),
        (10, "model surface", c10_model()),
        (11, "CSF homotopy", c11_csf()),
        (12, "η-tracking", c12_eta(&ctx)),
    ];
    // Straight to the stdout handle, so the lines show even when the
    // harness captures test output.
    let mut table = String::from("\n");
    for (n, name, (pass, detail)) in &results {
        let note = if UNATTAINABLE.contains(n) { " [not attainable as stated]" } else { "" };
        table += &format!("{} {n:>2} {name}: {detail}{note}\n", if *pass { "PASS" } else { "FAIL" });
    }
    std::io::stdout().write_all(table.as_bytes()).unwrap();
    let failed: Vec<usize> = results
        .iter()
        .filter(|(n, _, (pass, _))| !pass && !UNATTAINABLE.contains(n))
        .map(|r| r.0)
        .collect();
    assert!(failed.is_empty(), "criteria failed: {failed:?}");
    assert!(c6_facts, "the type-swap analysis no longer holds");
    let topo = euler_and_genus(&ctx.main().run.result.mesh).unwrap();
    assert_eq!(topo.genus, 2);
}
