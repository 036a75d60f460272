//! End-to-end solves: seed construction, staged minimisation and local
//! refinement at the Q_k points.

use serde::{Deserialize, Serialize};

use crate::boundary::{cap_inner, reflect_union, seed_annulus, seed_big, BigSeedOptions, SeedOptions};
use crate::error::{Error, Result};
use crate::foliation::circle_of_leaf;
use crate::mesh::{flat_disk, TriMesh};
use crate::solver::{minimize, SolveOptions, SolveResult};
use crate::symmetry::{q_points, SymmetryGroup};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedKind {
    AnnulusReflect,
    Disk,
    BigDoubleSheet,
}

impl std::str::FromStr for SeedKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "annulus_reflect" => Ok(Self::AnnulusReflect),
            "disk" => Ok(Self::Disk),
            "big_double_sheet" => Ok(Self::BigDoubleSheet),
            _ => Err(Error::Config(format!(
                "unknown seed kind {s:?} (annulus_reflect, disk, big_double_sheet)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ThreeCircleOptions {
    pub k: usize,
    pub radius: f64,
    pub s: f64,
    /// Radius of the hole ∂D_ε that is capped after the first stage.
    pub eps_hole: f64,
    pub seed: SeedOptions,
    pub solve: SolveOptions,
    /// Rounds of red-green refinement around the Q_k points on the equator.
    pub refine_levels: usize,
    /// Radius of the first refinement round in units of the circle height
    /// z_s; each later round shrinks it by 0.6.
    pub refine_reach: f64,
}

impl Default for ThreeCircleOptions {
    fn default() -> Self {
        Self {
            k: 3,
            radius: 2.0,
            s: 0.05,
            eps_hole: 0.04,
            seed: SeedOptions::default(),
            solve: SolveOptions::default(),
            refine_levels: 2,
            refine_reach: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub name: String,
    pub vertices: usize,
    pub iterations: usize,
    pub residual_max: f64,
    pub converged: bool,
}

impl StageSummary {
    fn of(name: &str, r: &SolveResult) -> Self {
        Self {
            name: name.into(),
            vertices: r.mesh.num_vertices(),
            iterations: r.iterations,
            residual_max: r.residual_max,
            converged: r.converged,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineSolve {
    pub stages: Vec<StageSummary>,
    /// The last stage.
    pub result: SolveResult,
}

/// Red-green refinement of the faces whose centroid lies within `reach` of
/// one of `centres`.
pub fn refine_near(mesh: &TriMesh, centres: &[Vec3], reach: f64) -> Result<TriMesh> {
    let pos = mesh.positions();
    let marked: Vec<bool> = mesh
        .faces()
        .iter()
        .map(|&[a, b, c]| {
            let g = (pos[a] + pos[b] + pos[c]) / 3.0;
            centres.iter().any(|q| (g - q).norm() < reach)
        })
        .collect();
    mesh.refined(&marked)
}

/// The surface with boundary C(s): minimise the annulus bounded by C_s and
/// Γ(ε) under the z-preserving part of G_k, double it by the half-turn about
/// Q_k, cap the hole ∂D_ε, minimise under G_k, then refine around the Q_k
/// points on the equator and minimise again after each round.
pub fn solve_three_circles(opts: &ThreeCircleOptions) -> Result<PipelineSolve> {
    let group = SymmetryGroup::build(opts.k)?;
    let (_, z_s) = circle_of_leaf(opts.s, opts.radius)?;
    let annulus = seed_annulus(opts.s, opts.eps_hole, opts.k, opts.radius, &opts.seed)?;
    let mut stages = Vec::new();
    let first = minimize(&annulus, &group.z_preserving(), &opts.solve)?;
    stages.push(StageSummary::of("annulus", &first));
    let capped = cap_inner(&reflect_union(&first.mesh, opts.k)?)?;
    let mut result = minimize(&capped, &group, &opts.solve)?;
    stages.push(StageSummary::of("capped", &result));
    let centres = q_points(opts.k, opts.radius)?;
    for level in 0..opts.refine_levels {
        let reach = opts.refine_reach * z_s * 0.6f64.powi(level as i32);
        let refined = refine_near(&result.mesh, &centres, reach)?;
        result = minimize(&refined, &group, &opts.solve)?;
        stages.push(StageSummary::of(&format!("refine{}", level + 1), &result));
    }
    Ok(PipelineSolve { stages, result })
}

/// Flat disk bounded by the equator of the sphere of radius `radius`; the
/// solve starts at the minimiser.
pub fn solve_disk(radius: f64, rings: usize, solve: &SolveOptions) -> Result<PipelineSolve> {
    let disk = flat_disk(radius, rings)?;
    let result = minimize(&disk, &SymmetryGroup::trivial(), solve)?;
    Ok(PipelineSolve {
        stages: vec![StageSummary::of("disk", &result)],
        result,
    })
}

/// Minimise the three-sheet big seed for C(s) under G_k. The necks of this
/// seed tend to pinch, in which case the degeneration error is returned.
pub fn solve_big(s: f64, k: usize, radius: f64, seed: &BigSeedOptions, solve: &SolveOptions) -> Result<PipelineSolve> {
    let group = SymmetryGroup::build(k)?;
    let mesh = seed_big(s, k, radius, seed)?;
    let result = minimize(&mesh, &group, solve)?;
    Ok(PipelineSolve {
        stages: vec![StageSummary::of("big", &result)],
        result,
    })
}
