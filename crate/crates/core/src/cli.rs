//! Command-line runs: a flat key-value configuration, dispatch to the
//! library, and the artifacts written under the run directory.

use std::ffi::OsString;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process;

use clap::error::ErrorKind;
use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::boundary::{make_circles_boundary, DEFAULT_EPS_STAR};
use crate::csf::{distance_from_circle, homotopy_to_circles, wiggled_triple, HomotopyOptions};
use crate::diagnostics::{
    cone_tracking_checks, default_radii, diagnose, Cone, DiagnosticsReport, SCHEMA_VERSION,
};
use crate::error::{Error, Result};
use crate::foliation::FoliationTable;
use crate::mesh::{load_mesh, save_mesh};
use crate::model::{harmonic_field, model_report, weierstrass_reconstruct, ModelReport, DEFAULT_TRUNCATION};
use crate::pipeline::{solve_big, solve_disk, solve_three_circles, PipelineSolve, SeedKind, StageSummary, ThreeCircleOptions};
use crate::solver::{expander_residual, jacobi_min_eigenvalue, SolveOptions};
use crate::symmetry::SymmetryGroup;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;
pub const EXIT_USAGE: i32 = 64;

/// Environment variable naming the executable that sweep workers run.
pub const WORKER_EXE_VAR: &str = "EXPANDER_LAB_EXE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Foliate,
    Solve,
    Verify,
    Model,
    Csf,
    Sweep,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Self::Foliate => "foliate",
            Self::Solve => "solve",
            Self::Verify => "verify",
            Self::Model => "model",
            Self::Csf => "csf",
            Self::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub k: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    pub s: f64,
    pub eps_hole: f64,
    pub seed: SeedKind,
    pub tol: f64,
    pub max_iter: usize,
    pub refine_levels: usize,
    pub disk_rings: usize,
    pub genus_target: Option<i64>,
    pub stability: bool,
    /// Link samples for cone tracking; 0 skips it.
    pub cone_samples: usize,
    pub radii: usize,
    /// (s_min, ds, s_max).
    pub s_grid: (f64, f64, f64),
    pub r_max: f64,
    pub resolution: usize,
    pub truncation: f64,
    pub t_end: f64,
    pub csf_steps: usize,
    pub csf_points: usize,
    pub csf_height: f64,
    pub wiggle: f64,
    pub eps_star: f64,
    pub s_list: Vec<f64>,
    pub mesh: Option<PathBuf>,
    pub out: PathBuf,
    /// Concurrent sweep workers; 0 uses the available parallelism.
    pub workers: usize,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            k: 3,
            radius: 2.0,
            s: 0.05,
            eps_hole: 0.04,
            seed: SeedKind::AnnulusReflect,
            tol: SolveOptions::default().tol,
            max_iter: SolveOptions::default().max_iter,
            refine_levels: 2,
            disk_rings: 16,
            genus_target: None,
            stability: false,
            cone_samples: 2048,
            radii: 32,
            s_grid: (-2.0, 0.01, 2.0),
            r_max: 10.0,
            resolution: 256,
            truncation: DEFAULT_TRUNCATION,
            t_end: 10.0,
            csf_steps: 20,
            csf_points: 192,
            csf_height: 0.03,
            wiggle: 0.01,
            eps_star: DEFAULT_EPS_STAR,
            s_list: vec![0.1, 0.05, 0.025],
            mesh: None,
            out: PathBuf::from("run"),
            workers: 0,
        }
    }

    /// Set one field from its text form. Keys match the flag names; `-` and
    /// `_` are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        let bad = |what: &str| Error::Config(format!("{key}: expected {what}, got {v:?}"));
        let float = || v.parse::<f64>().map_err(|_| bad("a number"));
        let count = || v.parse::<usize>().map_err(|_| bad("a non-negative integer"));
        match key.as_str() {
            "command" => {
                self.command = Command::from_str(v, true).map_err(|_| bad("a command"))?;
            }
            "k" => self.k = count()?,
            "R" | "radius" => self.radius = float()?,
            "s" => self.s = float()?,
            "eps_hole" => self.eps_hole = float()?,
            "seed" => self.seed = v.parse()?,
            "tol" => self.tol = float()?,
            "max_iter" => self.max_iter = count()?,
            "refine_levels" => self.refine_levels = count()?,
            "disk_rings" => self.disk_rings = count()?,
            "genus_target" => {
                self.genus_target = if v.is_empty() || v == "none" {
                    None
                } else {
                    Some(v.parse().map_err(|_| bad("an integer"))?)
                }
            }
            "stability" => self.stability = v.parse().map_err(|_| bad("true or false"))?,
            "cone_samples" => self.cone_samples = count()?,
            "radii" => self.radii = count()?,
            "s_grid" => {
                let parts: Vec<f64> = v
                    .split(':')
                    .map(|p| p.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("min:step:max"))?;
                match parts[..] {
                    [a, b, c] => self.s_grid = (a, b, c),
                    _ => return Err(bad("min:step:max")),
                }
            }
            "r_max" => self.r_max = float()?,
            "resolution" => self.resolution = count()?,
            "truncation" => self.truncation = float()?,
            "t_end" => self.t_end = float()?,
            "csf_steps" => self.csf_steps = count()?,
            "csf_points" => self.csf_points = count()?,
            "csf_height" => self.csf_height = float()?,
            "wiggle" => self.wiggle = float()?,
            "eps_star" => self.eps_star = float()?,
            "s_list" => {
                self.s_list = v
                    .split(',')
                    .filter(|p| !p.trim().is_empty())
                    .map(|p| p.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("a comma-separated list of numbers"))?
            }
            "mesh" => self.mesh = Some(PathBuf::from(v)),
            "out" => self.out = PathBuf::from(v),
            "workers" => self.workers = count()?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Apply `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str, path: &Path) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: "expected key = value".into(),
            })?;
            self.set(k, v).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text, path)
    }

    /// The configuration as a file that `apply_text` reads back unchanged.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("command", self.command.name().into());
        put("k", self.k.to_string());
        put("R", format!("{:?}", self.radius));
        put("s", format!("{:?}", self.s));
        put("eps_hole", format!("{:?}", self.eps_hole));
        put("seed", serde_json::to_value(self.seed).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default());
        put("tol", format!("{:?}", self.tol));
        put("max_iter", self.max_iter.to_string());
        put("refine_levels", self.refine_levels.to_string());
        put("disk_rings", self.disk_rings.to_string());
        put("genus_target", self.genus_target.map_or("none".into(), |g| g.to_string()));
        put("stability", self.stability.to_string());
        put("cone_samples", self.cone_samples.to_string());
        put("radii", self.radii.to_string());
        put("s_grid", format!("{:?}:{:?}:{:?}", self.s_grid.0, self.s_grid.1, self.s_grid.2));
        put("r_max", format!("{:?}", self.r_max));
        put("resolution", self.resolution.to_string());
        put("truncation", format!("{:?}", self.truncation));
        put("t_end", format!("{:?}", self.t_end));
        put("csf_steps", self.csf_steps.to_string());
        put("csf_points", self.csf_points.to_string());
        put("csf_height", format!("{:?}", self.csf_height));
        put("wiggle", format!("{:?}", self.wiggle));
        put("eps_star", format!("{:?}", self.eps_star));
        put("s_list", self.s_list.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(","));
        if let Some(m) = &self.mesh {
            put("mesh", m.display().to_string());
        }
        put("out", self.out.display().to_string());
        put("workers", self.workers.to_string());
        s
    }

    /// Check the parameters the chosen command uses against the
    /// preconditions of the modules it calls.
    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(Error::InvalidParameter(m));
        let solve_checks = |s: f64| -> Result<()> {
            if self.k < 2 {
                return invalid(format!("k must be at least 2, got {}", self.k));
            }
            if !(self.radius > 0.0) {
                return invalid(format!("R must be positive, got {}", self.radius));
            }
            if !(self.tol > 0.0) || self.max_iter == 0 {
                return invalid("tol must be positive and max_iter at least 1".into());
            }
            if self.seed != SeedKind::Disk {
                if !(s > 0.0) {
                    return Err(Error::RejectedBoundary(format!(
                        "s = {s} is not admissible: the circles C_s, C_0 and C_-s on the boundary sphere are \
                         distinct only for a positive leaf label"
                    )));
                }
                if !(self.eps_hole > 0.0) || self.eps_hole >= self.radius {
                    return invalid(format!("eps_hole must lie in (0, R), got {}", self.eps_hole));
                }
            }
            Ok(())
        };
        match self.command {
            Command::Foliate => {
                let (a, d, b) = self.s_grid;
                if !(d > 0.0) || !(b > a) || !(self.r_max > 0.0) {
                    return invalid(format!("need s_grid min < max, step > 0 and r_max > 0, got {a}:{d}:{b}, {}", self.r_max));
                }
                Ok(())
            }
            Command::Solve => solve_checks(self.s),
            Command::Sweep => {
                if self.s_list.is_empty() {
                    return invalid("s_list is empty".into());
                }
                self.s_list.iter().try_for_each(|&s| solve_checks(s))
            }
            Command::Verify => match &self.mesh {
                Some(_) => Ok(()),
                None => invalid("verify needs mesh = <path>".into()),
            },
            Command::Model => {
                if self.resolution < 64 || self.resolution % 2 != 0 {
                    return invalid(format!("resolution must be even and at least 64, got {}", self.resolution));
                }
                if !(self.truncation > 0.5 && self.truncation < 1.0) {
                    return invalid(format!("truncation must lie in (0.5, 1), got {}", self.truncation));
                }
                Ok(())
            }
            Command::Csf => {
                if !(self.t_end > 0.0) || self.csf_steps == 0 || self.csf_points < 16 {
                    return invalid("need t_end > 0, csf_steps ≥ 1 and csf_points ≥ 16".into());
                }
                if !(self.csf_height > 0.0) || !(self.wiggle >= 0.0) {
                    return invalid("need csf_height > 0 and wiggle ≥ 0".into());
                }
                Ok(())
            }
        }
    }
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotConverged { .. } => EXIT_NOT_CONVERGED,
        Error::InvalidParameter(_)
        | Error::RejectedBoundary(_)
        | Error::OutOfRange(_)
        | Error::SymmetryMismatch(_)
        | Error::Validation(_) => EXIT_VALIDATION,
        Error::Config(_) | Error::Parse { .. } => EXIT_USAGE,
        _ => EXIT_INTERNAL,
    }
}

#[derive(Debug, Parser)]
#[command(name = "expander-lab", version, about = "Symmetric self-expanders by weighted-area minimisation")]
pub struct Cli {
    pub command: Command,
    /// Flat key = value file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Any config key, as KEY=VALUE.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<String>,
    #[arg(long = "R", allow_hyphen_values = true)]
    pub radius: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub eps_hole: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub tol: Option<String>,
    #[arg(long)]
    pub max_iter: Option<String>,
    #[arg(long)]
    pub refine_levels: Option<String>,
    #[arg(long)]
    pub disk_rings: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub genus_target: Option<String>,
    #[arg(long)]
    pub stability: Option<String>,
    #[arg(long)]
    pub cone_samples: Option<String>,
    #[arg(long)]
    pub radii: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub s_grid: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub r_max: Option<String>,
    #[arg(long)]
    pub resolution: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub truncation: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_end: Option<String>,
    #[arg(long)]
    pub csf_steps: Option<String>,
    #[arg(long)]
    pub csf_points: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub csf_height: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub wiggle: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub eps_star: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub s_list: Option<String>,
    #[arg(long)]
    pub mesh: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub workers: Option<String>,
}

impl Cli {
    fn flags(&self) -> Vec<(&'static str, &String)> {
        let all = [
            ("k", &self.k),
            ("R", &self.radius),
            ("s", &self.s),
            ("eps_hole", &self.eps_hole),
            ("seed", &self.seed),
            ("tol", &self.tol),
            ("max_iter", &self.max_iter),
            ("refine_levels", &self.refine_levels),
            ("disk_rings", &self.disk_rings),
            ("genus_target", &self.genus_target),
            ("stability", &self.stability),
            ("cone_samples", &self.cone_samples),
            ("radii", &self.radii),
            ("s_grid", &self.s_grid),
            ("r_max", &self.r_max),
            ("resolution", &self.resolution),
            ("truncation", &self.truncation),
            ("t_end", &self.t_end),
            ("csf_steps", &self.csf_steps),
            ("csf_points", &self.csf_points),
            ("csf_height", &self.csf_height),
            ("wiggle", &self.wiggle),
            ("eps_star", &self.eps_star),
            ("s_list", &self.s_list),
            ("mesh", &self.mesh),
            ("out", &self.out),
            ("workers", &self.workers),
        ];
        all.into_iter().filter_map(|(k, v)| v.as_ref().map(|v| (k, v))).collect()
    }

    /// Defaults, then the config file, then `--set` pairs, then flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::new(self.command);
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
            cfg.command = self.command;
        }
        for pair in &self.set {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {pair:?}")))?;
            cfg.set(k, v)?;
        }
        for (k, v) in self.flags() {
            cfg.set(k, v)?;
        }
        cfg.command = self.command;
        Ok(cfg)
    }
}

/// ½∫|A|² against its limit 4πk for small s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureComparison {
    pub half_total_curvature: f64,
    pub target: f64,
    pub relative_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub seed: SeedKind,
    pub iterations: usize,
    pub weighted_area: f64,
    pub residual_max: f64,
    pub converged: bool,
    pub stages: Vec<StageSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub schema_version: u32,
    pub command: Command,
    pub config: RunConfig,
    pub solve: SolveSummary,
    pub expander_residual: f64,
    pub diagnostics: DiagnosticsReport,
    pub curvature: Option<CurvatureComparison>,
    pub genus_target_ok: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub command: Command,
    pub config: RunConfig,
    pub expander_residual: f64,
    pub diagnostics: DiagnosticsReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelRunReport {
    pub schema_version: u32,
    pub command: Command,
    pub config: RunConfig,
    pub model: ModelReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoliateReport {
    pub schema_version: u32,
    pub command: Command,
    pub config: RunConfig,
    pub leaves: usize,
    pub max_ode_residual: f64,
    /// Leaves are pointwise ordered by s at every sampled radius.
    pub ordered: bool,
    /// ε(s) converged on every leaf.
    pub slopes_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsfReport {
    pub schema_version: u32,
    pub command: Command,
    pub config: RunConfig,
    pub steps: usize,
    pub final_max_abs_z: Vec<f64>,
    pub final_circle_distance: Vec<f64>,
    /// max|z| of every curve is nonincreasing over the recorded steps.
    pub max_abs_z_monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub s: f64,
    pub exit_code: i32,
    pub genus: Option<i64>,
    pub phi_integral: Option<f64>,
    pub half_total_curvature: Option<f64>,
    pub residual_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub command: Command,
    pub config: RunConfig,
    pub runs: Vec<SweepEntry>,
}

/// Pretty JSON with a trailing newline; field order is the declaration
/// order, so equal reports give equal bytes.
pub fn emit_report<T: Serialize>(report: &T) -> Result<String> {
    serde_json::to_string_pretty(report)
        .map(|s| s + "\n")
        .map_err(|e| Error::Numerical(format!("report does not serialize: {e}")))
}

/// The solve report for a finished pipeline run.
pub fn solve_report(config: &RunConfig, run: &PipelineSolve, diagnostics: DiagnosticsReport) -> SolveReport {
    let r = &run.result;
    let curvature = (config.seed != SeedKind::Disk).then(|| {
        let half = diagnostics.gauss_bonnet.lhs;
        let target = 4.0 * PI * config.k as f64;
        CurvatureComparison {
            half_total_curvature: half,
            target,
            relative_gap: (half - target) / target,
        }
    });
    SolveReport {
        schema_version: SCHEMA_VERSION,
        command: Command::Solve,
        config: config.clone(),
        solve: SolveSummary {
            seed: config.seed,
            iterations: r.iterations,
            weighted_area: r.weighted_area,
            residual_max: r.residual_max,
            converged: r.converged,
            stages: run.stages.clone(),
        },
        expander_residual: expander_residual(&r.mesh).max,
        genus_target_ok: config.genus_target.map(|g| g == diagnostics.genus),
        diagnostics,
        curvature,
    }
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, text).map_err(|e| Error::io(&p, e))
}

fn prepare_dir(cfg: &RunConfig) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    write(&cfg.out, "config.txt", &cfg.to_kv())?;
    Ok(cfg.out.clone())
}

/// What a finished run wrote.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub files: Vec<String>,
}

/// Validate and dispatch. Artifacts are written before a non-converged
/// solve or a failed genus target is reported as an error.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    match cfg.command {
        Command::Foliate => run_foliate(cfg),
        Command::Solve => run_solve(cfg),
        Command::Verify => run_verify(cfg),
        Command::Model => run_model(cfg),
        Command::Csf => run_csf(cfg),
        Command::Sweep => run_sweep(cfg),
    }
}

fn run_foliate(cfg: &RunConfig) -> Result<RunSummary> {
    let (a, d, b) = cfg.s_grid;
    let table = FoliationTable::build(a, b, d, cfg.r_max)?;
    let dir = prepare_dir(cfg)?;
    let mut leaves = String::from("s,slope,slope_converged,cone_gap,max_ode_residual\n");
    for p in &table.profiles {
        let _ = writeln!(
            leaves,
            "{:?},{:?},{},{:?},{:?}",
            p.s,
            p.slope,
            p.slope_converged,
            p.cone_gap(),
            p.max_ode_residual()
        );
    }
    let n_r = (cfg.r_max / 0.25).floor() as usize;
    let mut profiles = String::from("s,r,f,fp\n");
    let mut ordered = true;
    for i in 0..=n_r {
        let r = (i as f64 * 0.25).min(cfg.r_max);
        let mut prev = f64::NEG_INFINITY;
        for p in &table.profiles {
            let (f, fp) = p.eval(r)?;
            ordered &= f > prev;
            prev = f;
            let _ = writeln!(profiles, "{:?},{:?},{:?},{:?}", p.s, r, f, fp);
        }
    }
    write(&dir, "foliation.csv", &leaves)?;
    write(&dir, "profiles.csv", &profiles)?;
    let mut files = vec!["foliation.csv".to_string(), "profiles.csv".to_string()];
    if cfg.radius < cfg.r_max {
        write(&dir, "circle_map.csv", &table.circle_map_csv(cfg.radius)?)?;
        files.push("circle_map.csv".into());
    }
    let report = FoliateReport {
        schema_version: SCHEMA_VERSION,
        command: Command::Foliate,
        config: cfg.clone(),
        leaves: table.profiles.len(),
        max_ode_residual: table.profiles.iter().map(|p| p.max_ode_residual()).fold(0.0, f64::max),
        ordered,
        slopes_converged: table.profiles.iter().all(|p| p.slope_converged),
    };
    write(&dir, "report.json", &emit_report(&report)?)?;
    files.push("report.json".into());
    Ok(RunSummary { dir, files })
}

fn run_solve(cfg: &RunConfig) -> Result<RunSummary> {
    let solve = SolveOptions {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        ..SolveOptions::default()
    };
    let run = match cfg.seed {
        SeedKind::AnnulusReflect => solve_three_circles(&ThreeCircleOptions {
            k: cfg.k,
            radius: cfg.radius,
            s: cfg.s,
            eps_hole: cfg.eps_hole,
            solve,
            refine_levels: cfg.refine_levels,
            ..ThreeCircleOptions::default()
        })?,
        SeedKind::Disk => solve_disk(cfg.radius, cfg.disk_rings, &solve)?,
        SeedKind::BigDoubleSheet => solve_big(cfg.s, cfg.k, cfg.radius, &Default::default(), &solve)?,
    };
    let mesh = &run.result.mesh;
    let mut diag = diagnose(mesh, &default_radii(mesh, cfg.radii))?;
    if cfg.stability {
        let group = match cfg.seed {
            SeedKind::Disk => None,
            _ => Some(SymmetryGroup::build(cfg.k)?),
        };
        diag.stability_lambda_min = Some(jacobi_min_eigenvalue(mesh, group.as_ref())?.lambda_min);
    }
    if cfg.seed == SeedKind::AnnulusReflect && cfg.cone_samples > 0 {
        let cone = Cone::from_spec(&make_circles_boundary(cfg.s, cfg.radius, 256)?, cfg.cone_samples)?;
        diag.eta_tracking = match cone_tracking_checks(mesh, &cone) {
            Ok(t) => Some(t),
            Err(Error::Inconclusive(_)) => None,
            Err(e) => return Err(e),
        };
    }
    let series = diag.monotonicity.series_csv();
    let report = solve_report(cfg, &run, diag);
    let dir = prepare_dir(cfg)?;
    save_mesh(mesh, &dir.join("mesh.obj"))?;
    write(&dir, "history.csv", &run.result.history_csv())?;
    write(&dir, "series.csv", &series)?;
    write(&dir, "report.json", &emit_report(&report)?)?;
    if !run.result.converged {
        return Err(Error::NotConverged {
            iterations: run.result.iterations,
            residual: run.result.residual_max,
        });
    }
    if report.genus_target_ok == Some(false) {
        return Err(Error::Validation(format!(
            "genus {} differs from the target {}",
            report.diagnostics.genus,
            cfg.genus_target.unwrap_or_default()
        )));
    }
    Ok(RunSummary {
        dir,
        files: ["mesh.obj", "history.csv", "series.csv", "report.json"].map(String::from).to_vec(),
    })
}

fn run_verify(cfg: &RunConfig) -> Result<RunSummary> {
    let path = cfg.mesh.as_ref().ok_or_else(|| Error::InvalidParameter("verify needs mesh".into()))?;
    let mesh = load_mesh(path)?;
    let mut diag = diagnose(&mesh, &default_radii(&mesh, cfg.radii))?;
    if cfg.stability {
        diag.stability_lambda_min = Some(jacobi_min_eigenvalue(&mesh, Some(&SymmetryGroup::build(cfg.k)?))?.lambda_min);
    }
    let dir = prepare_dir(cfg)?;
    write(&dir, "series.csv", &diag.monotonicity.series_csv())?;
    let report = VerifyReport {
        schema_version: SCHEMA_VERSION,
        command: Command::Verify,
        config: cfg.clone(),
        expander_residual: expander_residual(&mesh).max,
        diagnostics: diag,
    };
    write(&dir, "report.json", &emit_report(&report)?)?;
    Ok(RunSummary {
        dir,
        files: vec!["series.csv".into(), "report.json".into()],
    })
}

fn run_model(cfg: &RunConfig) -> Result<RunSummary> {
    let chart = harmonic_field(cfg.resolution)?;
    let surface = weierstrass_reconstruct(&chart, cfg.truncation)?;
    let report = ModelRunReport {
        schema_version: SCHEMA_VERSION,
        command: Command::Model,
        config: cfg.clone(),
        model: model_report(&chart, &surface),
    };
    let dir = prepare_dir(cfg)?;
    save_mesh(&surface.mesh, &dir.join("mesh.obj"))?;
    write(&dir, "chart.csv", &chart.to_csv())?;
    write(&dir, "report.json", &emit_report(&report)?)?;
    Ok(RunSummary {
        dir,
        files: vec!["mesh.obj".into(), "chart.csv".into(), "report.json".into()],
    })
}

fn run_csf(cfg: &RunConfig) -> Result<RunSummary> {
    let spec = wiggled_triple(cfg.k, cfg.csf_height, cfg.wiggle, cfg.radius, cfg.csf_points, cfg.eps_star)?;
    let opts = HomotopyOptions {
        t_end: cfg.t_end,
        points: cfg.csf_points,
        eps_star: cfg.eps_star,
        ..HomotopyOptions::default()
    };
    let h = homotopy_to_circles(&spec, cfg.csf_steps, &opts)?;
    let monotone = h.records.windows(2).all(|w| {
        w[0].max_abs_z
            .iter()
            .zip(&w[1].max_abs_z)
            .all(|(a, b)| *b <= *a + 1e-15)
    });
    let last = h.records.last().expect("the homotopy records its start");
    let report = CsfReport {
        schema_version: SCHEMA_VERSION,
        command: Command::Csf,
        config: cfg.clone(),
        steps: cfg.csf_steps,
        final_max_abs_z: last.max_abs_z.clone(),
        final_circle_distance: h.final_curves.iter().map(distance_from_circle).collect(),
        max_abs_z_monotone: monotone,
    };
    let dir = prepare_dir(cfg)?;
    write(&dir, "series.csv", &h.records_csv())?;
    let mut finals = String::new();
    for (i, c) in h.final_curves.iter().enumerate() {
        let _ = writeln!(finals, "# curve {i}");
        finals.push_str(&c.to_csv());
    }
    write(&dir, "final_curves.csv", &finals)?;
    write(&dir, "report.json", &emit_report(&report)?)?;
    Ok(RunSummary {
        dir,
        files: vec!["series.csv".into(), "final_curves.csv".into(), "report.json".into()],
    })
}

fn worker_exe() -> Result<PathBuf> {
    match std::env::var_os(WORKER_EXE_VAR) {
        Some(p) => Ok(PathBuf::from(p)),
        None => std::env::current_exe().map_err(|e| Error::io("current executable", e)),
    }
}

/// One `solve` process per entry of `s_list`, each in its own directory with
/// its own resolved config file.
fn run_sweep(cfg: &RunConfig) -> Result<RunSummary> {
    let dir = prepare_dir(cfg)?;
    let exe = worker_exe()?;
    let workers = if cfg.workers > 0 {
        cfg.workers
    } else {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    };
    let jobs: Vec<(f64, PathBuf)> = cfg
        .s_list
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, dir.join(format!("s{i:02}"))))
        .collect();
    for (s, sub) in &jobs {
        let mut w = cfg.clone();
        w.command = Command::Solve;
        w.s = *s;
        w.out = sub.clone();
        fs::create_dir_all(sub).map_err(|e| Error::io(sub, e))?;
        write(sub, "config.txt", &w.to_kv())?;
    }
    let mut codes = vec![EXIT_INTERNAL; jobs.len()];
    for chunk in (0..jobs.len()).collect::<Vec<_>>().chunks(workers) {
        let children: Vec<(usize, process::Child)> = chunk
            .iter()
            .map(|&j| {
                let sub = &jobs[j].1;
                process::Command::new(&exe)
                    .arg("solve")
                    .arg("--config")
                    .arg(sub.join("config.txt"))
                    .stdout(process::Stdio::null())
                    .stderr(process::Stdio::null())
                    .spawn()
                    .map(|c| (j, c))
                    .map_err(|e| Error::io(&exe, e))
            })
            .collect::<Result<_>>()?;
        for (j, mut child) in children {
            let status = child.wait().map_err(|e| Error::io(&exe, e))?;
            codes[j] = status.code().unwrap_or(EXIT_INTERNAL);
        }
    }
    let runs: Vec<SweepEntry> = jobs
        .iter()
        .zip(&codes)
        .map(|((s, sub), &code)| {
            let rep: Option<SolveReport> = fs::read_to_string(sub.join("report.json"))
                .ok()
                .and_then(|t| serde_json::from_str(&t).ok());
            SweepEntry {
                s: *s,
                exit_code: code,
                genus: rep.as_ref().map(|r| r.diagnostics.genus),
                phi_integral: rep.as_ref().map(|r| r.diagnostics.phi_integral),
                half_total_curvature: rep.as_ref().map(|r| r.diagnostics.gauss_bonnet.lhs),
                residual_max: rep.as_ref().map(|r| r.solve.residual_max),
            }
        })
        .collect();
    let mut csv = String::from("s,exit_code,genus,phi_integral,half_total_curvature,residual_max\n");
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:?}"));
    for r in &runs {
        let _ = writeln!(
            csv,
            "{:?},{},{},{},{},{}",
            r.s,
            r.exit_code,
            r.genus.map_or(String::new(), |g| g.to_string()),
            opt(r.phi_integral),
            opt(r.half_total_curvature),
            opt(r.residual_max)
        );
    }
    write(&dir, "series.csv", &csv)?;
    let report = SweepReport {
        schema_version: SCHEMA_VERSION,
        command: Command::Sweep,
        config: cfg.clone(),
        runs,
    };
    write(&dir, "report.json", &emit_report(&report)?)?;
    if let Some(&worst) = codes.iter().filter(|&&c| c != EXIT_OK).max() {
        return Err(match worst {
            EXIT_NOT_CONVERGED => Error::NotConverged {
                iterations: 0,
                residual: f64::NAN,
            },
            EXIT_VALIDATION => Error::Validation("a sweep worker failed validation".into()),
            _ => Error::Numerical(format!("a sweep worker exited with status {worst}")),
        });
    }
    Ok(RunSummary {
        dir,
        files: vec!["series.csv".into(), "report.json".into()],
    })
}

/// Parse arguments, run, and return the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let outcome = cli.resolve().and_then(|cfg| run(&cfg));
    match outcome {
        Ok(summary) => {
            for f in &summary.files {
                println!("{}", summary.dir.join(f).display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_round_trip() {
        let mut c = RunConfig::new(Command::Solve);
        c.s = 0.025;
        c.genus_target = Some(2);
        c.s_grid = (-1.0, 0.01, 1.0);
        c.mesh = Some("a/b.obj".into());
        let mut back = RunConfig::new(Command::Foliate);
        back.apply_text(&c.to_kv(), Path::new("cfg")).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.txt");
        fs::write(&file, "s = 0.1\nk = 4 # comment\n\nR = 3\n").unwrap();
        let cli = Cli::try_parse_from(["x", "solve", "--config", file.to_str().unwrap(), "--s", "0.2"]).unwrap();
        let c = cli.resolve().unwrap();
        assert_eq!(c.s, 0.2);
        assert_eq!(c.k, 4);
        assert_eq!(c.radius, 3.0);
        assert_eq!(c.eps_hole, 0.04);
    }

    #[test]
    fn negative_grid_bounds_parse() {
        let cli = Cli::try_parse_from(["x", "foliate", "--s-grid", "-1:0.01:1"]).unwrap();
        assert_eq!(cli.resolve().unwrap().s_grid, (-1.0, 0.01, 1.0));
    }

    #[test]
    fn bad_line_reports_its_number() {
        let mut c = RunConfig::new(Command::Solve);
        match c.apply_text("k = 3\nnonsense\n", Path::new("f")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(c.set("colour", "red"), Err(Error::Config(_))));
    }

    #[test]
    fn nonpositive_s_is_rejected_before_solving() {
        let mut c = RunConfig::new(Command::Solve);
        c.s = 0.0;
        let e = c.validate().unwrap_err();
        assert_eq!(exit_code(&e), EXIT_VALIDATION);
        assert!(e.to_string().contains("admissible"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::NotConverged { iterations: 1, residual: 1.0 }), 2);
        assert_eq!(exit_code(&Error::Validation("x".into())), 3);
        assert_eq!(exit_code(&Error::Numerical("x".into())), 4);
        assert_eq!(exit_code(&Error::Config("x".into())), 64);
    }
}
