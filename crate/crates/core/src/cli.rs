//! Run configuration and the command driver behind the `wgmfem` binary.
//!
//! A [`RunConfig`] can be read from a TOML file whose keys are the field
//! names below; command-line flags override file values.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    check_identities, error_bundle, run_convergence, ConvergenceStudy, ErrorBundle, IdentityData, IdentityOptions,
    ManufacturedSolution, MeshFamily, SolutionKind,
};
use crate::forms::assemble_system;
use crate::mesh::{check_regularity, read_mesh, PolyMesh, Rect};
use crate::solver::{solve, SolveOptions, SolverMethod};
use crate::space::{SpaceOptions, WgSpace};
use crate::{Error, Result};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "WGMFEM_THREADS";

/// Exit statuses of the driver.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const NONCONVERGENCE: i32 = 3;
    pub const THRESHOLD: i32 = 4;
}

macro_rules! named_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(Error::InvalidArgument(format!(
                        concat!("unknown ", stringify!($name), " '{}' (expected one of: {})"),
                        other,
                        [$($text),+].join(", ")
                    ))),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.pad(match self { $($name::$variant => $text),+ })
            }
        }
    };
}

named_enum!(Command {
    Solve => "solve",
    Converge => "converge",
    CheckMesh => "check-mesh",
    CheckIdentities => "check-identities",
});

named_enum!(
    /// Mesh generator.
    Generator {
        Uniform => "uniform",
        Perturbed => "perturbed",
    }
);

named_enum!(
    /// Diffusion coefficient.
    AlphaChoice {
        Identity => "identity",
        Variable => "variable",
    }
);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    /// Mesh file; overrides the generator when present.
    pub mesh: Option<PathBuf>,
    pub generator: Generator,
    /// Cells per direction for single-mesh commands.
    pub n: usize,
    /// Cells per direction on the coarsest level of `converge`.
    pub n0: usize,
    pub jitter: f64,
    pub seed: u64,
    pub k: usize,
    pub rho: f64,
    /// Defaults to the coefficient the solution is defined with.
    pub alpha: Option<AlphaChoice>,
    pub solution: SolutionKind,
    pub levels: usize,
    pub method: SolverMethod,
    pub tol: f64,
    pub max_iter: usize,
    /// Rate tolerance for `converge`; 0.15 on uniform and 0.2 on perturbed meshes by default.
    pub rate_tol: Option<f64>,
    /// Random samples for `check-identities`.
    pub samples: usize,
    /// Output directory for artifacts.
    pub output: Option<PathBuf>,
    /// Directory for a triplet dump of the assembled system (`solve`).
    pub dump_system: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver = SolveOptions::default();
        RunConfig {
            command: Command::Solve,
            mesh: None,
            generator: Generator::Uniform,
            n: 8,
            n0: 4,
            jitter: 0.2,
            seed: 0,
            k: 0,
            rho: 1.0,
            alpha: None,
            solution: SolutionKind::Sinsin,
            levels: 4,
            method: solver.method,
            tol: solver.tolerance,
            max_iter: solver.max_iterations,
            rate_tol: None,
            samples: 20,
            output: None,
            dump_system: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn solver_options(&self) -> SolveOptions {
        SolveOptions { method: self.method, tolerance: self.tol, max_iterations: self.max_iter }
    }

    /// The manufactured solution after applying the `alpha` choice.
    pub fn effective_solution(&self) -> Result<SolutionKind> {
        use SolutionKind::*;
        match (self.solution, self.alpha) {
            (kind, None) => Ok(kind),
            (Sinsin, Some(AlphaChoice::Variable)) | (SinsinVariable, Some(AlphaChoice::Variable)) => Ok(SinsinVariable),
            (SinsinVariable, Some(AlphaChoice::Identity)) => Ok(Sinsin),
            (kind, Some(AlphaChoice::Identity)) => Ok(kind),
            (kind, Some(AlphaChoice::Variable)) => Err(Error::InvalidArgument(format!(
                "solution '{kind}' is only defined with alpha = identity"
            ))),
        }
    }

    pub fn family(&self) -> MeshFamily {
        match self.generator {
            Generator::Uniform => MeshFamily::Uniform,
            Generator::Perturbed => MeshFamily::Perturbed { jitter: self.jitter, seed: self.seed },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k > 3 {
            return Err(Error::InvalidArgument(format!("k must be in 0..=3, got {}", self.k)));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidArgument(format!("rho must be positive, got {}", self.rho)));
        }
        if self.command == Command::Converge {
            if self.levels < 2 {
                return Err(Error::InvalidArgument(format!("converge needs at least 2 levels, got {}", self.levels)));
            }
            if self.mesh.is_some() {
                return Err(Error::InvalidArgument("converge refines generated meshes; --mesh is not accepted".into()));
            }
        }
        if self.n == 0 || self.n0 == 0 {
            return Err(Error::InvalidArgument("mesh sizes n and n0 must be positive".into()));
        }
        if self.samples == 0 {
            return Err(Error::InvalidArgument("samples must be positive".into()));
        }
        self.effective_solution()?;
        self.solver_options().validate()?;
        for dir in [&self.output, &self.dump_system].into_iter().flatten() {
            std::fs::create_dir_all(dir).map_err(|e| {
                Error::InvalidArgument(format!("output directory {} is not writable: {e}", dir.display()))
            })?;
        }
        Ok(())
    }

    fn single_mesh(&self) -> Result<PolyMesh> {
        match &self.mesh {
            Some(path) => read_mesh(path),
            None => self.family().generate(self.n, Rect::unit()),
        }
    }
}

/// Maps an error to the driver's exit status.
pub fn exit_status(error: &Error) -> i32 {
    match error {
        Error::InvalidArgument(_) | Error::Parse { .. } | Error::MeshInvalid(_) | Error::Capability(_) => exit::USAGE,
        Error::NonConvergence { .. } => exit::NONCONVERGENCE,
        _ => exit::FAILURE,
    }
}

/// Applies the thread cap from [`THREADS_ENV`], if set.
pub fn init_threads() -> Result<()> {
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let n: usize = value
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidArgument(format!("{THREADS_ENV} must be a positive integer, got '{value}'")))?;
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn write_json(dir: &Option<PathBuf>, name: &str, value: &impl Serialize) -> Result<()> {
    if let Some(dir) = dir {
        let text = serde_json::to_string_pretty(value).expect("serializable");
        std::fs::write(dir.join(name), text + "\n")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SolutionFile<'a> {
    solution: &'a str,
    k: usize,
    rho: f64,
    num_cells: usize,
    num_edges: usize,
    method: String,
    iterations: usize,
    wall_time_seconds: f64,
    flux_residual: f64,
    scalar_residual: f64,
    q: &'a [f64],
    u: &'a [f64],
    errors: ErrorBundle,
}

/// Threshold used by `solve` for solutions the scheme reproduces exactly.
pub const EXACT_SOLUTION_TOLERANCE: f64 = 1e-9;

/// Executes a configuration, printing a report to `out`; returns the exit status.
pub fn run(config: &RunConfig, out: &mut impl Write) -> Result<i32> {
    config.validate()?;
    match config.command {
        Command::Solve => run_solve(config, out),
        Command::Converge => run_converge(config, out),
        Command::CheckMesh => run_check_mesh(config, out),
        Command::CheckIdentities => run_check_identities(config, out),
    }
}

fn run_solve(config: &RunConfig, out: &mut impl Write) -> Result<i32> {
    let kind = config.effective_solution()?;
    let ms = ManufacturedSolution::builtin(kind);
    let mesh = config.single_mesh()?;
    let space = WgSpace::new(mesh, config.k, SpaceOptions::default())?;
    let system = assemble_system(&space, config.rho, ms.alpha(), &|p| ms.f(p), &|p| ms.g(p))?;
    if let Some(dir) = &config.dump_system {
        system.dump(dir)?;
    }
    let solution = solve(&system, &config.solver_options())?;
    let errors = error_bundle(&space, &system, &solution, &ms)?;
    writeln!(out, "solution {kind}, k = {}, rho = {}, cells = {}", config.k, config.rho, space.mesh().num_cells())?;
    writeln!(
        out,
        "solver {} ({} iterations, {:.3} s), residuals {:.3e} / {:.3e}",
        solution.method,
        solution.iterations,
        solution.wall_time.as_secs_f64(),
        solution.flux_residual,
        solution.scalar_residual
    )?;
    writeln!(
        out,
        "h = {:.6e}  |||q_h - Q_h q||| = {:.6e}  ||u_h - Q u||_1,h = {:.6e}  ||u_h - Q u|| = {:.6e}  ||q_0 - Q_0 q|| = {:.6e}",
        errors.h, errors.triple_bar_q, errors.h1h_u, errors.l2_u, errors.l2_q0
    )?;
    write_json(
        &config.output,
        "solution.json",
        &SolutionFile {
            solution: kind.name(),
            k: config.k,
            rho: config.rho,
            num_cells: space.mesh().num_cells(),
            num_edges: space.mesh().num_edges(),
            method: solution.method.to_string(),
            iterations: solution.iterations,
            wall_time_seconds: solution.wall_time.as_secs_f64(),
            flux_residual: solution.flux_residual,
            scalar_residual: solution.scalar_residual,
            q: solution.q.values().as_slice(),
            u: solution.u.values().as_slice(),
            errors,
        },
    )?;
    write_json(&config.output, "errors.json", &errors)?;
    if matches!(kind, SolutionKind::Affine | SolutionKind::Zero) {
        let passed = errors.max_error() <= EXACT_SOLUTION_TOLERANCE;
        writeln!(out, "exactness (all errors <= {EXACT_SOLUTION_TOLERANCE:e}): {}", if passed { "PASS" } else { "FAIL" })?;
        if !passed {
            return Ok(exit::THRESHOLD);
        }
    }
    Ok(exit::OK)
}

fn run_converge(config: &RunConfig, out: &mut impl Write) -> Result<i32> {
    let kind = config.effective_solution()?;
    let study = ConvergenceStudy {
        family: config.family(),
        domain: Rect::unit(),
        n0: config.n0,
        levels: config.levels,
        degree: config.k,
        rho: config.rho,
        solution: kind,
        solver: config.solver_options(),
    };
    let report = run_convergence(&study)?;
    let tolerance = config.rate_tol.unwrap_or(match config.generator {
        Generator::Uniform => 0.15,
        Generator::Perturbed => 0.2,
    });
    writeln!(out, "convergence: solution {kind}, k = {}, rho = {}, mesh {}", config.k, config.rho, config.generator)?;
    write!(out, "{}", report.to_csv_string())?;
    let checks = report.check(tolerance);
    for c in &checks {
        let status = match (c.asserted, c.passed) {
            (false, _) => "not asserted (non-convex domain)",
            (true, true) => "PASS",
            (true, false) => "FAIL",
        };
        writeln!(out, "rate {}: observed {} vs theoretical {} (tolerance {}): {status}", c.quantity, c.observed, c.target, c.tolerance)?;
    }
    if let Some(dir) = &config.output {
        std::fs::write(dir.join("convergence.csv"), report.to_csv_string())?;
        std::fs::write(dir.join("summary.json"), report.to_json() + "\n")?;
    }
    Ok(if report.passed(tolerance) { exit::OK } else { exit::THRESHOLD })
}

fn run_check_mesh(config: &RunConfig, out: &mut impl Write) -> Result<i32> {
    let mesh = config.single_mesh()?;
    let report = check_regularity(&mesh)?;
    writeln!(out, "cells {}, edges {}, vertices {}, h = {:.6e}", mesh.num_cells(), mesh.num_edges(), mesh.num_vertices(), mesh.mesh_size())?;
    writeln!(out, "area ratio |T| / h_T^2: min {:.6e}, max {:.6e}", report.min_area_ratio, report.max_area_ratio)?;
    writeln!(out, "edge length ratio |e| / h_T: min {:.6e}", report.min_length_ratio)?;
    writeln!(out, "diameter ratio h_e / h_T: min {:.6e}, max {:.6e}", report.min_diameter_ratio, report.max_diameter_ratio)?;
    writeln!(out, "pyramid height ratio: min {:.6e}", report.min_height_ratio)?;
    writeln!(out, "max apex angle: {:.6e} rad", report.max_apex_angle)?;
    writeln!(out, "domain convex: {}", mesh.is_domain_convex())?;
    writeln!(out, "star_shaped all: {}", report.all_star_shaped)?;
    write_json(&config.output, "regularity.json", &report)?;
    Ok(if report.all_star_shaped { exit::OK } else { exit::THRESHOLD })
}

fn run_check_identities(config: &RunConfig, out: &mut impl Write) -> Result<i32> {
    let kind = config.effective_solution()?;
    let mesh = config.single_mesh()?;
    let data = IdentityData::standard(ManufacturedSolution::builtin(kind));
    let options = IdentityOptions {
        rho: config.rho,
        samples: config.samples,
        seed: config.seed,
        solver: config.solver_options(),
        ..Default::default()
    };
    let report = check_identities(&mesh, config.k, &data, &options)?;
    writeln!(out, "identities: k = {}, cells = {}", report.degree, report.num_cells)?;
    for item in &report.items {
        writeln!(
            out,
            "{:<26} max residual {:.3e}  threshold {:.1e}  {}",
            item.name,
            item.max_residual,
            item.threshold,
            if item.passed { "PASS" } else { "FAIL" }
        )?;
    }
    writeln!(
        out,
        "witness norm ratio |||v||| / ||phi||_1,h: min {:.6e}, max {:.6e}",
        report.witness.min_ratio, report.witness.max_ratio
    )?;
    write_json(&config.output, "identities.json", &report)?;
    Ok(if report.all_passed() { exit::OK } else { exit::THRESHOLD })
}
