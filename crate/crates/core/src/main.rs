use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wgmfem::analysis::SolutionKind;
use wgmfem::cli::{self, exit, AlphaChoice, Command, Generator, RunConfig};
use wgmfem::solver::SolverMethod;

/// Weak Galerkin mixed finite elements on polygonal meshes.
#[derive(Parser, Debug)]
#[command(name = "wgmfem", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Solve one manufactured problem and report its errors.
    Solve(Flags),
    /// Run a refinement study and compare observed with theoretical rates.
    Converge(Flags),
    /// Print shape-regularity diagnostics of a mesh.
    CheckMesh(Flags),
    /// Evaluate the discrete identities and report their residuals.
    CheckIdentities(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// TOML file with run settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Mesh file (JSON); replaces the generator.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Mesh generator: uniform or perturbed.
    #[arg(long = "gen", alias = "generator")]
    generator: Option<Generator>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n0: Option<usize>,
    #[arg(long)]
    jitter: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Polynomial degree k (0..=3).
    #[arg(long)]
    k: Option<usize>,
    /// Stabilization parameter.
    #[arg(long)]
    rho: Option<f64>,
    /// Coefficient: identity or variable.
    #[arg(long)]
    alpha: Option<AlphaChoice>,
    /// affine, sinsin, sinsin-variable, poly-cos or zero.
    #[arg(long)]
    solution: Option<SolutionKind>,
    #[arg(long)]
    levels: Option<usize>,
    /// auto, direct, schur-cg or minres.
    #[arg(long)]
    method: Option<SolverMethod>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    rate_tol: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Directory for output artifacts.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Directory for a triplet dump of the assembled system.
    #[arg(long)]
    dump_system: Option<PathBuf>,
}

impl Flags {
    fn into_config(self, command: Command) -> wgmfem::Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        c.command = command;
        macro_rules! apply {
            ($($field:ident),*) => { $(if let Some(v) = self.$field { c.$field = v; })* };
        }
        apply!(generator, n, n0, jitter, seed, k, rho, solution, levels, method, tol, max_iter, samples);
        if self.mesh.is_some() {
            c.mesh = self.mesh;
        }
        if self.alpha.is_some() {
            c.alpha = self.alpha;
        }
        if self.rate_tol.is_some() {
            c.rate_tol = self.rate_tol;
        }
        if self.output.is_some() {
            c.output = self.output;
        }
        if self.dump_system.is_some() {
            c.dump_system = self.dump_system;
        }
        Ok(c)
    }
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let (command, flags) = match args.command {
        Sub::Solve(f) => (Command::Solve, f),
        Sub::Converge(f) => (Command::Converge, f),
        Sub::CheckMesh(f) => (Command::CheckMesh, f),
        Sub::CheckIdentities(f) => (Command::CheckIdentities, f),
    };
    let result = cli::init_threads()
        .and_then(|_| flags.into_config(command))
        .and_then(|config| cli::run(&config, &mut std::io::stdout().lock()));
    let status = match result {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {e}");
            cli::exit_status(&e)
        }
    };
    if status == exit::THRESHOLD {
        eprintln!("one or more asserted thresholds failed");
    }
    ExitCode::from(status as u8)
}
