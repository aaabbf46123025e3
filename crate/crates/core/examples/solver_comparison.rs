//! Solves one saddle-point system with every solver and compares results.

use wgmfem::analysis::{triple_bar_norm, ManufacturedSolution, SolutionKind};
use wgmfem::forms::assemble_system;
use wgmfem::mesh::{generate_uniform_quad_mesh, Rect};
use wgmfem::solver::{solve, SolveOptions, SolverMethod};
use wgmfem::space::{FluxField, SpaceOptions, WgSpace};

fn main() -> wgmfem::Result<()> {
    let ms = ManufacturedSolution::builtin(SolutionKind::PolyCos);
    let space = WgSpace::new(generate_uniform_quad_mesh(16, Rect::unit())?, 1, SpaceOptions::default())?;
    let system = assemble_system(&space, 1.0, ms.alpha(), &|p| ms.f(p), &|p| ms.g(p))?;
    let reference = solve(&system, &SolveOptions::with_method(SolverMethod::Direct))?;
    for method in [SolverMethod::Direct, SolverMethod::SchurCg, SolverMethod::Minres] {
        let s = solve(&system, &SolveOptions::with_method(method))?;
        let diff = FluxField::from_vector(space.dofs(), s.q.values() - reference.q.values())?;
        println!(
            "{method:<8} {:>5} iterations {:>8.3}s  residuals {:.1e} / {:.1e}  gap to direct {:.1e}",
            s.iterations,
            s.wall_time.as_secs_f64(),
            s.flux_residual,
            s.scalar_residual,
            triple_bar_norm(&system, &diff)
        );
    }
    Ok(())
}
