//! Solves a problem with a variable coefficient on a polygonal mesh and
//! reports the discrete errors.

use wgmfem::analysis::{error_bundle, ManufacturedSolution, SolutionKind};
use wgmfem::forms::assemble_system;
use wgmfem::mesh::{generate_perturbed_poly_mesh, PolyMesh, Rect};
use wgmfem::solver::{solve, SolveOptions};
use wgmfem::space::{SpaceOptions, WgSpace};

fn main() -> wgmfem::Result<()> {
    let ms = ManufacturedSolution::builtin(SolutionKind::SinsinVariable);
    let mesh = generate_perturbed_poly_mesh(16, 0.2, 11, Rect::unit())?;
    let space = WgSpace::new(mesh, 1, SpaceOptions::default())?;
    let system = assemble_system(&space, 1.0, ms.alpha(), &|p| ms.f(p), &|p| ms.g(p))?;
    println!("system: {} flux and {} scalar unknowns, {} nonzeros in A_s", system.num_flux(), system.num_scalar(), system.a_s.nnz());

    let solution = solve(&system, &SolveOptions::default())?;
    println!(
        "{} solve in {:.3}s, residuals {:.1e} / {:.1e}",
        solution.method,
        solution.wall_time.as_secs_f64(),
        solution.flux_residual,
        solution.scalar_residual
    );
    let e = error_bundle(&space, &system, &solution, &ms)?;
    println!("h = {:.4}", e.h);
    println!("energy error of q:      {:.3e}", e.triple_bar_q);
    println!("discrete H1 error of u: {:.3e}", e.h1h_u);
    println!("L2 error of u:          {:.3e}", e.l2_u);

    // A pentagon with a reflex vertex next to a quadrilateral; affine data is reproduced exactly.
    let vertices = [(0.0, 0.0), (0.6, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.6, 0.4)];
    let mesh = PolyMesh::new(
        vertices.iter().map(|&(x, y)| wgmfem::Point::new(x, y)).collect(),
        vec![vec![0, 1, 5, 3, 4], vec![1, 2, 3, 5]],
    )?;
    let affine = ManufacturedSolution::builtin(SolutionKind::Affine);
    for k in 0..=2 {
        let space = WgSpace::new(mesh.clone(), k, SpaceOptions::default())?;
        let system = assemble_system(&space, 1.0, affine.alpha(), &|p| affine.f(p), &|p| affine.g(p))?;
        let solution = solve(&system, &SolveOptions::default())?;
        println!("pentagon mesh, k = {k}: largest error {:.1e}", error_bundle(&space, &system, &solution, &affine)?.max_error());
    }
    Ok(())
}
