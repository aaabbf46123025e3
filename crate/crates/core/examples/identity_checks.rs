//! Evaluates the discrete identities of the scheme on a polygonal mesh.

use wgmfem::analysis::{check_identities, IdentityData, IdentityOptions, ManufacturedSolution, SolutionKind};
use wgmfem::mesh::{generate_perturbed_poly_mesh, Rect};

fn main() -> wgmfem::Result<()> {
    let mesh = generate_perturbed_poly_mesh(8, 0.2, 5, Rect::unit())?;
    let data = IdentityData::standard(ManufacturedSolution::builtin(SolutionKind::Sinsin));
    for k in 0..=2 {
        let report = check_identities(&mesh, k, &data, &IdentityOptions::default())?;
        println!("k = {k}");
        for item in &report.items {
            println!("  {:<26} {:.2e} (threshold {:.0e})", item.name, item.max_residual, item.threshold);
        }
        println!("  witness norm ratio in [{:.3}, {:.3}]", report.witness.min_ratio, report.witness.max_ratio);
    }
    Ok(())
}
