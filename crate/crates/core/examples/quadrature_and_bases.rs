//! Integrates polynomials exactly on a polygon and builds the orthonormal
//! local bases used by the discretization.

use wgmfem::basis::{build_element_basis, BasisOptions};
use wgmfem::mesh::{generate_perturbed_poly_mesh, Rect};
use wgmfem::quadrature::{cell_quadrature, edge_quadrature};

fn main() -> wgmfem::Result<()> {
    let mesh = generate_perturbed_poly_mesh(3, 0.2, 1, Rect::unit())?;
    let cell = 4;
    let rule = cell_quadrature(&mesh, cell, 6)?;
    println!("cell {cell}: {} points, weight sum {:.15} (area {:.15})", rule.len(), rule.total_weight(), mesh.cell_area(cell));
    println!("integral of x^3 y^2: {:.15}", rule.integrate(|p| p.x.powi(3) * p.y.powi(2)));

    let edge = mesh.cell_edges(cell)[0];
    let segment = edge_quadrature(&mesh, edge, 4)?;
    println!("edge {edge}: length {:.15}, quadrature {:.15}", mesh.edge_length(edge), segment.total_weight());

    for k in 0..=3 {
        let basis = build_element_basis(&mesh, cell, k, BasisOptions::default())?;
        let mass = basis.scalar.mass_matrix(&cell_quadrature(&mesh, cell, 2 * k + 4)?);
        let n = mass.nrows();
        let deviation = (mass - nalgebra::DMatrix::<f64>::identity(n, n)).amax();
        println!("k = {k}: {} vector and {n} scalar functions, scalar mass deviates from identity by {deviation:.1e}", basis.vector_len());
    }
    Ok(())
}
