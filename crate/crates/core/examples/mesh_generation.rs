//! Generates uniform and perturbed polygonal meshes, checks their shape
//! regularity and writes one to JSON.

use wgmfem::mesh::{check_regularity, generate_perturbed_poly_mesh, generate_uniform_quad_mesh, read_mesh, write_mesh, Rect};

fn main() -> wgmfem::Result<()> {
    let uniform = generate_uniform_quad_mesh(4, Rect::unit())?;
    println!("uniform: {} cells, {} edges, h = {:.4}", uniform.num_cells(), uniform.num_edges(), uniform.mesh_size());

    let mesh = generate_perturbed_poly_mesh(8, 0.2, 7, Rect::new(0.0, 0.0, 2.0, 1.0))?;
    let sides: Vec<usize> = (0..mesh.num_cells()).map(|c| mesh.cells()[c].len()).collect();
    println!(
        "perturbed: {} cells with {} to {} sides, {} boundary edges",
        mesh.num_cells(),
        sides.iter().min().unwrap(),
        sides.iter().max().unwrap(),
        mesh.boundary_edges().len()
    );

    let report = check_regularity(&mesh)?;
    println!("area ratio in [{:.3}, {:.3}]", report.min_area_ratio, report.max_area_ratio);
    println!("min edge length ratio {:.3}", report.min_length_ratio);
    println!("all cells star-shaped: {}", report.all_star_shaped);

    let path = std::env::temp_dir().join("wgmfem_example_mesh.json");
    write_mesh(&mesh, &path)?;
    let back = read_mesh(&path)?;
    println!("round trip through {}: {} cells", path.display(), back.num_cells());
    Ok(())
}
