//! Structural properties of the discretization, checked through the public API.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wgmfem::analysis::identities::{conservation_residual, edge_bound_violation};
use wgmfem::analysis::{error_bundle, inf_sup_witness, triple_bar_norm, ManufacturedSolution, SolutionKind};
use wgmfem::forms::{assemble_system, spmv, SaddleSystem};
use wgmfem::mesh::{generate_perturbed_poly_mesh, generate_uniform_quad_mesh, PolyMesh, Rect};
use wgmfem::solver::{solve, Solution, SolveOptions, SolverMethod};
use wgmfem::space::{FluxField, ScalarField, SpaceOptions, WgSpace};
use wgmfem::Vector;

fn setup(mesh: PolyMesh, k: usize, kind: SolutionKind, rho: f64) -> (WgSpace, SaddleSystem, ManufacturedSolution) {
    let ms = ManufacturedSolution::builtin(kind);
    let space = WgSpace::new(mesh, k, SpaceOptions::default()).unwrap();
    let system = assemble_system(&space, rho, ms.alpha(), &|p| ms.f(p), &|p| ms.g(p)).unwrap();
    (space, system, ms)
}

fn run(system: &SaddleSystem, method: SolverMethod) -> Solution {
    solve(system, &SolveOptions::with_method(method)).unwrap()
}

#[test]
fn direct_and_schur_cg_agree_in_energy_norm() {
    let (space, system, _) = setup(generate_uniform_quad_mesh(8, Rect::unit()).unwrap(), 1, SolutionKind::Sinsin, 1.0);
    let a = run(&system, SolverMethod::Direct);
    let b = run(&system, SolverMethod::SchurCg);
    let diff = FluxField::from_vector(space.dofs(), a.q.values() - b.q.values()).unwrap();
    assert!(triple_bar_norm(&system, &diff) <= 1e-8);
    assert!((a.u.values() - b.u.values()).amax() <= 1e-7);
}

#[test]
fn minres_agrees_with_direct() {
    let (_, system, _) = setup(generate_perturbed_poly_mesh(6, 0.2, 4, Rect::unit()).unwrap(), 0, SolutionKind::PolyCos, 1.0);
    let a = run(&system, SolverMethod::Direct);
    let b = run(&system, SolverMethod::Minres);
    assert!((a.q.values() - b.q.values()).amax() <= 1e-7);
    assert!((a.u.values() - b.u.values()).amax() <= 1e-7);
}

#[test]
fn residual_contract_holds_for_every_method() {
    let (_, system, _) = setup(generate_perturbed_poly_mesh(5, 0.2, 9, Rect::unit()).unwrap(), 1, SolutionKind::SinsinVariable, 1.0);
    let scale = system.g.norm() + system.f.norm() + 1.0;
    for method in [SolverMethod::Direct, SolverMethod::SchurCg, SolverMethod::Minres] {
        let s = run(&system, method);
        let (rq, ru) = system.residuals(s.q.values(), s.u.values());
        assert!(rq <= 1e-10 * scale && ru <= 1e-10 * scale, "{method}: {rq:.2e} {ru:.2e}");
        assert!((s.flux_residual - rq).abs() <= 1e-12 * scale);
    }
}

#[test]
fn local_conservation_on_polygons() {
    for k in 0..=2 {
        let (space, system, ms) =
            setup(generate_perturbed_poly_mesh(8, 0.2, 21, Rect::unit()).unwrap(), k, SolutionKind::PolyCos, 1.0);
        let s = run(&system, SolverMethod::Direct);
        assert!(conservation_residual(&space, &s, |p| ms.f(p)) <= 1e-11, "k = {k}");
    }
}

#[test]
fn polynomial_data_is_exact_for_every_rho() {
    let mesh = generate_perturbed_poly_mesh(5, 0.2, 13, Rect::unit()).unwrap();
    for rho in [0.5, 1.0, 4.0] {
        let (space, system, ms) = setup(mesh.clone(), 0, SolutionKind::Affine, rho);
        let s = run(&system, SolverMethod::Auto);
        let e = error_bundle(&space, &system, &s, &ms).unwrap();
        assert!(e.max_error() <= 1e-9, "rho = {rho}: {e:?}");
    }
}

#[test]
fn flipping_all_normals_negates_edge_coefficients_only() {
    let mesh = generate_perturbed_poly_mesh(6, 0.2, 3, Rect::unit()).unwrap();
    for k in 0..=1 {
        let (_, sys_a, _) = setup(mesh.clone(), k, SolutionKind::SinsinVariable, 1.0);
        let (_, sys_b, _) = setup(mesh.with_all_normals_flipped(), k, SolutionKind::SinsinVariable, 1.0);
        let (a, b) = (run(&sys_a, SolverMethod::Direct), run(&sys_b, SolverMethod::Direct));
        let dofs = sys_a.dofs;
        for c in 0..mesh.num_cells() {
            for (x, y) in a.q.interior(c).iter().zip(b.q.interior(c)) {
                assert!((x - y).abs() <= 1e-10);
            }
        }
        for e in 0..dofs.num_edges {
            for (x, y) in a.q.edge(e).iter().zip(b.q.edge(e)) {
                assert!((x + y).abs() <= 1e-10);
            }
        }
        assert!((a.u.values() - b.u.values()).amax() <= 1e-10);
    }
}

#[test]
fn flipping_one_normal_flips_the_witness_there() {
    let mesh = generate_perturbed_poly_mesh(4, 0.2, 8, Rect::unit()).unwrap();
    let edge = mesh.num_edges() / 2;
    let (space_a, sys_a, _) = setup(mesh.clone(), 1, SolutionKind::Sinsin, 1.0);
    let (space_b, sys_b, _) = setup(mesh.with_flipped_normals(&[edge]), 1, SolutionKind::Sinsin, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let phi = DVector::from_fn(space_a.dofs().num_scalar(), |_, _| rng.random::<f64>() - 0.5);
    let phi = ScalarField::from_vector(space_a.dofs(), phi).unwrap();
    let (va, vb) = (inf_sup_witness(&space_a, &phi), inf_sup_witness(&space_b, &phi));
    for e in 0..mesh.num_edges() {
        let sign = if e == edge { -1.0 } else { 1.0 };
        for (x, y) in va.edge(e).iter().zip(vb.edge(e)) {
            assert!((x - sign * y).abs() <= 1e-12);
        }
    }
    let ba = phi.values().dot(&spmv(&sys_a.b, va.values()));
    let bb = phi.values().dot(&spmv(&sys_b.b, vb.values()));
    assert!((ba - bb).abs() <= 1e-11 * ba.abs());
}

#[test]
fn stabilized_form_is_positive_definite() {
    for (mesh, k) in [
        (generate_uniform_quad_mesh(2, Rect::unit()).unwrap(), 0),
        (generate_perturbed_poly_mesh(3, 0.2, 5, Rect::unit()).unwrap(), 1),
        (generate_perturbed_poly_mesh(2, 0.2, 6, Rect::unit()).unwrap(), 2),
    ] {
        let (_, system, _) = setup(mesh, k, SolutionKind::SinsinVariable, 1.0);
        let n = system.num_flux();
        let mut dense = DMatrix::zeros(n, n);
        for (i, j, v) in system.a_s.triplet_iter() {
            dense[(i, j)] = *v;
        }
        assert!(system.asymmetry() <= 1e-12);
        let min = dense.symmetric_eigenvalues().min();
        assert!(min > 1e-8, "k = {k}: smallest eigenvalue {min:.3e}");
    }
}

#[test]
fn edge_projection_bound_holds_under_refinement() {
    let q = |p: wgmfem::Point| Vector::new(p.x.exp(), p.y.sin());
    for n in [4, 8, 16] {
        for k in 0..=1 {
            let space =
                WgSpace::new(generate_perturbed_poly_mesh(n, 0.2, 2, Rect::unit()).unwrap(), k, SpaceOptions::default()).unwrap();
            assert!(edge_bound_violation(&space, &q) <= 1e-12, "n = {n}, k = {k}");
        }
    }
}

#[test]
fn affine_data_is_exact_on_a_nonconvex_pentagon() {
    let vertices = [(0.0, 0.0), (0.6, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.6, 0.4)];
    let mesh = PolyMesh::new(
        vertices.iter().map(|&(x, y)| wgmfem::Point::new(x, y)).collect(),
        vec![vec![0, 1, 5, 3, 4], vec![1, 2, 3, 5]],
    )
    .unwrap();
    for k in 0..=3 {
        let (space, system, ms) = setup(mesh.clone(), k, SolutionKind::Affine, 1.0);
        let s = run(&system, SolverMethod::Direct);
        assert!(error_bundle(&space, &system, &s, &ms).unwrap().max_error() <= 1e-9, "k = {k}");
    }
}
