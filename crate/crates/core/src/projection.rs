//! Local `L2` projections of pointwise-evaluable fields.
//!
//! * `Q_0`: cellwise onto `[P_k(T)]^2`,
//! * `Q_b`: edgewise onto `P_k(e)`, applied to the normal component `q . n_e`,
//! * `Q_h = {Q_0 q, Q_b(q . n_e) n_e}`,
//! * the scalar projection onto `W_h`, cellwise onto `P_{k+1}(T)`.
//!
//! All integrals use the space's quadrature rules, so projections are exact
//! (to round-off) for polynomial data the rules integrate exactly.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::space::{FluxField, ScalarField, WgSpace};
use crate::{Point, Vector};

fn solve_spd(mass: &DMatrix<f64>, rhs: DVector<f64>) -> DVector<f64> {
    mass.clone()
        .cholesky()
        .expect("mass matrix of a valid cell is positive definite")
        .solve(&rhs)
}

/// `Q_0 q` on one cell: `[x-coefficients, y-coefficients]`.
pub fn project_q0_cell(space: &WgSpace, cell: usize, q: &(impl Fn(Point) -> Vector + Sync)) -> DVector<f64> {
    let data = space.cell(cell);
    let n = data.basis.flux.len();
    let mut bx = DVector::zeros(n);
    let mut by = DVector::zeros(n);
    for (j, (p, w)) in data.rule.points.iter().zip(&data.rule.weights).enumerate() {
        let v = q(*p);
        let col = data.flux_values.column(j);
        bx.axpy(w * v.x, &col, 1.0);
        by.axpy(w * v.y, &col, 1.0);
    }
    let chol = data.flux_mass.clone().cholesky().expect("flux mass matrix is positive definite");
    let cx = chol.solve(&bx);
    let cy = chol.solve(&by);
    let mut out = DVector::zeros(2 * n);
    out.rows_mut(0, n).copy_from(&cx);
    out.rows_mut(n, n).copy_from(&cy);
    out
}

pub fn project_q0(space: &WgSpace, q: &(impl Fn(Point) -> Vector + Sync)) -> Vec<DVector<f64>> {
    (0..space.mesh().num_cells()).into_par_iter().map(|c| project_q0_cell(space, c, q)).collect()
}

/// `Q_b` of a scalar function on one edge; the edge basis is orthonormal.
pub fn project_edge_scalar(space: &WgSpace, edge: usize, f: impl Fn(Point) -> f64) -> DVector<f64> {
    let data = space.edge(edge);
    let mut out = DVector::zeros(data.basis.len());
    for (j, (p, w)) in data.rule.points.iter().zip(&data.rule.weights).enumerate() {
        out.axpy(w * f(*p), &data.values.column(j), 1.0);
    }
    out
}

/// `Q_b(q . n_e)` on every edge.
pub fn project_qb(space: &WgSpace, q: &(impl Fn(Point) -> Vector + Sync)) -> Vec<DVector<f64>> {
    (0..space.mesh().num_edges())
        .into_par_iter()
        .map(|e| {
            let n = space.mesh().edges()[e].normal;
            project_edge_scalar(space, e, |p| q(p).dot(&n))
        })
        .collect()
}

/// `Q_h q`.
pub fn project_qh(space: &WgSpace, q: &(impl Fn(Point) -> Vector + Sync)) -> FluxField {
    let mut out = FluxField::zeros(space.dofs());
    for (c, coeffs) in project_q0(space, q).into_iter().enumerate() {
        out.interior_mut(c).copy_from_slice(coeffs.as_slice());
    }
    for (e, coeffs) in project_qb(space, q).into_iter().enumerate() {
        out.edge_mut(e).copy_from_slice(coeffs.as_slice());
    }
    out
}

pub fn project_scalar_cell(space: &WgSpace, cell: usize, u: &(impl Fn(Point) -> f64 + Sync)) -> DVector<f64> {
    let data = space.cell(cell);
    let mut b = DVector::zeros(data.basis.scalar.len());
    for (j, (p, w)) in data.rule.points.iter().zip(&data.rule.weights).enumerate() {
        b.axpy(w * u(*p), &data.scalar_values.column(j), 1.0);
    }
    solve_spd(&data.scalar_mass, b)
}

/// Projection onto `W_h`.
pub fn project_scalar(space: &WgSpace, u: &(impl Fn(Point) -> f64 + Sync)) -> ScalarField {
    let blocks: Vec<DVector<f64>> =
        (0..space.mesh().num_cells()).into_par_iter().map(|c| project_scalar_cell(space, c, u)).collect();
    let mut out = ScalarField::zeros(space.dofs());
    for (c, coeffs) in blocks.into_iter().enumerate() {
        out.cell_mut(c).copy_from_slice(coeffs.as_slice());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_perturbed_poly_mesh, generate_uniform_quad_mesh, Rect};
    use crate::space::SpaceOptions;

    fn unit_cell(k: usize) -> WgSpace {
        WgSpace::new(generate_uniform_quad_mesh(1, Rect::unit()).unwrap(), k, SpaceOptions::default()).unwrap()
    }

    #[test]
    fn constants_are_reproduced() {
        let mesh = generate_perturbed_poly_mesh(3, 0.2, 2, Rect::unit()).unwrap();
        let space = WgSpace::new(mesh, 0, SpaceOptions::default()).unwrap();
        let q = |_: Point| Vector::new(1.0, 0.0);
        let f = project_qh(&space, &q);
        for c in 0..space.mesh().num_cells() {
            let v = f.interior_value(&space, c, space.cell(c).geometry.centroid);
            assert!((v - Vector::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn affine_vectors_are_reproduced_for_k1() {
        let mesh = generate_perturbed_poly_mesh(3, 0.2, 2, Rect::unit()).unwrap();
        let space = WgSpace::new(mesh, 1, SpaceOptions::default()).unwrap();
        let q = |p: Point| Vector::new(p.x, p.y);
        let f = project_qh(&space, &q);
        for c in 0..space.mesh().num_cells() {
            for p in &space.cell(c).rule.points {
                assert!((f.interior_value(&space, c, *p) - q(*p)).norm() < 1e-12);
            }
        }
        // edge traces: Q_b(q . n_e) evaluated back on the edge
        for e in 0..space.mesh().num_edges() {
            let data = space.edge(e);
            let n = space.mesh().edges()[e].normal;
            for (j, p) in data.rule.points.iter().enumerate() {
                let v = data.values.column(j).dot(&DVector::from_column_slice(f.edge(e)));
                assert!((v - q(*p).dot(&n)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn q0_of_x_squared_is_one_third() {
        let space = unit_cell(0);
        let c = project_q0_cell(&space, 0, &|p: Point| Vector::new(p.x * p.x, 0.0));
        // P_0 basis is the constant 1 for k = 0
        assert!((c[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!(c[1].abs() < 1e-15);
    }

    #[test]
    fn qb_on_vertical_edge() {
        let space = unit_cell(0);
        let mesh = space.mesh();
        let e = (0..4)
            .find(|&e| {
                let [a, b] = mesh.edge_points(e);
                a.x == 1.0 && b.x == 1.0
            })
            .unwrap();
        assert_eq!(mesh.edges()[e].normal, Vector::new(1.0, 0.0));
        let phi0 = 1.0; // sqrt(1 / |e|)
        let c = project_qb(&space, &|_: Point| Vector::new(1.0, 0.0));
        assert!((c[e][0] * phi0 - 1.0).abs() < 1e-15);
        let c = project_qb(&space, &|p: Point| Vector::new(p.y, 0.0));
        assert!((c[e][0] * phi0 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn scalar_projection_of_x_squared() {
        let space = unit_cell(0);
        let proj = project_scalar(&space, &|p: Point| p.x * p.x);
        for &(x, y) in &[(0.1, 0.2), (0.5, 0.5), (0.9, 0.3)] {
            let p = Point::new(x, y);
            assert!((proj.value(&space, 0, p) - (x - 1.0 / 6.0)).abs() < 1e-14);
        }
        let proj = project_scalar(&space, &|p: Point| p.x + p.y);
        assert!((proj.value(&space, 0, Point::new(0.3, 0.7)) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn residual_moments_vanish() {
        let mesh = generate_perturbed_poly_mesh(2, 0.25, 9, Rect::unit()).unwrap();
        let space = WgSpace::new(mesh, 1, SpaceOptions::default()).unwrap();
        let u = |p: Point| (3.0 * p.x).sin() * p.y.exp();
        let proj = project_scalar(&space, &u);
        for c in 0..space.mesh().num_cells() {
            let data = space.cell(c);
            for i in 0..data.basis.scalar.len() {
                let r: f64 = data
                    .rule
                    .points
                    .iter()
                    .zip(&data.rule.weights)
                    .enumerate()
                    .map(|(j, (p, w))| w * (proj.value(&space, c, *p) - u(*p)) * data.scalar_values[(i, j)])
                    .sum();
                assert!(r.abs() < 1e-14);
            }
        }
    }
}
