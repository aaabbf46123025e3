//! Inverse and trace inequality constants on `P_{k+1}(T)`.
//!
//! * inverse: `||grad phi||_T <= C_inv h_T^{-1} ||phi||_T`,
//! * trace: `||phi||_e^2 <= C_tr (h_T^{-1} ||phi||_T^2 + h_T ||grad phi||_T^2)`.
//!
//! The sharp constants on a cell are the largest generalized eigenvalues of
//! the corresponding Gram matrices. Random fields are also sampled, drawn
//! uniformly in coordinates orthonormal for the norm on the right-hand side
//! of each inequality, and no sample may exceed the sharp constant.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::norms::cell_stiffness;
use crate::space::WgSpace;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InequalityConstants {
    pub h: f64,
    /// `max_T` of the sharp inverse constant.
    pub inverse: f64,
    /// `max_{T, e}` of the sharp trace constant.
    pub trace: f64,
    /// Largest inverse ratio among random samples.
    pub sampled_inverse: f64,
    /// Largest trace ratio among random samples.
    pub sampled_trace: f64,
}

/// Largest `lambda` with `a x = lambda b x`, `b` SPD.
pub fn max_generalized_eigenvalue(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let w = whitening(b);
    let c = w.transpose() * a * &w;
    let sym = (&c + c.transpose()) * 0.5;
    sym.symmetric_eigenvalues().max()
}

/// `L^{-T}` for `b = L L^T`, mapping orthonormal coordinates of `b` to
/// coefficients.
fn whitening(b: &DMatrix<f64>) -> DMatrix<f64> {
    let l = b.clone().cholesky().expect("Gram matrix is positive definite").l();
    l.solve_lower_triangular(&DMatrix::identity(l.nrows(), l.nrows())).expect("triangular factor is regular").transpose()
}

fn edge_mass(space: &WgSpace, cell: usize, side: usize) -> DMatrix<f64> {
    let data = space.cell(cell);
    let s = &data.sides[side];
    let rule = &space.edge(s.edge).rule;
    let n = data.basis.scalar.len();
    let mut m = DMatrix::zeros(n, n);
    for (q, w) in rule.weights.iter().enumerate() {
        m.ger(*w, &s.scalar_values.column(q), &s.scalar_values.column(q), 1.0);
    }
    m
}

pub fn inequality_constants(space: &WgSpace, samples_per_cell: usize, seed: u64) -> InequalityConstants {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = InequalityConstants { h: space.mesh().mesh_size(), inverse: 0.0, trace: 0.0, sampled_inverse: 0.0, sampled_trace: 0.0 };
    for c in 0..space.mesh().num_cells() {
        let data = space.cell(c);
        let h = data.diameter();
        let m = &data.scalar_mass;
        let k = cell_stiffness(space, c);
        out.inverse = out.inverse.max((h * h * max_generalized_eigenvalue(&k, m)).sqrt());
        let energy = m / h + &k * h;
        let edges: Vec<DMatrix<f64>> = (0..data.sides.len()).map(|s| edge_mass(space, c, s)).collect();
        for e in &edges {
            out.trace = out.trace.max(max_generalized_eigenvalue(e, &energy));
        }
        let (to_l2, to_energy) = (whitening(m), whitening(&energy));
        for _ in 0..samples_per_cell {
            let z = DVector::from_fn(m.nrows(), |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let x = &to_l2 * &z;
            let grad = x.dot(&(&k * &x));
            out.sampled_inverse = out.sampled_inverse.max(h * (grad / x.dot(&(m * &x))).sqrt());
            let x = &to_energy * &z;
            let denom = x.dot(&(&energy * &x));
            for e in &edges {
                out.sampled_trace = out.sampled_trace.max(x.dot(&(e * &x)) / denom);
            }
        }
    }
    out
}
