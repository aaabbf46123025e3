//! Discrete norms on `V_h` and `W_h`.
//!
//! * `|||v|||^2 = a(v, v) + s(v, v) = vᵀ A_s v`,
//! * `||w||_{1,h}^2 = sum_T ||grad w||_T^2 + sum_e h_e^{-1} ||Q_b [w]||_e^2`,
//!   where `[w]_e = sum_{T containing e} sigma_{T,e} w|_T`, so that on a boundary
//!   edge `[w] = w`.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::forms::{spmv, SaddleSystem};
use crate::space::{FluxField, ScalarField, WgSpace};

pub fn triple_bar_norm(system: &SaddleSystem, v: &FluxField) -> f64 {
    system.energy(v.values()).max(0.0).sqrt()
}

/// `J_e` with `J_e w = Q_b [w]` in the orthonormal edge basis; columns follow
/// the scalar dofs of the incident cells, returned alongside.
pub fn jump_matrix(space: &WgSpace, edge: usize) -> (Vec<usize>, DMatrix<f64>) {
    let dofs = space.dofs();
    let data = space.edge(edge);
    let info = &space.mesh().edges()[edge];
    let cells: Vec<usize> = std::iter::once(info.left).chain(info.right).collect();
    let ns = dofs.scalar_len();
    let mut columns = Vec::with_capacity(ns * cells.len());
    let mut j = DMatrix::zeros(data.basis.len(), ns * cells.len());
    for (slot, &c) in cells.iter().enumerate() {
        columns.extend(dofs.scalar_range(c));
        let side = space.cell(c).sides.iter().find(|s| s.edge == edge).expect("edge is a side of its cells");
        for (q, w) in data.rule.weights.iter().enumerate() {
            j.view_mut((0, slot * ns), (data.basis.len(), ns)).ger(
                side.sign * w,
                &data.values.column(q),
                &side.scalar_values.column(q),
                1.0,
            );
        }
    }
    (columns, j)
}

/// `Q_b [w]` on one edge.
pub fn jump_moments(space: &WgSpace, w: &ScalarField, edge: usize) -> DVector<f64> {
    let (columns, j) = jump_matrix(space, edge);
    let local = DVector::from_iterator(columns.len(), columns.iter().map(|&i| w.values()[i]));
    j * local
}

/// Cell stiffness `(grad psi_i, grad psi_j)_T`.
pub fn cell_stiffness(space: &WgSpace, cell: usize) -> DMatrix<f64> {
    let data = space.cell(cell);
    let n = data.basis.scalar.len();
    let mut k = DMatrix::zeros(n, n);
    for (q, w) in data.rule.weights.iter().enumerate() {
        k.ger(*w, &data.scalar_grad_x.column(q), &data.scalar_grad_x.column(q), 1.0);
        k.ger(*w, &data.scalar_grad_y.column(q), &data.scalar_grad_y.column(q), 1.0);
    }
    k
}

/// Gram matrix `H` of `||.||_{1,h}`, so `||w||_{1,h}^2 = wᵀ H w`.
pub fn h1h_gram(space: &WgSpace) -> CsrMatrix<f64> {
    let dofs = space.dofs();
    let n = dofs.num_scalar();
    let mut coo = CooMatrix::new(n, n);
    for c in 0..space.mesh().num_cells() {
        let k = cell_stiffness(space, c);
        let range: Vec<usize> = dofs.scalar_range(c).collect();
        for (j, &cj) in range.iter().enumerate() {
            for (i, &ci) in range.iter().enumerate() {
                coo.push(ci, cj, k[(i, j)]);
            }
        }
    }
    for e in 0..space.mesh().num_edges() {
        let (columns, j) = jump_matrix(space, e);
        let local = j.transpose() * &j / space.mesh().edge_length(e);
        for (b, &cb) in columns.iter().enumerate() {
            for (a, &ca) in columns.iter().enumerate() {
                coo.push(ca, cb, local[(a, b)]);
            }
        }
    }
    CsrMatrix::from(&coo)
}

pub fn h1h_norm(space: &WgSpace, w: &ScalarField) -> f64 {
    let mut total = 0.0;
    for c in 0..space.mesh().num_cells() {
        let coeffs = w.cell_vector(c);
        total += coeffs.dot(&(cell_stiffness(space, c) * &coeffs));
    }
    for e in 0..space.mesh().num_edges() {
        total += jump_moments(space, w, e).norm_squared() / space.mesh().edge_length(e);
    }
    total.sqrt()
}

/// `||w||` over the domain.
pub fn l2_scalar_norm(space: &WgSpace, w: &ScalarField) -> f64 {
    (0..space.mesh().num_cells())
        .map(|c| {
            let coeffs = w.cell_vector(c);
            coeffs.dot(&(&space.cell(c).scalar_mass * &coeffs))
        })
        .sum::<f64>()
        .sqrt()
}

/// `||v_0||` over the domain.
pub fn l2_interior_norm(space: &WgSpace, v: &FluxField) -> f64 {
    (0..space.mesh().num_cells())
        .map(|c| {
            let m = &space.cell(c).flux_mass;
            let nk = m.nrows();
            let x = DVector::from_column_slice(&v.interior(c)[..nk]);
            let y = DVector::from_column_slice(&v.interior(c)[nk..]);
            x.dot(&(m * &x)) + y.dot(&(m * &y))
        })
        .sum::<f64>()
        .sqrt()
}

/// `wᵀ H w` through an assembled Gram matrix.
pub fn gram_norm(gram: &CsrMatrix<f64>, w: &DVector<f64>) -> f64 {
    w.dot(&spmv(gram, w)).max(0.0).sqrt()
}
