//! Discrete weak divergence `V_h -> W_h`.
//!
//! On each cell `T` the weak divergence of `v = {v_0, v_b n_e}` is the
//! polynomial `d in P_{k+1}(T)` with
//!
//! ```text
//!   (d, phi)_T = -(v_0, grad phi)_T + <v_b n_e . n, phi>_{dT}   for all phi in P_{k+1}(T).
//! ```
//!
//! The right-hand side, tabulated against the local basis, is the moment
//! matrix `R_T`; the coefficients are `D_T v = M_T^{-1} R_T v`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::space::{DofMap, FluxField, ScalarField, WgSpace};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct LocalWeakDiv {
    /// Global flux indices of the local columns.
    pub flux_dofs: Vec<usize>,
    /// `R_T`: rows are `P_{k+1}(T)` basis functions.
    pub moments: DMatrix<f64>,
    /// `D_T = M_T^{-1} R_T`.
    pub divergence: DMatrix<f64>,
}

#[derive(Clone, Debug)]
pub struct WeakDivOperator {
    dofs: DofMap,
    cells: Vec<LocalWeakDiv>,
}

fn local_moments(space: &WgSpace, cell: usize) -> DMatrix<f64> {
    let data = space.cell(cell);
    let nk = data.basis.flux.len();
    let ns = data.basis.scalar.len();
    let ne = space.dofs().edge_len();
    let ncols = 2 * nk + ne * data.sides.len();
    let mut r = DMatrix::zeros(ns, ncols);

    // -(v_0, grad phi)_T
    for (q, w) in data.rule.weights.iter().enumerate() {
        let p = data.flux_values.column(q);
        let gx = data.scalar_grad_x.column(q);
        let gy = data.scalar_grad_y.column(q);
        r.view_mut((0, 0), (ns, nk)).ger(-w, &gx, &p, 1.0);
        r.view_mut((0, nk), (ns, nk)).ger(-w, &gy, &p, 1.0);
    }
    // <v_b n_e . n_T, phi>
    for (s, side) in data.sides.iter().enumerate() {
        let edge = space.edge(side.edge);
        let col0 = 2 * nk + s * ne;
        for (q, w) in edge.rule.weights.iter().enumerate() {
            r.view_mut((0, col0), (ns, ne)).ger(side.sign * w, &side.scalar_values.column(q), &edge.values.column(q), 1.0);
        }
    }
    r
}

pub fn build_weakdiv(space: &WgSpace) -> WeakDivOperator {
    let cells = (0..space.mesh().num_cells())
        .into_par_iter()
        .map(|c| {
            let moments = local_moments(space, c);
            let chol = space.cell(c).scalar_mass.clone().cholesky().expect("scalar mass is positive definite");
            let divergence = chol.solve(&moments);
            LocalWeakDiv { flux_dofs: space.local_flux_dofs(c), moments, divergence }
        })
        .collect();
    WeakDivOperator { dofs: space.dofs(), cells }
}

impl WeakDivOperator {
    pub fn dofs(&self) -> DofMap {
        self.dofs
    }

    pub fn cell(&self, cell: usize) -> &LocalWeakDiv {
        &self.cells[cell]
    }

    pub fn cells(&self) -> &[LocalWeakDiv] {
        &self.cells
    }

    /// Coefficients of the weak divergence of `v`, cell by cell.
    pub fn apply(&self, v: &FluxField) -> Result<ScalarField> {
        if v.dofs() != self.dofs {
            return Err(Error::LayoutMismatch { expected: self.dofs.num_flux(), actual: v.values().len() });
        }
        let mut out = ScalarField::zeros(self.dofs);
        for (c, local) in self.cells.iter().enumerate() {
            let x = DVector::from_iterator(local.flux_dofs.len(), local.flux_dofs.iter().map(|&i| v.values()[i]));
            out.cell_mut(c).copy_from_slice((&local.divergence * x).as_slice());
        }
        Ok(out)
    }
}

pub fn apply_weakdiv(op: &WeakDivOperator, v: &FluxField) -> Result<ScalarField> {
    op.apply(v)
}
