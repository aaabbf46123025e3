//! Discrete errors against a manufactured solution.
//!
//! With `e_h = q_h - Q_h q` and `eps_h = u_h - Q u`, the bundle holds
//! `|||e_h|||`, `||eps_h||_{1,h}`, `||eps_h||` and `||e_0||`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::manufactured::ManufacturedSolution;
use super::norms::{h1h_norm, l2_interior_norm, l2_scalar_norm, triple_bar_norm};
use crate::forms::SaddleSystem;
use crate::projection::{project_q0_cell, project_qb, project_qh, project_scalar, project_scalar_cell};
use crate::solver::Solution;
use crate::space::{FluxField, ScalarField, WgSpace};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorBundle {
    pub h: f64,
    pub triple_bar_q: f64,
    pub h1h_u: f64,
    pub l2_u: f64,
    pub l2_q0: f64,
}

impl ErrorBundle {
    pub fn max_error(&self) -> f64 {
        self.triple_bar_q.max(self.h1h_u).max(self.l2_u).max(self.l2_q0)
    }
}

pub fn error_bundle(
    space: &WgSpace,
    system: &SaddleSystem,
    solution: &Solution,
    manufactured: &ManufacturedSolution,
) -> Result<ErrorBundle> {
    if solution.q.dofs() != space.dofs() || system.dofs != space.dofs() {
        return Err(Error::LayoutMismatch { expected: space.dofs().num_flux(), actual: solution.q.values().len() });
    }
    let qh = project_qh(space, &|p| manufactured.q(p));
    let uh = project_scalar(space, &|p| manufactured.u(p));
    let e = FluxField::from_vector(space.dofs(), solution.q.values() - qh.values())?;
    let eps = ScalarField::from_vector(space.dofs(), solution.u.values() - uh.values())?;
    Ok(ErrorBundle {
        h: space.mesh().mesh_size(),
        triple_bar_q: triple_bar_norm(system, &e),
        h1h_u: h1h_norm(space, &eps),
        l2_u: l2_scalar_norm(space, &eps),
        l2_q0: l2_interior_norm(space, &e),
    })
}

/// Errors of the projections themselves, independent of any solve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProjectionErrors {
    pub h: f64,
    /// `||q - Q_0 q||`.
    pub l2_q: f64,
    /// `||u - Q u||`.
    pub l2_u: f64,
    /// `|||q - Q_h q|||` with the solution's `alpha` and the given `rho`.
    pub triple_bar_q: f64,
}

pub fn projection_errors(space: &WgSpace, manufactured: &ManufacturedSolution, rho: f64) -> ProjectionErrors {
    let qb = project_qb(space, &|p| manufactured.q(p));
    let mut l2_q = 0.0;
    let mut l2_u = 0.0;
    let mut energy = 0.0;
    for c in 0..space.mesh().num_cells() {
        let data = space.cell(c);
        let nk = data.basis.flux.len();
        let q0 = project_q0_cell(space, c, &|p| manufactured.q(p));
        let (q0x, q0y) = (q0.rows(0, nk), q0.rows(nk, nk));
        let us = project_scalar_cell(space, c, &|p| manufactured.u(p));
        for (k, (p, w)) in data.rule.points.iter().zip(&data.rule.weights).enumerate() {
            let phi = data.flux_values.column(k);
            let d = manufactured.q(*p) - crate::Vector::new(phi.dot(&q0x), phi.dot(&q0y));
            l2_q += w * d.norm_squared();
            energy += w * d.dot(&(manufactured.alpha().eval(*p) * d));
            let du = manufactured.u(*p) - data.scalar_values.column(k).dot(&us);
            l2_u += w * du * du;
        }
        for side in &data.sides {
            let edge = space.edge(side.edge);
            let coeffs: &DVector<f64> = &qb[side.edge];
            for (k, w) in edge.rule.weights.iter().enumerate() {
                let phi = side.flux_values.column(k);
                let q0n = phi.dot(&q0x) * side.outward_normal.x + phi.dot(&q0y) * side.outward_normal.y;
                let jump = side.sign * edge.values.column(k).dot(coeffs) - q0n;
                energy += rho * data.diameter() * w * jump * jump;
            }
        }
    }
    ProjectionErrors { h: space.mesh().mesh_size(), l2_q: l2_q.sqrt(), l2_u: l2_u.sqrt(), triple_bar_q: energy.sqrt() }
}
