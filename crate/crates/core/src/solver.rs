//! Solvers for the saddle-point system.
//!
//! * `Direct`: sparse LU of the full block matrix.
//! * `SchurCg`: sparse Cholesky of `A_s` and preconditioned CG on
//!   `S = B A_s^{-1} B^T`.
//! * `Minres`: preconditioned MINRES on the symmetric form
//!   `[A_s, -B^T; -B, 0] (q; u) = (G; -F)` with a block-diagonal Jacobi
//!   preconditioner.

use std::time::{Duration, Instant};

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::forms::{spmv, spmv_transpose, SaddleSystem};
use crate::space::{FluxField, ScalarField};
use crate::{Error, Result};

/// Systems up to this many unknowns use the direct method under `Auto`.
pub const DIRECT_LIMIT: usize = 200_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    #[default]
    Auto,
    Direct,
    SchurCg,
    Minres,
}

impl std::str::FromStr for SolverMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(SolverMethod::Auto),
            "direct" => Ok(SolverMethod::Direct),
            "schur-cg" | "schur-complement-cg" => Ok(SolverMethod::SchurCg),
            "minres" => Ok(SolverMethod::Minres),
            other => Err(Error::InvalidArgument(format!(
                "unknown solver method '{other}' (expected auto, direct, schur-cg or minres)"
            ))),
        }
    }
}

impl std::fmt::Display for SolverMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(match self {
            SolverMethod::Auto => "auto",
            SolverMethod::Direct => "direct",
            SolverMethod::SchurCg => "schur-cg",
            SolverMethod::Minres => "minres",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub method: SolverMethod,
    /// Relative residual tolerance, in `(0, 1)`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { method: SolverMethod::Auto, tolerance: 1e-10, max_iterations: 20_000 }
    }
}

impl SolveOptions {
    pub fn with_method(method: SolverMethod) -> Self {
        SolveOptions { method, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::InvalidArgument(format!("tolerance must lie in (0, 1), got {}", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub q: FluxField,
    pub u: ScalarField,
    /// `||A_s q - B^T u - G||`.
    pub flux_residual: f64,
    /// `||B q - F||`.
    pub scalar_residual: f64,
    /// Outer iterations; refinement steps for the direct method.
    pub iterations: usize,
    pub wall_time: Duration,
    pub method: SolverMethod,
}

fn residual_scale(system: &SaddleSystem) -> f64 {
    system.g.norm() + system.f.norm() + 1.0
}

fn sparse_col(n: usize, m: usize, triplets: &[Triplet<usize, usize, f64>]) -> Result<SparseColMat<usize, f64>> {
    SparseColMat::try_new_from_triplets(n, m, triplets)
        .map_err(|e| Error::SingularSystem(format!("cannot build sparse matrix: {e:?}")))
}

fn kkt_triplets(system: &SaddleSystem) -> Vec<Triplet<usize, usize, f64>> {
    let nq = system.num_flux();
    let mut t = Vec::with_capacity(system.a_s.nnz() + 2 * system.b.nnz());
    for (i, row) in system.a_s.row_iter().enumerate() {
        for (&j, &v) in row.col_indices().iter().zip(row.values()) {
            t.push(Triplet::new(i, j, v));
        }
    }
    for (j, row) in system.b.row_iter().enumerate() {
        for (&i, &v) in row.col_indices().iter().zip(row.values()) {
            t.push(Triplet::new(nq + j, i, v));
            t.push(Triplet::new(i, nq + j, -v));
        }
    }
    t
}

struct Factorized<F> {
    factor: F,
}

impl<F: Solve<f64>> Factorized<F> {
    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut x = rhs.clone();
        self.factor.solve_in_place(faer::ColMut::from_slice_mut(x.as_mut_slice()));
        x
    }
}

fn finish(
    system: &SaddleSystem,
    q: DVector<f64>,
    u: DVector<f64>,
    iterations: usize,
    start: Instant,
    method: SolverMethod,
) -> Result<Solution> {
    let (flux_residual, scalar_residual) = system.residuals(&q, &u);
    Ok(Solution {
        q: FluxField::from_vector(system.dofs, q)?,
        u: ScalarField::from_vector(system.dofs, u)?,
        flux_residual,
        scalar_residual,
        iterations,
        wall_time: start.elapsed(),
        method,
    })
}

fn solve_direct(system: &SaddleSystem, options: &SolveOptions, start: Instant) -> Result<Solution> {
    let nq = system.num_flux();
    let n = system.size();
    let k = sparse_col(n, n, &kkt_triplets(system))?;
    let lu = Factorized {
        factor: k.sp_lu().map_err(|e| Error::SingularSystem(format!("sparse LU failed: {e:?}")))?,
    };
    let mut rhs = DVector::zeros(n);
    rhs.rows_mut(0, nq).copy_from(&system.g);
    rhs.rows_mut(nq, n - nq).copy_from(&system.f);
    let mut x = lu.solve(&rhs);
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::SingularSystem("direct solve produced non-finite values".into()));
    }
    let bound = options.tolerance * residual_scale(system);
    let mut steps = 0;
    loop {
        let q = x.rows(0, nq).into_owned();
        let u = x.rows(nq, n - nq).into_owned();
        let (r1, r2) = system.residuals(&q, &u);
        if r1.max(r2) <= bound {
            return finish(system, q, u, steps, start, SolverMethod::Direct);
        }
        if steps == 3 {
            return Err(Error::NonConvergence { iterations: steps, best_residual: r1.max(r2) / residual_scale(system) });
        }
        // iterative refinement
        let mut r = DVector::zeros(n);
        r.rows_mut(0, nq).copy_from(&(&system.g - spmv(&system.a_s, &q) + spmv_transpose(&system.b, &u)));
        r.rows_mut(nq, n - nq).copy_from(&(&system.f - spmv(&system.b, &q)));
        x += lu.solve(&r);
        steps += 1;
    }
}

/// Diagonal of `B diag(A_s)^{-1} B^T`.
fn schur_diagonal(system: &SaddleSystem) -> Result<DVector<f64>> {
    let mut diag_a = DVector::zeros(system.num_flux());
    for (i, row) in system.a_s.row_iter().enumerate() {
        for (&j, &v) in row.col_indices().iter().zip(row.values()) {
            if i == j {
                diag_a[i] = v;
            }
        }
    }
    if let Some(i) = diag_a.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::SingularSystem(format!("A_s has a non-positive diagonal entry at flux dof {i}")));
    }
    let mut s = DVector::zeros(system.num_scalar());
    for (j, row) in system.b.row_iter().enumerate() {
        s[j] = row.col_indices().iter().zip(row.values()).map(|(&i, v)| v * v / diag_a[i]).sum();
    }
    if let Some(j) = s.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::SingularSystem(format!("scalar dof {j} is not coupled to any flux dof")));
    }
    Ok(s)
}

fn a_s_triplets(system: &SaddleSystem) -> Vec<Triplet<usize, usize, f64>> {
    let mut t = Vec::with_capacity(system.a_s.nnz());
    for (i, row) in system.a_s.row_iter().enumerate() {
        for (&j, &v) in row.col_indices().iter().zip(row.values()) {
            t.push(Triplet::new(i, j, v));
        }
    }
    t
}

fn solve_schur_cg(system: &SaddleSystem, options: &SolveOptions, start: Instant) -> Result<Solution> {
    let nq = system.num_flux();
    let a = sparse_col(nq, nq, &a_s_triplets(system))?;
    let chol = Factorized {
        factor: a
            .sp_cholesky(faer::Side::Lower)
            .map_err(|e| Error::SingularSystem(format!("A_s is not positive definite: {e:?}")))?,
    };
    let precond = schur_diagonal(system)?.map(|d| 1.0 / d);
    let apply_s = |u: &DVector<f64>| spmv(&system.b, &chol.solve(&spmv_transpose(&system.b, u)));

    let a_inv_g = chol.solve(&system.g);
    let bound = 0.5 * options.tolerance * residual_scale(system);
    let mut u = DVector::zeros(system.num_scalar());
    let mut r = &system.f - spmv(&system.b, &a_inv_g);
    let mut z = r.component_mul(&precond);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    let mut best = r.norm();
    let mut iterations = 0;
    while r.norm() > bound {
        if iterations == options.max_iterations {
            return Err(Error::NonConvergence { iterations, best_residual: best / residual_scale(system) });
        }
        let sp = apply_s(&p);
        let curvature = p.dot(&sp);
        if !(curvature > 0.0) {
            return Err(Error::SingularSystem("Schur complement is not positive definite".into()));
        }
        let step = rz / curvature;
        u.axpy(step, &p, 1.0);
        r.axpy(-step, &sp, 1.0);
        z = r.component_mul(&precond);
        let rz_new = r.dot(&z);
        p = &z + &p * (rz_new / rz);
        rz = rz_new;
        best = best.min(r.norm());
        iterations += 1;
    }
    let q = chol.solve(&(&system.g + spmv_transpose(&system.b, &u)));
    finish(system, q, u, iterations, start, SolverMethod::SchurCg)
}

fn solve_minres(system: &SaddleSystem, options: &SolveOptions, start: Instant) -> Result<Solution> {
    let nq = system.num_flux();
    let n = system.size();
    let mut diag = DVector::zeros(n);
    for (i, row) in system.a_s.row_iter().enumerate() {
        for (&j, &v) in row.col_indices().iter().zip(row.values()) {
            if i == j {
                diag[i] = v;
            }
        }
    }
    diag.rows_mut(nq, n - nq).copy_from(&schur_diagonal(system)?);
    let m_inv = diag.map(|d| 1.0 / d);
    let apply = |x: &DVector<f64>| {
        let q = x.rows(0, nq).into_owned();
        let u = x.rows(nq, n - nq).into_owned();
        let mut y = DVector::zeros(n);
        y.rows_mut(0, nq).copy_from(&(spmv(&system.a_s, &q) - spmv_transpose(&system.b, &u)));
        y.rows_mut(nq, n - nq).copy_from(&(-spmv(&system.b, &q)));
        y
    };
    let mut b = DVector::zeros(n);
    b.rows_mut(0, nq).copy_from(&system.g);
    b.rows_mut(nq, n - nq).copy_from(&(-&system.f));

    let scale = residual_scale(system);
    let bound = options.tolerance * scale;
    let split = |x: &DVector<f64>| (x.rows(0, nq).into_owned(), x.rows(nq, n - nq).into_owned());
    let true_residual = |x: &DVector<f64>| {
        let (q, u) = split(x);
        let (r1, r2) = system.residuals(&q, &u);
        r1.max(r2)
    };

    let mut x = DVector::zeros(n);
    let mut best = f64::INFINITY;
    let mut iterations = 0;
    // restarted from the current iterate whenever the recurrence stagnates
    while iterations < options.max_iterations {
        let r0 = &b - apply(&x);
        let mut v_old = DVector::zeros(n);
        let mut v = r0.clone();
        let mut z = v.component_mul(&m_inv);
        let mut gamma = v.dot(&z).sqrt();
        let mut gamma_old = 1.0;
        if gamma == 0.0 {
            break;
        }
        let mut eta = gamma;
        let (mut s_old, mut s, mut c_old, mut c) = (0.0, 0.0, 1.0, 1.0);
        let mut w_old = DVector::zeros(n);
        let mut w = DVector::zeros(n);
        let estimate_floor = 1e-3 * bound / (m_inv.amax().sqrt().max(1.0));
        let mut inner = 0;
        while iterations < options.max_iterations {
            z /= gamma;
            let az = apply(&z);
            let delta = az.dot(&z);
            let v_new = &az - &v * (delta / gamma) - &v_old * (gamma / gamma_old);
            let z_new = v_new.component_mul(&m_inv);
            let gamma_new = v_new.dot(&z_new).max(0.0).sqrt();
            let a0 = c * delta - c_old * s * gamma;
            let a1 = (a0 * a0 + gamma_new * gamma_new).sqrt();
            let a2 = s * delta + c_old * c * gamma;
            let a3 = s_old * gamma;
            let c_new = a0 / a1;
            let s_new = gamma_new / a1;
            let w_new = (&z - &w_old * a3 - &w * a2) / a1;
            x.axpy(c_new * eta, &w_new, 1.0);
            eta *= -s_new;
            iterations += 1;
            inner += 1;

            v_old = std::mem::replace(&mut v, v_new);
            z = z_new;
            gamma_old = gamma;
            gamma = gamma_new;
            w_old = std::mem::replace(&mut w, w_new);
            s_old = s;
            s = s_new;
            c_old = c;
            c = c_new;

            if !a1.is_finite() || a1 == 0.0 {
                return Err(Error::SingularSystem("MINRES breakdown".into()));
            }
            if eta.abs() <= estimate_floor || gamma == 0.0 || inner % 50 == 0 {
                let r = true_residual(&x);
                best = best.min(r);
                if r <= bound {
                    let (q, u) = split(&x);
                    return finish(system, q, u, iterations, start, SolverMethod::Minres);
                }
                if eta.abs() <= estimate_floor || gamma == 0.0 {
                    break;
                }
            }
        }
    }
    let r = true_residual(&x);
    if r <= bound {
        let (q, u) = split(&x);
        return finish(system, q, u, iterations, start, SolverMethod::Minres);
    }
    Err(Error::NonConvergence { iterations, best_residual: best.min(r) / scale })
}

/// Solves the system; success implies both block residuals are at most
/// `tolerance * (||G|| + ||F|| + 1)`.
pub fn solve(system: &SaddleSystem, options: &SolveOptions) -> Result<Solution> {
    options.validate()?;
    let start = Instant::now();
    match options.method {
        SolverMethod::Auto if system.size() <= DIRECT_LIMIT => solve_direct(system, options, start),
        SolverMethod::Auto => solve_schur_cg(system, options, start),
        SolverMethod::Direct => solve_direct(system, options, start),
        SolverMethod::SchurCg => solve_schur_cg(system, options, start),
        SolverMethod::Minres => solve_minres(system, options, start),
    }
}
