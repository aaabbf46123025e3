//! Algebraic identities of the discretization, evaluated numerically.
//!
//! * commuting projection: `(div_w Q_h q, psi)_T = (div q, psi)_T - <q.n - Q_b(q.n), psi>_{dT}`;
//! * projected test functions: `(div_w v, Q w)_T = -(v_0, grad w)_T
//!   + <(v_0 - v_b).n, w - Q w>_{dT} + <v_b.n, w>_{dT}` for discrete `v`;
//! * inf-sup witness: with `v_0 = -grad phi` and `v_b = h_e^{-1} Q_b [phi]`,
//!   `b(v, phi) = ||phi||_{1,h}^2`;
//! * edge projection bound: `||q.n - Q_b(q.n)||_e <= ||q.n - (Q_0 q).n||_e`;
//! * local conservation: `int_{dT} q_b.n = int_T f` after a solve.

use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::manufactured::ManufacturedSolution;
use super::norms::{gram_norm, h1h_gram, jump_moments, triple_bar_norm};
use crate::forms::{assemble_system_with, spmv, SaddleSystem};
use crate::mesh::PolyMesh;
use crate::projection::{project_edge_scalar, project_q0_cell, project_qh, project_scalar_cell};
use crate::quadrature::{IDENTITY_QUADRATURE_DEGREE, QUADRATURE_TOLERANCE};
use crate::solver::{solve, SolveOptions, Solution};
use crate::space::{FluxField, ScalarField, SpaceOptions, WgSpace};
use crate::weakdiv::{build_weakdiv, WeakDivOperator};
use crate::{Point, Result, Vector};

/// Residual of one identity over all cells, edges or samples.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityResidual {
    pub name: String,
    pub max_residual: f64,
    pub threshold: f64,
    pub evaluations: usize,
    pub passed: bool,
}

impl IdentityResidual {
    fn new(name: &str, max_residual: f64, threshold: f64, evaluations: usize) -> Self {
        IdentityResidual {
            name: name.to_string(),
            max_residual,
            threshold,
            evaluations,
            passed: max_residual <= threshold,
        }
    }
}

/// Witness statistics over the random samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WitnessStats {
    pub max_relative_residual: f64,
    /// `max |||v||| / ||phi||_{1,h}`.
    pub max_ratio: f64,
    pub min_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityReport {
    pub degree: usize,
    pub num_cells: usize,
    pub items: Vec<IdentityResidual>,
    pub witness: WitnessStats,
}

impl IdentityReport {
    pub fn all_passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    pub fn get(&self, name: &str) -> Option<&IdentityResidual> {
        self.items.iter().find(|i| i.name == name)
    }
}

pub const COMMUTING: &str = "commuting-projection";
pub const PROJECTED_TEST: &str = "projected-test-function";
pub const WITNESS: &str = "inf-sup-witness";
pub const EDGE_BOUND: &str = "edge-projection-bound";
pub const CONSERVATION: &str = "local-conservation";

type VectorFn = Arc<dyn Fn(Point) -> Vector + Send + Sync>;
type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Smooth data for the identities.
#[derive(Clone)]
pub struct IdentityData {
    pub q: VectorFn,
    pub div_q: ScalarFn,
    pub w: ScalarFn,
    pub grad_w: VectorFn,
    /// Solution used for the conservation check.
    pub manufactured: ManufacturedSolution,
}

impl std::fmt::Debug for IdentityData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IdentityData").field("manufactured", &self.manufactured).finish()
    }
}

impl IdentityData {
    /// `q = (e^x, sin y)`, `w = cos(pi x) y`.
    pub fn standard(manufactured: ManufacturedSolution) -> Self {
        use std::f64::consts::PI;
        IdentityData {
            q: Arc::new(|p: Point| Vector::new(p.x.exp(), p.y.sin())),
            div_q: Arc::new(|p: Point| p.x.exp() + p.y.cos()),
            w: Arc::new(|p: Point| (PI * p.x).cos() * p.y),
            grad_w: Arc::new(|p: Point| Vector::new(-PI * (PI * p.x).sin() * p.y, (PI * p.x).cos())),
            manufactured,
        }
    }

    /// Uses the solution's flux and scalar.
    pub fn from_manufactured(ms: ManufacturedSolution) -> Self {
        let (a, b, c, d) = (ms.clone(), ms.clone(), ms.clone(), ms.clone());
        IdentityData {
            q: Arc::new(move |p| a.q(p)),
            div_q: Arc::new(move |p| b.f(p)),
            w: Arc::new(move |p| c.u(p)),
            grad_w: Arc::new(move |p| d.grad_u(p)),
            manufactured: ms,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityOptions {
    pub rho: f64,
    pub samples: usize,
    pub seed: u64,
    pub quadrature_degree: usize,
    pub solver: SolveOptions,
}

impl Default for IdentityOptions {
    fn default() -> Self {
        IdentityOptions {
            rho: 1.0,
            samples: 20,
            seed: 2024,
            quadrature_degree: IDENTITY_QUADRATURE_DEGREE,
            solver: SolveOptions::default(),
        }
    }
}

/// Threshold for identities that hold up to quadrature error.
pub fn quadrature_threshold() -> f64 {
    50.0 * QUADRATURE_TOLERANCE
}

/// `max_{T, psi} |(div_w Q_h q, psi) - (div q, psi) + <q.n - Q_b(q.n), psi>|`.
pub fn commuting_residual(
    space: &WgSpace,
    op: &WeakDivOperator,
    q: &(impl Fn(Point) -> Vector + Sync),
    div_q: impl Fn(Point) -> f64,
) -> f64 {
    let d = op.apply(&project_qh(space, q)).expect("layouts match");
    let mut worst = 0.0f64;
    for c in 0..space.mesh().num_cells() {
        let data = space.cell(c);
        let mut lhs = &data.scalar_mass * d.cell_vector(c);
        for (k, (p, w)) in data.rule.points.iter().zip(&data.rule.weights).enumerate() {
            lhs.axpy(-w * div_q(*p), &data.scalar_values.column(k), 1.0);
        }
        for side in &data.sides {
            let edge = space.edge(side.edge);
            let n_e = space.mesh().edges()[side.edge].normal;
            let qb = project_edge_scalar(space, side.edge, |p| q(p).dot(&n_e));
            for (k, (p, w)) in edge.rule.points.iter().zip(&edge.rule.weights).enumerate() {
                let mismatch = q(*p).dot(&side.outward_normal) - side.sign * edge.values.column(k).dot(&qb);
                lhs.axpy(w * mismatch, &side.scalar_values.column(k), 1.0);
            }
        }
        worst = worst.max(lhs.amax());
    }
    worst
}

/// Cellwise residual of the projected-test-function identity for `v`.
pub fn projected_test_residual(
    space: &WgSpace,
    op: &WeakDivOperator,
    v: &FluxField,
    w: &(impl Fn(Point) -> f64 + Sync),
    grad_w: impl Fn(Point) -> Vector,
) -> f64 {
    let d = op.apply(v).expect("layouts match");
    let mut worst = 0.0f64;
    for c in 0..space.mesh().num_cells() {
        let data = space.cell(c);
        let nk = data.basis.flux.len();
        let qw = project_scalar_cell(space, c, w);
        let lhs = d.cell_vector(c).dot(&(&data.scalar_mass * &qw));
        let (vx, vy) = (&v.interior(c)[..nk], &v.interior(c)[nk..]);
        let mut rhs = 0.0;
        for (k, (p, wt)) in data.rule.points.iter().zip(&data.rule.weights).enumerate() {
            let phi = data.flux_values.column(k);
            let v0 = Vector::new(phi.iter().zip(vx).map(|(a, b)| a * b).sum(), phi.iter().zip(vy).map(|(a, b)| a * b).sum());
            rhs -= wt * v0.dot(&grad_w(*p));
        }
        for side in &data.sides {
            let edge = space.edge(side.edge);
            let vb = v.edge(side.edge);
            for (k, (p, wt)) in edge.rule.points.iter().zip(&edge.rule.weights).enumerate() {
                let phi = side.flux_values.column(k);
                let v0n = side.outward_normal.x * phi.iter().zip(vx).map(|(a, b)| a * b).sum::<f64>()
                    + side.outward_normal.y * phi.iter().zip(vy).map(|(a, b)| a * b).sum::<f64>();
                let vbn = side.sign * edge.values.column(k).iter().zip(vb).map(|(a, b)| a * b).sum::<f64>();
                let wp = w(*p);
                let qwp = side.scalar_values.column(k).dot(&qw);
                rhs += wt * ((v0n - vbn) * (wp - qwp) + vbn * wp);
            }
        }
        worst = worst.max((lhs - rhs).abs());
    }
    worst
}

/// The witness `v` for `phi`: `v_0 = -grad phi`, `v_b = h_e^{-1} Q_b [phi]`.
pub fn inf_sup_witness(space: &WgSpace, phi: &ScalarField) -> FluxField {
    let mut v = FluxField::zeros(space.dofs());
    for c in 0..space.mesh().num_cells() {
        let basis = &space.cell(c).basis.scalar;
        let coeffs = phi.cell(c).to_vec();
        let grad = |p: Point| {
            let (gx, gy) = basis.gradients_at(p);
            -Vector::new(gx.iter().zip(&coeffs).map(|(a, b)| a * b).sum(), gy.iter().zip(&coeffs).map(|(a, b)| a * b).sum())
        };
        let v0 = project_q0_cell(space, c, &grad);
        v.interior_mut(c).copy_from_slice(v0.as_slice());
    }
    for e in 0..space.mesh().num_edges() {
        let vb = jump_moments(space, phi, e) / space.mesh().edge_length(e);
        v.edge_mut(e).copy_from_slice(vb.as_slice());
    }
    v
}

/// Witness equality and norm ratio over `samples` random `phi`.
pub fn witness_stats(space: &WgSpace, system: &SaddleSystem, samples: usize, seed: u64) -> WitnessStats {
    let gram = h1h_gram(space);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = WitnessStats { max_relative_residual: 0.0, max_ratio: 0.0, min_ratio: f64::INFINITY };
    for _ in 0..samples {
        let phi = DVector::from_fn(space.dofs().num_scalar(), |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let phi = ScalarField::from_vector(space.dofs(), phi).expect("layout");
        let v = inf_sup_witness(space, &phi);
        let b = phi.values().dot(&spmv(&system.b, v.values()));
        let norm = gram_norm(&gram, phi.values());
        let norm2 = norm * norm;
        stats.max_relative_residual = stats.max_relative_residual.max((b - norm2).abs() / norm2);
        let ratio = triple_bar_norm(system, &v) / norm;
        stats.max_ratio = stats.max_ratio.max(ratio);
        stats.min_ratio = stats.min_ratio.min(ratio);
    }
    stats
}

/// `max(0, ||q.n - Q_b(q.n)||_e - ||q.n - (Q_0 q).n||_e)` over cell sides.
pub fn edge_bound_violation(space: &WgSpace, q: &(impl Fn(Point) -> Vector + Sync)) -> f64 {
    let mut worst = 0.0f64;
    for c in 0..space.mesh().num_cells() {
        let data = space.cell(c);
        let nk = data.basis.flux.len();
        let q0 = project_q0_cell(space, c, q);
        for side in &data.sides {
            let edge = space.edge(side.edge);
            let n = side.outward_normal;
            let qb = project_edge_scalar(space, side.edge, |p| q(p).dot(&n));
            let (mut lhs, mut rhs) = (0.0, 0.0);
            for (k, (p, w)) in edge.rule.points.iter().zip(&edge.rule.weights).enumerate() {
                let phi = side.flux_values.column(k);
                let qn = q(*p).dot(&n);
                let q0n = n.x * phi.dot(&q0.rows(0, nk)) + n.y * phi.dot(&q0.rows(nk, nk));
                lhs += w * (qn - edge.values.column(k).dot(&qb)).powi(2);
                rhs += w * (qn - q0n).powi(2);
            }
            worst = worst.max(lhs.sqrt() - rhs.sqrt());
        }
    }
    worst.max(0.0)
}

/// `max_T |int_{dT} q_b.n - int_T f| / (1 + ||f||_{L1(T)})`.
pub fn conservation_residual(space: &WgSpace, solution: &Solution, f: impl Fn(Point) -> f64) -> f64 {
    let mut worst = 0.0f64;
    for c in 0..space.mesh().num_cells() {
        let data = space.cell(c);
        let (mut source, mut l1) = (0.0, 0.0);
        for (p, w) in data.rule.points.iter().zip(&data.rule.weights) {
            let v = f(*p);
            source += w * v;
            l1 += w * v.abs();
        }
        let mut flux = 0.0;
        for side in &data.sides {
            let edge = space.edge(side.edge);
            let coeffs = solution.q.edge(side.edge);
            for (k, w) in edge.rule.weights.iter().enumerate() {
                flux += side.sign * w * edge.values.column(k).iter().zip(coeffs).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        worst = worst.max((flux - source).abs() / (1.0 + l1));
    }
    worst
}

/// Evaluates every identity on `mesh` for degree `k`.
pub fn check_identities(mesh: &PolyMesh, k: usize, data: &IdentityData, options: &IdentityOptions) -> Result<IdentityReport> {
    let space = WgSpace::new(mesh.clone(), k, SpaceOptions::with_quadrature_degree(options.quadrature_degree))?;
    let op = build_weakdiv(&space);
    let ms = &data.manufactured;
    let system = assemble_system_with(&space, &op, options.rho, ms.alpha(), &|p| ms.f(p), &|p| ms.g(p))?;
    let threshold = quadrature_threshold();
    let (q, div_q, w, grad_w) = (&*data.q, &*data.div_q, &*data.w, &*data.grad_w);

    let mut items = Vec::new();
    items.push(IdentityResidual::new(COMMUTING, commuting_residual(&space, &op, &q, div_q), threshold, mesh.num_cells()));

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut projected = 0.0f64;
    for _ in 0..options.samples.max(1) {
        let v = DVector::from_fn(space.dofs().num_flux(), |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let v = FluxField::from_vector(space.dofs(), v)?;
        projected = projected.max(projected_test_residual(&space, &op, &v, &w, grad_w));
    }
    items.push(IdentityResidual::new(PROJECTED_TEST, projected, threshold, mesh.num_cells() * options.samples.max(1)));

    let witness = witness_stats(&space, &system, options.samples.max(1), options.seed.wrapping_add(1));
    items.push(IdentityResidual::new(WITNESS, witness.max_relative_residual, 1e-11, options.samples.max(1)));

    items.push(IdentityResidual::new(EDGE_BOUND, edge_bound_violation(&space, &q), threshold, mesh.num_edges()));

    let solution = solve(&system, &options.solver)?;
    items.push(IdentityResidual::new(
        CONSERVATION,
        conservation_residual(&space, &solution, |p| ms.f(p)),
        1e-11,
        mesh.num_cells(),
    ));

    Ok(IdentityReport { degree: k, num_cells: mesh.num_cells(), items, witness })
}
