//! Bilinear forms, load functionals and the global saddle-point system
//!
//! ```text
//!   [ A_s  -B^T ] [q]   [G]
//!   [ B     0   ] [u] = [F]
//! ```
//!
//! with `a(eta, v) = (alpha eta_0, v_0)`,
//! `s(eta, v) = rho sum_T h_T <(eta_0 - eta_b) . n, (v_0 - v_b) . n>_{dT}`,
//! `A_s = a + s`, `b(v, w) = (div_w v, w)`, `G = <g, v_b . n>_{dOmega}` and
//! `F = (f, w)`.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix2};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use rayon::prelude::*;

use crate::space::{DofMap, WgSpace};
use crate::weakdiv::{build_weakdiv, WeakDivOperator};
use crate::{Error, Point, Result};

/// A symmetric, uniformly positive definite coefficient `alpha(x)`.
#[derive(Clone)]
pub struct CoefficientField {
    func: Arc<dyn Fn(Point) -> Matrix2<f64> + Send + Sync>,
    lower_bound: f64,
    name: String,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField").field("name", &self.name).field("lower_bound", &self.lower_bound).finish()
    }
}

impl CoefficientField {
    /// `lower_bound` is the declared uniform lower bound on the smallest
    /// eigenvalue; it is checked at every quadrature point during assembly.
    pub fn new(
        name: impl Into<String>,
        lower_bound: f64,
        func: impl Fn(Point) -> Matrix2<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(lower_bound > 0.0 && lower_bound.is_finite()) {
            return Err(Error::InvalidArgument(format!("coefficient lower bound must be positive, got {lower_bound}")));
        }
        Ok(CoefficientField { func: Arc::new(func), lower_bound, name: name.into() })
    }

    pub fn identity() -> Self {
        Self::constant(Matrix2::identity()).expect("identity is SPD")
    }

    pub fn scaled(c: f64) -> Result<Self> {
        Self::constant(Matrix2::identity() * c)
    }

    pub fn constant(m: Matrix2<f64>) -> Result<Self> {
        let bound = m.symmetric_eigenvalues().min();
        if !(bound > 0.0) || m[(0, 1)] != m[(1, 0)] {
            return Err(Error::InvalidArgument(format!("constant coefficient {m} is not symmetric positive definite")));
        }
        Self::new("constant", bound, move |_| m)
    }

    /// `[[2 + x, y/2], [y/2, 2 + y]]`, uniformly SPD on the unit square.
    pub fn variable() -> Self {
        Self::new("variable", 1.5, |p: Point| Matrix2::new(2.0 + p.x, 0.5 * p.y, 0.5 * p.y, 2.0 + p.y))
            .expect("positive bound")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    pub fn eval(&self, p: Point) -> Matrix2<f64> {
        (self.func)(p)
    }

    /// Evaluates `alpha(p)` and checks symmetry and the eigenvalue bound.
    pub fn checked(&self, cell: usize, p: Point) -> Result<Matrix2<f64>> {
        let m = self.eval(p);
        if m[(0, 1)] != m[(1, 0)] {
            return Err(Error::Coefficient { cell, eigenvalue: f64::NAN, bound: self.lower_bound });
        }
        let eigenvalue = m.symmetric_eigenvalues().min();
        if !(eigenvalue >= self.lower_bound) {
            return Err(Error::Coefficient { cell, eigenvalue, bound: self.lower_bound });
        }
        Ok(m)
    }
}

/// Local `a` matrix over the interior block `[x-coefficients, y-coefficients]`.
pub fn local_a(space: &WgSpace, cell: usize, alpha: &CoefficientField) -> Result<DMatrix<f64>> {
    let data = space.cell(cell);
    let nk = data.basis.flux.len();
    let mut a = DMatrix::zeros(2 * nk, 2 * nk);
    for (q, (p, w)) in data.rule.points.iter().zip(&data.rule.weights).enumerate() {
        let m = alpha.checked(cell, *p)?;
        let col = data.flux_values.column(q);
        for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            a.view_mut((r * nk, c * nk), (nk, nk)).ger(w * m[(r, c)], &col, &col, 1.0);
        }
    }
    Ok(a)
}

/// Local `s` matrix over [`WgSpace::local_flux_dofs`], without the factor `rho`.
pub fn local_s(space: &WgSpace, cell: usize) -> DMatrix<f64> {
    let data = space.cell(cell);
    let nk = data.basis.flux.len();
    let ne = space.dofs().edge_len();
    let n = 2 * nk + ne * data.sides.len();
    let h = data.diameter();
    let mut s = DMatrix::zeros(n, n);
    let mut r = DVector::zeros(n);
    for (k, side) in data.sides.iter().enumerate() {
        let edge = space.edge(side.edge);
        let normal = side.outward_normal;
        for (q, w) in edge.rule.weights.iter().enumerate() {
            r.fill(0.0);
            let p = side.flux_values.column(q);
            r.rows_mut(0, nk).axpy(normal.x, &p, 0.0);
            r.rows_mut(nk, nk).axpy(normal.y, &p, 0.0);
            r.rows_mut(2 * nk + k * ne, ne).axpy(-side.sign, &edge.values.column(q), 0.0);
            s.ger(h * w, &r, &r, 1.0);
        }
    }
    s
}

fn scatter(rows: &[usize], cols: &[usize], local: &DMatrix<f64>, coo: &mut CooMatrix<f64>) {
    for (j, &c) in cols.iter().enumerate() {
        for (i, &r) in rows.iter().enumerate() {
            let v = local[(i, j)];
            if v != 0.0 {
                coo.push(r, c, v);
            }
        }
    }
}

/// Global `a`, touching only interior flux dofs.
pub fn assemble_a(space: &WgSpace, alpha: &CoefficientField) -> Result<CsrMatrix<f64>> {
    let n = space.dofs().num_flux();
    let locals: Vec<DMatrix<f64>> =
        (0..space.mesh().num_cells()).into_par_iter().map(|c| local_a(space, c, alpha)).collect::<Result<_>>()?;
    let mut coo = CooMatrix::new(n, n);
    for (c, local) in locals.iter().enumerate() {
        let dofs: Vec<usize> = space.dofs().interior_range(c).collect();
        scatter(&dofs, &dofs, local, &mut coo);
    }
    Ok(CsrMatrix::from(&coo))
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("stabilization parameter rho must be positive, got {rho}")))
    }
}

/// Global `s` for the given `rho > 0`.
pub fn assemble_s(space: &WgSpace, rho: f64) -> Result<CsrMatrix<f64>> {
    check_rho(rho)?;
    let n = space.dofs().num_flux();
    let locals: Vec<DMatrix<f64>> = (0..space.mesh().num_cells()).into_par_iter().map(|c| local_s(space, c) * rho).collect();
    let mut coo = CooMatrix::new(n, n);
    for (c, local) in locals.iter().enumerate() {
        let dofs = space.local_flux_dofs(c);
        scatter(&dofs, &dofs, local, &mut coo);
    }
    Ok(CsrMatrix::from(&coo))
}

/// Global `B` with `B[j, i] = (div_w phi_i, psi_j)`.
pub fn assemble_b(space: &WgSpace, op: &WeakDivOperator) -> Result<CsrMatrix<f64>> {
    let dofs = space.dofs();
    if op.dofs() != dofs {
        return Err(Error::LayoutMismatch { expected: dofs.num_flux(), actual: op.dofs().num_flux() });
    }
    let mut coo = CooMatrix::new(dofs.num_scalar(), dofs.num_flux());
    for (c, local) in op.cells().iter().enumerate() {
        let rows: Vec<usize> = dofs.scalar_range(c).collect();
        scatter(&rows, &local.flux_dofs, &local.moments, &mut coo);
    }
    Ok(CsrMatrix::from(&coo))
}

/// `(G, F)`: `G` is nonzero only on boundary edge dofs.
pub fn assemble_rhs(
    space: &WgSpace,
    f: &(impl Fn(Point) -> f64 + Sync),
    g: &(impl Fn(Point) -> f64 + Sync),
) -> (DVector<f64>, DVector<f64>) {
    let dofs = space.dofs();
    let mesh = space.mesh();
    let mut gv = DVector::zeros(dofs.num_flux());
    for &e in mesh.boundary_edges() {
        let edge = space.edge(e);
        let geometry = &mesh.edges()[e];
        let sign = mesh.sign(geometry.left, e);
        let range = dofs.edge_range(e);
        for (q, (p, w)) in edge.rule.points.iter().zip(&edge.rule.weights).enumerate() {
            gv.rows_mut(range.start, range.len()).axpy(sign * w * g(*p), &edge.values.column(q), 1.0);
        }
    }
    let blocks: Vec<DVector<f64>> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let data = space.cell(c);
            let mut b = DVector::zeros(data.basis.scalar.len());
            for (q, (p, w)) in data.rule.points.iter().zip(&data.rule.weights).enumerate() {
                b.axpy(w * f(*p), &data.scalar_values.column(q), 1.0);
            }
            b
        })
        .collect();
    let mut fv = DVector::zeros(dofs.num_scalar());
    for (c, b) in blocks.iter().enumerate() {
        fv.rows_mut(dofs.scalar_range(c).start, b.len()).copy_from(b);
    }
    (gv, fv)
}

/// `y = A x` for a CSR matrix.
pub fn spmv(a: &CsrMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    assert_eq!(a.ncols(), x.len(), "dimension mismatch in sparse product");
    DVector::from_iterator(
        a.nrows(),
        a.row_iter().map(|row| row.col_indices().iter().zip(row.values()).map(|(&j, v)| v * x[j]).sum::<f64>()),
    )
}

/// `y = A^T x` for a CSR matrix.
pub fn spmv_transpose(a: &CsrMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    assert_eq!(a.nrows(), x.len(), "dimension mismatch in sparse product");
    let mut y = DVector::zeros(a.ncols());
    for (i, row) in a.row_iter().enumerate() {
        for (&j, v) in row.col_indices().iter().zip(row.values()) {
            y[j] += v * x[i];
        }
    }
    y
}

/// The assembled saddle-point system.
#[derive(Clone, Debug)]
pub struct SaddleSystem {
    pub dofs: DofMap,
    pub a_s: CsrMatrix<f64>,
    pub b: CsrMatrix<f64>,
    pub g: DVector<f64>,
    pub f: DVector<f64>,
    pub rho: f64,
}

impl SaddleSystem {
    pub fn num_flux(&self) -> usize {
        self.dofs.num_flux()
    }

    pub fn num_scalar(&self) -> usize {
        self.dofs.num_scalar()
    }

    pub fn size(&self) -> usize {
        self.num_flux() + self.num_scalar()
    }

    /// `vᵀ A_s v`.
    pub fn energy(&self, v: &DVector<f64>) -> f64 {
        v.dot(&spmv(&self.a_s, v))
    }

    /// Block residuals `(||A_s q - B^T u - G||, ||B q - F||)`.
    pub fn residuals(&self, q: &DVector<f64>, u: &DVector<f64>) -> (f64, f64) {
        let r1 = spmv(&self.a_s, q) - spmv_transpose(&self.b, u) - &self.g;
        let r2 = spmv(&self.b, q) - &self.f;
        (r1.norm(), r2.norm())
    }

    /// Largest entry of `|A_s - A_s^T|`.
    pub fn asymmetry(&self) -> f64 {
        let t = self.a_s.transpose();
        let mut worst = 0.0f64;
        for (row, trow) in self.a_s.row_iter().zip(t.row_iter()) {
            let mut lookup = std::collections::HashMap::new();
            for (&j, v) in trow.col_indices().iter().zip(trow.values()) {
                lookup.insert(j, *v);
            }
            for (&j, v) in row.col_indices().iter().zip(row.values()) {
                worst = worst.max((v - lookup.remove(&j).unwrap_or(0.0)).abs());
            }
            for v in lookup.values() {
                worst = worst.max(v.abs());
            }
        }
        worst
    }

    /// Writes `A_s.txt`, `B.txt`, `G.txt` and `F.txt` into `dir`.
    pub fn dump(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_triplets(&self.a_s, &mut std::fs::File::create(dir.join("A_s.txt"))?)?;
        write_triplets(&self.b, &mut std::fs::File::create(dir.join("B.txt"))?)?;
        write_vector_triplets(&self.g, &mut std::fs::File::create(dir.join("G.txt"))?)?;
        write_vector_triplets(&self.f, &mut std::fs::File::create(dir.join("F.txt"))?)?;
        Ok(())
    }
}

/// Coordinate-triplet text: `rows cols nnz` header, then `row col value`.
pub fn write_triplets(m: &CsrMatrix<f64>, out: &mut impl Write) -> Result<()> {
    let mut out = std::io::BufWriter::new(out);
    writeln!(out, "{} {} {}", m.nrows(), m.ncols(), m.nnz())?;
    for (i, row) in m.row_iter().enumerate() {
        for (&j, v) in row.col_indices().iter().zip(row.values()) {
            writeln!(out, "{i} {j} {v:.17e}")?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_vector_triplets(v: &DVector<f64>, out: &mut impl Write) -> Result<()> {
    let mut out = std::io::BufWriter::new(out);
    writeln!(out, "{} 1 {}", v.len(), v.len())?;
    for (i, x) in v.iter().enumerate() {
        writeln!(out, "{i} 0 {x:.17e}")?;
    }
    out.flush()?;
    Ok(())
}

/// Assembles the full system for a given space.
pub fn assemble_system(
    space: &WgSpace,
    rho: f64,
    alpha: &CoefficientField,
    f: &(impl Fn(Point) -> f64 + Sync),
    g: &(impl Fn(Point) -> f64 + Sync),
) -> Result<SaddleSystem> {
    check_rho(rho)?;
    let op = build_weakdiv(space);
    assemble_system_with(space, &op, rho, alpha, f, g)
}

/// As [`assemble_system`], reusing an existing weak divergence operator.
pub fn assemble_system_with(
    space: &WgSpace,
    op: &WeakDivOperator,
    rho: f64,
    alpha: &CoefficientField,
    f: &(impl Fn(Point) -> f64 + Sync),
    g: &(impl Fn(Point) -> f64 + Sync),
) -> Result<SaddleSystem> {
    check_rho(rho)?;
    let dofs = space.dofs();
    let n = dofs.num_flux();
    let locals: Vec<(DMatrix<f64>, DMatrix<f64>)> = (0..space.mesh().num_cells())
        .into_par_iter()
        .map(|c| Ok((local_a(space, c, alpha)?, local_s(space, c) * rho)))
        .collect::<Result<_>>()?;
    let mut coo = CooMatrix::new(n, n);
    for (c, (a, s)) in locals.iter().enumerate() {
        let interior: Vec<usize> = dofs.interior_range(c).collect();
        scatter(&interior, &interior, a, &mut coo);
        let all = space.local_flux_dofs(c);
        scatter(&all, &all, s, &mut coo);
    }
    let a_s = CsrMatrix::from(&coo);
    let b = assemble_b(space, op)?;
    let (g, f) = assemble_rhs(space, f, g);
    Ok(SaddleSystem { dofs, a_s, b, g, f, rho })
}
