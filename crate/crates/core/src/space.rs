//! The discrete spaces `V_h` and `W_h` on a mesh: cached per-cell and
//! per-edge bases and quadrature data, the global degree-of-freedom layout,
//! and the coefficient vectors living on it.

use std::ops::Range;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::basis::{build_element_basis, polynomial_dim, BasisOptions, EdgeBasis, ElementBasis};
use crate::mesh::{ElementGeometry, PolyMesh};
use crate::quadrature::{edge_quadrature, fan_rule, QuadratureRule};
use crate::{Error, Point, Result, Vector};

/// Layout of the global unknowns.
///
/// Flux unknowns: all interior `[P_k]^2` blocks (cell by cell), then all edge
/// `P_k(e)` blocks (edge by edge). Scalar unknowns: one `P_{k+1}` block per cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DofMap {
    pub num_cells: usize,
    pub num_edges: usize,
    pub degree: usize,
}

impl DofMap {
    pub fn interior_len(&self) -> usize {
        2 * polynomial_dim(self.degree)
    }

    pub fn edge_len(&self) -> usize {
        self.degree + 1
    }

    pub fn scalar_len(&self) -> usize {
        polynomial_dim(self.degree + 1)
    }

    pub fn interior_range(&self, cell: usize) -> Range<usize> {
        let start = cell * self.interior_len();
        start..start + self.interior_len()
    }

    pub fn edge_range(&self, edge: usize) -> Range<usize> {
        let start = self.num_cells * self.interior_len() + edge * self.edge_len();
        start..start + self.edge_len()
    }

    pub fn scalar_range(&self, cell: usize) -> Range<usize> {
        let start = cell * self.scalar_len();
        start..start + self.scalar_len()
    }

    /// `N_q`.
    pub fn num_flux(&self) -> usize {
        self.num_cells * self.interior_len() + self.num_edges * self.edge_len()
    }

    /// `N_u`.
    pub fn num_scalar(&self) -> usize {
        self.num_cells * self.scalar_len()
    }
}

/// Quadrature degrees and basis construction choices.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SpaceOptions {
    pub basis: BasisOptions,
    /// Cell rule exactness; defaults to `2(k + 1) + 2`.
    pub cell_quadrature_degree: Option<usize>,
    /// Edge rule exactness; defaults to `2k + 2`.
    pub edge_quadrature_degree: Option<usize>,
}

impl SpaceOptions {
    /// Options with both rules raised to at least `degree`.
    pub fn with_quadrature_degree(degree: usize) -> Self {
        SpaceOptions { cell_quadrature_degree: Some(degree), edge_quadrature_degree: Some(degree), ..Default::default() }
    }
}

/// A side of a cell with the cell's basis functions sampled on the edge rule.
#[derive(Clone, Debug)]
pub struct SideData {
    pub edge: usize,
    /// `n_e . n_T`.
    pub sign: f64,
    pub outward_normal: Vector,
    pub length: f64,
    /// `P_k(T)` values, one column per edge quadrature point.
    pub flux_values: DMatrix<f64>,
    /// `P_{k+1}(T)` values.
    pub scalar_values: DMatrix<f64>,
}

#[derive(Clone, Debug)]
pub struct CellData {
    pub geometry: ElementGeometry,
    pub basis: ElementBasis,
    pub rule: QuadratureRule,
    /// `P_k(T)` values, one column per quadrature point.
    pub flux_values: DMatrix<f64>,
    pub scalar_values: DMatrix<f64>,
    pub scalar_grad_x: DMatrix<f64>,
    pub scalar_grad_y: DMatrix<f64>,
    pub flux_mass: DMatrix<f64>,
    pub scalar_mass: DMatrix<f64>,
    pub sides: Vec<SideData>,
}

impl CellData {
    pub fn diameter(&self) -> f64 {
        self.geometry.diameter
    }
}

#[derive(Clone, Debug)]
pub struct EdgeData {
    pub basis: EdgeBasis,
    pub rule: QuadratureRule,
    /// Edge basis values, one column per quadrature point.
    pub values: DMatrix<f64>,
}

/// `V_h x W_h` on a mesh for a fixed degree `k`.
#[derive(Clone, Debug)]
pub struct WgSpace {
    mesh: Arc<PolyMesh>,
    degree: usize,
    dofs: DofMap,
    cells: Vec<CellData>,
    edges: Vec<EdgeData>,
    cell_quadrature_degree: usize,
    edge_quadrature_degree: usize,
}

fn sample(n: usize, points: &[Point], f: impl Fn(Point) -> DVector<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, points.len());
    for (j, p) in points.iter().enumerate() {
        m.set_column(j, &f(*p));
    }
    m
}

fn weighted_gram(values: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let weighted = values * DMatrix::from_diagonal(&DVector::from_column_slice(weights));
    weighted * values.transpose()
}

impl WgSpace {
    pub fn new(mesh: impl Into<Arc<PolyMesh>>, degree: usize, options: SpaceOptions) -> Result<Self> {
        let mesh = mesh.into();
        let cell_degree = options.cell_quadrature_degree.unwrap_or(2 * (degree + 1) + 2).max(2 * (degree + 1));
        let edge_degree = options.edge_quadrature_degree.unwrap_or(2 * degree + 2).max(2 * degree + 2);

        let edges: Vec<EdgeData> = (0..mesh.num_edges())
            .into_par_iter()
            .map(|e| {
                let basis = EdgeBasis::new(&mesh, e, degree);
                let rule = edge_quadrature(&mesh, e, edge_degree)?;
                let mut values = DMatrix::zeros(basis.len(), rule.len());
                for (j, t) in rule.parameters.iter().enumerate() {
                    values.set_column(j, &basis.values_at(*t));
                }
                Ok(EdgeData { basis, rule, values })
            })
            .collect::<Result<_>>()?;

        let cells: Vec<CellData> = (0..mesh.num_cells())
            .into_par_iter()
            .map(|c| {
                let geometry = mesh.geometry(c)?;
                let basis = build_element_basis(&mesh, c, degree, options.basis)?;
                let rule = fan_rule(&geometry.fan_triangles, cell_degree)?;
                let nk = basis.flux.len();
                let ns = basis.scalar.len();
                let flux_values = sample(nk, &rule.points, |p| basis.flux.values_at(p));
                let scalar_values = sample(ns, &rule.points, |p| basis.scalar.values_at(p));
                let scalar_grad_x = sample(ns, &rule.points, |p| basis.scalar.gradients_at(p).0);
                let scalar_grad_y = sample(ns, &rule.points, |p| basis.scalar.gradients_at(p).1);
                let flux_mass = weighted_gram(&flux_values, &rule.weights);
                let scalar_mass = weighted_gram(&scalar_values, &rule.weights);
                let sides = geometry
                    .sides
                    .iter()
                    .map(|side| {
                        let points = &edges[side.edge].rule.points;
                        SideData {
                            edge: side.edge,
                            sign: side.sign,
                            outward_normal: side.outward_normal,
                            length: side.length,
                            flux_values: sample(nk, points, |p| basis.flux.values_at(p)),
                            scalar_values: sample(ns, points, |p| basis.scalar.values_at(p)),
                        }
                    })
                    .collect();
                Ok(CellData {
                    geometry,
                    basis,
                    rule,
                    flux_values,
                    scalar_values,
                    scalar_grad_x,
                    scalar_grad_y,
                    flux_mass,
                    scalar_mass,
                    sides,
                })
            })
            .collect::<Result<_>>()?;

        let dofs = DofMap { num_cells: mesh.num_cells(), num_edges: mesh.num_edges(), degree };
        Ok(WgSpace {
            mesh,
            degree,
            dofs,
            cells,
            edges,
            cell_quadrature_degree: cell_degree,
            edge_quadrature_degree: edge_degree,
        })
    }

    pub fn mesh(&self) -> &PolyMesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> Arc<PolyMesh> {
        Arc::clone(&self.mesh)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dofs(&self) -> DofMap {
        self.dofs
    }

    pub fn cell(&self, cell: usize) -> &CellData {
        &self.cells[cell]
    }

    pub fn cells(&self) -> &[CellData] {
        &self.cells
    }

    pub fn edge(&self, edge: usize) -> &EdgeData {
        &self.edges[edge]
    }

    pub fn edges(&self) -> &[EdgeData] {
        &self.edges
    }

    pub fn cell_quadrature_degree(&self) -> usize {
        self.cell_quadrature_degree
    }

    pub fn edge_quadrature_degree(&self) -> usize {
        self.edge_quadrature_degree
    }

    /// Global flux indices touched by a cell: its interior block followed by
    /// the edge blocks of its sides in counter-clockwise order.
    pub fn local_flux_dofs(&self, cell: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.dofs.interior_range(cell).collect();
        for side in &self.cells[cell].sides {
            out.extend(self.dofs.edge_range(side.edge));
        }
        out
    }
}

/// A member of `V_h`: interior `[P_k]^2` coefficients per cell and the scalar
/// multiplier of `n_e` per edge, laid out by [`DofMap`].
#[derive(Clone, Debug, PartialEq)]
pub struct FluxField {
    dofs: DofMap,
    values: DVector<f64>,
}

impl FluxField {
    pub fn zeros(dofs: DofMap) -> Self {
        FluxField { dofs, values: DVector::zeros(dofs.num_flux()) }
    }

    pub fn from_vector(dofs: DofMap, values: DVector<f64>) -> Result<Self> {
        if values.len() != dofs.num_flux() {
            return Err(Error::LayoutMismatch { expected: dofs.num_flux(), actual: values.len() });
        }
        Ok(FluxField { dofs, values })
    }

    pub fn dofs(&self) -> DofMap {
        self.dofs
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut DVector<f64> {
        &mut self.values
    }

    pub fn into_values(self) -> DVector<f64> {
        self.values
    }

    pub fn interior(&self, cell: usize) -> &[f64] {
        &self.values.as_slice()[self.dofs.interior_range(cell)]
    }

    pub fn interior_mut(&mut self, cell: usize) -> &mut [f64] {
        let r = self.dofs.interior_range(cell);
        &mut self.values.as_mut_slice()[r]
    }

    pub fn edge(&self, edge: usize) -> &[f64] {
        &self.values.as_slice()[self.dofs.edge_range(edge)]
    }

    pub fn edge_mut(&mut self, edge: usize) -> &mut [f64] {
        let r = self.dofs.edge_range(edge);
        &mut self.values.as_mut_slice()[r]
    }

    /// Local coefficient vector in the order of [`WgSpace::local_flux_dofs`].
    pub fn gather(&self, space: &WgSpace, cell: usize) -> DVector<f64> {
        let idx = space.local_flux_dofs(cell);
        DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.values[i]))
    }

    /// The interior value `v_0` at a point of `cell`.
    pub fn interior_value(&self, space: &WgSpace, cell: usize, p: Point) -> Vector {
        let basis = &space.cell(cell).basis.flux;
        let c = self.interior(cell);
        let n = basis.len();
        let v = basis.values_at(p);
        Vector::new(v.dot(&DVector::from_column_slice(&c[..n])), v.dot(&DVector::from_column_slice(&c[n..])))
    }
}

/// A member of `W_h`: `P_{k+1}` coefficients per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    dofs: DofMap,
    values: DVector<f64>,
}

impl ScalarField {
    pub fn zeros(dofs: DofMap) -> Self {
        ScalarField { dofs, values: DVector::zeros(dofs.num_scalar()) }
    }

    pub fn from_vector(dofs: DofMap, values: DVector<f64>) -> Result<Self> {
        if values.len() != dofs.num_scalar() {
            return Err(Error::LayoutMismatch { expected: dofs.num_scalar(), actual: values.len() });
        }
        Ok(ScalarField { dofs, values })
    }

    pub fn dofs(&self) -> DofMap {
        self.dofs
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut DVector<f64> {
        &mut self.values
    }

    pub fn into_values(self) -> DVector<f64> {
        self.values
    }

    pub fn cell(&self, cell: usize) -> &[f64] {
        &self.values.as_slice()[self.dofs.scalar_range(cell)]
    }

    pub fn cell_mut(&mut self, cell: usize) -> &mut [f64] {
        let r = self.dofs.scalar_range(cell);
        &mut self.values.as_mut_slice()[r]
    }

    pub fn cell_vector(&self, cell: usize) -> DVector<f64> {
        DVector::from_column_slice(self.cell(cell))
    }

    pub fn value(&self, space: &WgSpace, cell: usize, p: Point) -> f64 {
        space.cell(cell).basis.scalar.evaluate(self.cell(cell), p)
    }
}
