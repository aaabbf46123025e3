//! Polynomial bases on cells and edges.
//!
//! Cell bases start from monomials in the scaled coordinates
//! `((x - x_T) / h_T, (y - y_T) / h_T)` about the vertex centroid and are
//! optionally orthonormalized in `L2(T)` by a (repeated) Cholesky
//! Gram–Schmidt. The first basis function is always a multiple of the
//! constant. Edge bases are Legendre polynomials in the arc-length
//! parameter, normalized in `L2(e)`.

use nalgebra::{DMatrix, DVector};

use crate::mesh::PolyMesh;
use crate::quadrature::{fan_rule, QuadratureRule};
use crate::{Error, Point, Result};

/// `dim P_m` in two variables.
pub fn polynomial_dim(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

/// Exponents `(a, b)` of `x^a y^b`, graded by total degree.
pub fn monomial_exponents(degree: usize) -> Vec<(i32, i32)> {
    let mut out = Vec::with_capacity(polynomial_dim(degree));
    for m in 0..=degree as i32 {
        for b in 0..=m {
            out.push((m - b, b));
        }
    }
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Orthonormalization {
    /// Orthonormalize spaces of degree one and higher.
    #[default]
    Auto,
    Always,
    Never,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BasisOptions {
    pub orthonormalize: Orthonormalization,
}

impl BasisOptions {
    fn applies_to(&self, degree: usize) -> bool {
        match self.orthonormalize {
            Orthonormalization::Auto => degree >= 1,
            Orthonormalization::Always => true,
            Orthonormalization::Never => false,
        }
    }
}

/// Basis of `P_m(T)` written as linear combinations of scaled monomials.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialBasis {
    pub center: Point,
    pub scale: f64,
    pub degree: usize,
    exponents: Vec<(i32, i32)>,
    /// Row `i` holds the monomial coefficients of basis function `i`.
    coefficients: DMatrix<f64>,
}

impl PolynomialBasis {
    pub fn scaled_monomials(center: Point, scale: f64, degree: usize) -> Self {
        let n = polynomial_dim(degree);
        PolynomialBasis {
            center,
            scale,
            degree,
            exponents: monomial_exponents(degree),
            coefficients: DMatrix::identity(n, n),
        }
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    fn local(&self, p: Point) -> (f64, f64) {
        ((p.x - self.center.x) / self.scale, (p.y - self.center.y) / self.scale)
    }

    pub fn monomials_at(&self, p: Point) -> DVector<f64> {
        let (xi, eta) = self.local(p);
        DVector::from_iterator(self.len(), self.exponents.iter().map(|&(a, b)| xi.powi(a) * eta.powi(b)))
    }

    fn monomial_gradients_at(&self, p: Point) -> (DVector<f64>, DVector<f64>) {
        let (xi, eta) = self.local(p);
        let n = self.len();
        let mut gx = DVector::zeros(n);
        let mut gy = DVector::zeros(n);
        for (i, &(a, b)) in self.exponents.iter().enumerate() {
            if a > 0 {
                gx[i] = a as f64 * xi.powi(a - 1) * eta.powi(b) / self.scale;
            }
            if b > 0 {
                gy[i] = b as f64 * xi.powi(a) * eta.powi(b - 1) / self.scale;
            }
        }
        (gx, gy)
    }

    pub fn values_at(&self, p: Point) -> DVector<f64> {
        &self.coefficients * self.monomials_at(p)
    }

    pub fn gradients_at(&self, p: Point) -> (DVector<f64>, DVector<f64>) {
        let (gx, gy) = self.monomial_gradients_at(p);
        (&self.coefficients * gx, &self.coefficients * gy)
    }

    /// Evaluates `sum_i c_i phi_i` at `p`.
    pub fn evaluate(&self, coefficients: &[f64], p: Point) -> f64 {
        self.values_at(p).iter().zip(coefficients).map(|(v, c)| v * c).sum()
    }

    pub fn mass_matrix(&self, rule: &QuadratureRule) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let v = self.values_at(*p);
            m.ger(*w, &v, &v, 1.0);
        }
        m
    }

    /// `L2`-orthonormal basis of the same space.
    pub fn orthonormalized(&self, rule: &QuadratureRule) -> Option<Self> {
        let mut out = self.clone();
        // a second sweep removes the round-off left by the first
        for _ in 0..2 {
            let gram = out.mass_matrix(rule);
            let l = gram.cholesky()?.l();
            let l_inv = l.solve_lower_triangular(&DMatrix::identity(out.len(), out.len()))?;
            out.coefficients = l_inv * out.coefficients;
        }
        Some(out)
    }

    /// Expresses coefficients in this basis in terms of the raw scaled monomials.
    pub fn to_monomial_coefficients(&self, coefficients: &DVector<f64>) -> DVector<f64> {
        self.coefficients.transpose() * coefficients
    }
}

/// Cell bases for the flux components (`P_k`) and the scalar (`P_{k+1}`).
#[derive(Clone, Debug, PartialEq)]
pub struct ElementBasis {
    pub cell: usize,
    pub degree: usize,
    pub flux: PolynomialBasis,
    pub scalar: PolynomialBasis,
}

impl ElementBasis {
    /// `dim [P_k(T)]^2`.
    pub fn vector_len(&self) -> usize {
        2 * self.flux.len()
    }

    /// Value of vector basis function `i`: components `0..n` are `(p_i, 0)`,
    /// `n..2n` are `(0, p_{i-n})`.
    pub fn vector_component(&self, i: usize) -> (usize, usize) {
        let n = self.flux.len();
        if i < n {
            (0, i)
        } else {
            (1, i - n)
        }
    }

    pub fn scalar_mass_condition_number(&self, rule: &QuadratureRule) -> f64 {
        let eig = self.scalar.mass_matrix(rule).symmetric_eigen().eigenvalues;
        eig.max() / eig.min()
    }
}

pub fn build_element_basis(mesh: &PolyMesh, cell: usize, degree: usize, options: BasisOptions) -> Result<ElementBasis> {
    let geometry = mesh.geometry(cell)?;
    let rule = fan_rule(&geometry.fan_triangles, 2 * (degree + 1))?;
    let build = |m: usize| -> Result<PolynomialBasis> {
        let raw = PolynomialBasis::scaled_monomials(geometry.centroid, geometry.diameter, m);
        if options.applies_to(m) {
            raw.orthonormalized(&rule).ok_or_else(|| Error::Geometry {
                cell,
                message: format!("mass matrix of P_{m} is not positive definite"),
            })
        } else {
            Ok(raw)
        }
    };
    Ok(ElementBasis { cell, degree, flux: build(degree)?, scalar: build(degree + 1)? })
}

/// Legendre basis of `P_k(e)`, orthonormal in `L2(e)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeBasis {
    pub edge: usize,
    pub degree: usize,
    pub length: f64,
}

impl EdgeBasis {
    pub fn new(mesh: &PolyMesh, edge: usize, degree: usize) -> Self {
        EdgeBasis { edge, degree, length: mesh.edge_length(edge) }
    }

    pub fn len(&self) -> usize {
        self.degree + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Values at the point a fraction `t` of the way along the edge.
    pub fn values_at(&self, t: f64) -> DVector<f64> {
        let x = 2.0 * t - 1.0;
        let mut out = DVector::zeros(self.len());
        let (mut p0, mut p1) = (1.0, x);
        for j in 0..self.len() {
            let p = match j {
                0 => 1.0,
                1 => x,
                _ => {
                    let k = j as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                    p2
                }
            };
            out[j] = ((2 * j + 1) as f64 / self.length).sqrt() * p;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_perturbed_poly_mesh, generate_uniform_quad_mesh, Rect};
    use crate::quadrature::{cell_quadrature, edge_quadrature};

    #[test]
    fn dimensions() {
        let mesh = generate_uniform_quad_mesh(1, Rect::unit()).unwrap();
        for k in 0..4 {
            let b = build_element_basis(&mesh, 0, k, BasisOptions::default()).unwrap();
            assert_eq!(b.flux.len(), (k + 1) * (k + 2) / 2);
            assert_eq!(b.vector_len(), (k + 1) * (k + 2));
            assert_eq!(b.scalar.len(), (k + 2) * (k + 3) / 2);
        }
        let b = build_element_basis(&mesh, 0, 0, BasisOptions::default()).unwrap();
        assert_eq!(b.flux.values_at(Point::new(0.3, 0.9))[0], 1.0);
        assert_eq!(b.scalar.len(), 3);
    }

    #[test]
    fn raw_p1_mass_matrix_on_unit_square() {
        let mesh = generate_uniform_quad_mesh(1, Rect::unit()).unwrap();
        let options = BasisOptions { orthonormalize: Orthonormalization::Never };
        let b = build_element_basis(&mesh, 0, 0, options).unwrap();
        let rule = cell_quadrature(&mesh, 0, 4).unwrap();
        let m = b.scalar.mass_matrix(&rule);
        // int_0^1 (x - 1/2)^2 dx = 1/12, divided by h_T^2 = 2
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0 / 24.0, 1.0 / 24.0]));
        assert!((m - expected).amax() < 1e-15);
    }

    #[test]
    fn orthonormal_gram_is_identity() {
        let mesh = generate_perturbed_poly_mesh(3, 0.3, 4, Rect::unit()).unwrap();
        for k in 0..4 {
            for c in 0..mesh.num_cells() {
                let b = build_element_basis(&mesh, c, k, BasisOptions::default()).unwrap();
                let rule = cell_quadrature(&mesh, c, 2 * k + 2).unwrap();
                let gram = b.scalar.mass_matrix(&rule);
                assert!((gram - DMatrix::identity(b.scalar.len(), b.scalar.len())).amax() < 1e-10);
                assert!(b.scalar_mass_condition_number(&rule) < 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn raw_mass_conditioning_is_scale_independent() {
        let options = BasisOptions { orthonormalize: Orthonormalization::Never };
        let cond = |n: usize| {
            let mesh = generate_uniform_quad_mesh(n, Rect::unit()).unwrap();
            let b = build_element_basis(&mesh, 0, 2, options).unwrap();
            b.scalar_mass_condition_number(&cell_quadrature(&mesh, 0, 6).unwrap())
        };
        let (c1, c8) = (cond(1), cond(8));
        assert!((c1 - c8).abs() < 1e-6 * c1);
    }

    #[test]
    fn edge_mass_is_identity() {
        let mesh = generate_perturbed_poly_mesh(2, 0.2, 1, Rect::unit()).unwrap();
        for k in 0..4 {
            for e in 0..mesh.num_edges() {
                let basis = EdgeBasis::new(&mesh, e, k);
                let rule = edge_quadrature(&mesh, e, 2 * k).unwrap();
                let mut gram = DMatrix::zeros(k + 1, k + 1);
                for (t, w) in rule.parameters.iter().zip(&rule.weights) {
                    let v = basis.values_at(*t);
                    gram.ger(*w, &v, &v, 1.0);
                }
                assert!((gram - DMatrix::identity(k + 1, k + 1)).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn orthonormal_basis_spans_raw_monomials() {
        let mesh = generate_uniform_quad_mesh(1, Rect::unit()).unwrap();
        let b = build_element_basis(&mesh, 0, 0, BasisOptions::default()).unwrap();
        // f = 1: moments in the orthonormal basis mapped back to raw monomials
        let rule = cell_quadrature(&mesh, 0, 4).unwrap();
        let mut moments = DVector::zeros(3);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            moments += b.scalar.values_at(*p) * *w;
        }
        let raw = b.scalar.coefficients().clone().try_inverse().unwrap() * moments;
        assert!((raw - DVector::from_vec(vec![1.0, 0.0, 0.0])).amax() < 1e-14);
    }
}
