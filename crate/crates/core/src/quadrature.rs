//! Gauss rules on segments, triangles and star-shaped polygons.
//!
//! Triangle rules are collapsed (Duffy) tensor products of Gauss–Legendre
//! rules, so every supported exactness degree is available with positive
//! weights. Polygon rules concatenate the triangle rules of the fan.

use crate::mesh::PolyMesh;
use crate::{Error, Point, Result};

/// Largest exactness degree served by the rule builders.
pub const MAX_DEGREE: usize = 40;

/// Relative accuracy the rules are required to deliver on integrands of
/// their exactness degree; identity checks are judged against multiples of it.
pub const QUADRATURE_TOLERANCE: f64 = 1e-12;

/// Exactness degree used by the identity checks for non-polynomial data.
pub const IDENTITY_QUADRATURE_DEGREE: usize = 20;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// For segment rules, the position of each point as a fraction of the
    /// segment length; empty for area rules.
    pub parameters: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(*p)).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

fn check_degree(degree: usize) -> Result<()> {
    if degree > MAX_DEGREE {
        Err(Error::Capability(format!("quadrature exactness {degree} exceeds the supported maximum {MAX_DEGREE}")))
    } else {
        Ok(())
    }
}

/// Gauss rule on the segment `a -> b`, exact for polynomials of the given degree.
pub fn segment_rule(a: Point, b: Point, degree: usize) -> Result<QuadratureRule> {
    check_degree(degree)?;
    let n = degree / 2 + 1;
    let (x, w) = gauss_legendre(n);
    let len = (b - a).norm();
    let parameters: Vec<f64> = x.iter().map(|t| 0.5 * (t + 1.0)).collect();
    Ok(QuadratureRule {
        points: parameters.iter().map(|&t| a + (b - a) * t).collect(),
        weights: w.iter().map(|w| 0.5 * w * len).collect(),
        parameters,
        degree,
    })
}

fn push_triangle(tri: &[Point; 3], degree: usize, points: &mut Vec<Point>, weights: &mut Vec<f64>) {
    let [p0, p1, p2] = *tri;
    let area = ((p1 - p0).perp(&(p2 - p0)) / 2.0).abs();
    // reference point (r, s) = (u, (1 - u) v); Jacobian 1 - u raises the degree in u by one
    let (xu, wu) = gauss_legendre(degree.div_ceil(2) + 1);
    let (xv, wv) = gauss_legendre(degree / 2 + 1);
    for (xu, wu) in xu.iter().zip(&wu) {
        let u = 0.5 * (xu + 1.0);
        for (xv, wv) in xv.iter().zip(&wv) {
            let v = 0.5 * (xv + 1.0);
            let r = u;
            let s = (1.0 - u) * v;
            points.push(p0 + (p1 - p0) * r + (p2 - p0) * s);
            weights.push(2.0 * area * 0.25 * wu * wv * (1.0 - u));
        }
    }
}

pub fn triangle_rule(tri: &[Point; 3], degree: usize) -> Result<QuadratureRule> {
    check_degree(degree)?;
    let (mut points, mut weights) = (Vec::new(), Vec::new());
    push_triangle(tri, degree, &mut points, &mut weights);
    Ok(QuadratureRule { points, weights, parameters: Vec::new(), degree })
}

/// Rule on the union of fan triangles.
pub fn fan_rule(triangles: &[[Point; 3]], degree: usize) -> Result<QuadratureRule> {
    check_degree(degree)?;
    let (mut points, mut weights) = (Vec::new(), Vec::new());
    for tri in triangles {
        push_triangle(tri, degree, &mut points, &mut weights);
    }
    Ok(QuadratureRule { points, weights, parameters: Vec::new(), degree })
}

pub fn cell_quadrature(mesh: &PolyMesh, cell: usize, degree: usize) -> Result<QuadratureRule> {
    let geometry = mesh.geometry(cell)?;
    fan_rule(&geometry.fan_triangles, degree)
}

pub fn edge_quadrature(mesh: &PolyMesh, edge: usize, degree: usize) -> Result<QuadratureRule> {
    let [a, b] = mesh.edge_points(edge);
    segment_rule(a, b, degree)
}
