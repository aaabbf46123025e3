//! Manufactured solutions of `alpha q + grad u = 0`, `div q = f`, `u = -g`.
//!
//! Given `u` with its gradient and Hessian and `alpha` with its first
//! derivatives, `q = -alpha^{-1} grad u` and
//! `f = div q = -sum_ij (d_i M)_ij (grad u)_j - tr(M H)` with
//! `M = alpha^{-1}` and `d_i M = -M (d_i alpha) M`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::forms::CoefficientField;
use crate::space::WgSpace;
use crate::{Error, Point, Result, Vector};

type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(Point) -> Vector + Send + Sync>;
type MatrixFn = Arc<dyn Fn(Point) -> Matrix2<f64> + Send + Sync>;
type DerivativeFn = Arc<dyn Fn(Point) -> [Matrix2<f64>; 2] + Send + Sync>;

/// Built-in solutions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolutionKind {
    /// `u = 0`.
    Zero,
    /// `u = x + y`, `alpha = I`.
    Affine,
    /// `u = sin(pi x) sin(pi y)`, `alpha = I`.
    Sinsin,
    /// `u = sin(pi x) sin(pi y)`, `alpha = [[2 + x, y/2], [y/2, 2 + y]]`.
    SinsinVariable,
    /// `u = x^2 y + cos(pi y)`, `alpha = I`.
    PolyCos,
}

impl SolutionKind {
    pub const ALL: [SolutionKind; 5] =
        [SolutionKind::Zero, SolutionKind::Affine, SolutionKind::Sinsin, SolutionKind::SinsinVariable, SolutionKind::PolyCos];

    pub fn name(self) -> &'static str {
        match self {
            SolutionKind::Zero => "zero",
            SolutionKind::Affine => "affine",
            SolutionKind::Sinsin => "sinsin",
            SolutionKind::SinsinVariable => "sinsin-variable",
            SolutionKind::PolyCos => "poly-cos",
        }
    }
}

impl fmt::Display for SolutionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for SolutionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolutionKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "unknown solution '{s}' (expected one of: {})",
                SolutionKind::ALL.map(|k| k.name()).join(", ")
            ))
        })
    }
}

#[derive(Clone)]
pub struct ManufacturedSolution {
    name: String,
    alpha: CoefficientField,
    alpha_derivatives: DerivativeFn,
    u: ScalarFn,
    grad_u: VectorFn,
    hessian_u: MatrixFn,
}

impl fmt::Debug for ManufacturedSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManufacturedSolution").field("name", &self.name).field("alpha", &self.alpha).finish()
    }
}

fn constant_alpha() -> DerivativeFn {
    Arc::new(|_| [Matrix2::zeros(), Matrix2::zeros()])
}

impl ManufacturedSolution {
    /// `alpha_derivatives(p)` returns `[d alpha / dx, d alpha / dy]`.
    pub fn new(
        name: impl Into<String>,
        alpha: CoefficientField,
        alpha_derivatives: impl Fn(Point) -> [Matrix2<f64>; 2] + Send + Sync + 'static,
        u: impl Fn(Point) -> f64 + Send + Sync + 'static,
        grad_u: impl Fn(Point) -> Vector + Send + Sync + 'static,
        hessian_u: impl Fn(Point) -> Matrix2<f64> + Send + Sync + 'static,
    ) -> Self {
        ManufacturedSolution {
            name: name.into(),
            alpha,
            alpha_derivatives: Arc::new(alpha_derivatives),
            u: Arc::new(u),
            grad_u: Arc::new(grad_u),
            hessian_u: Arc::new(hessian_u),
        }
    }

    pub fn builtin(kind: SolutionKind) -> Self {
        let sinsin = |p: Point| (PI * p.x).sin() * (PI * p.y).sin();
        let sinsin_grad = |p: Point| {
            let (sx, cx) = (PI * p.x).sin_cos();
            let (sy, cy) = (PI * p.y).sin_cos();
            Vector::new(PI * cx * sy, PI * sx * cy)
        };
        let sinsin_hess = |p: Point| {
            let (sx, cx) = (PI * p.x).sin_cos();
            let (sy, cy) = (PI * p.y).sin_cos();
            let pi2 = PI * PI;
            Matrix2::new(-pi2 * sx * sy, pi2 * cx * cy, pi2 * cx * cy, -pi2 * sx * sy)
        };
        let (name, alpha, derivatives, u, grad, hess): (_, _, _, ScalarFn, VectorFn, MatrixFn) = match kind {
            SolutionKind::Zero => (
                kind.name(),
                CoefficientField::identity(),
                constant_alpha(),
                Arc::new(|_| 0.0),
                Arc::new(|_| Vector::zeros()),
                Arc::new(|_| Matrix2::zeros()),
            ),
            SolutionKind::Affine => (
                kind.name(),
                CoefficientField::identity(),
                constant_alpha(),
                Arc::new(|p: Point| p.x + p.y),
                Arc::new(|_| Vector::new(1.0, 1.0)),
                Arc::new(|_| Matrix2::zeros()),
            ),
            SolutionKind::Sinsin => (
                kind.name(),
                CoefficientField::identity(),
                constant_alpha(),
                Arc::new(sinsin),
                Arc::new(sinsin_grad),
                Arc::new(sinsin_hess),
            ),
            SolutionKind::SinsinVariable => (
                kind.name(),
                CoefficientField::variable(),
                Arc::new(|_| [Matrix2::new(1.0, 0.0, 0.0, 0.0), Matrix2::new(0.0, 0.5, 0.5, 1.0)]) as DerivativeFn,
                Arc::new(sinsin),
                Arc::new(sinsin_grad),
                Arc::new(sinsin_hess),
            ),
            SolutionKind::PolyCos => (
                kind.name(),
                CoefficientField::identity(),
                constant_alpha(),
                Arc::new(|p: Point| p.x * p.x * p.y + (PI * p.y).cos()),
                Arc::new(|p: Point| Vector::new(2.0 * p.x * p.y, p.x * p.x - PI * (PI * p.y).sin())),
                Arc::new(|p: Point| Matrix2::new(2.0 * p.y, 2.0 * p.x, 2.0 * p.x, -PI * PI * (PI * p.y).cos())),
            ),
        };
        ManufacturedSolution {
            name: name.to_string(),
            alpha,
            alpha_derivatives: derivatives,
            u,
            grad_u: grad,
            hessian_u: hess,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alpha(&self) -> &CoefficientField {
        &self.alpha
    }

    pub fn u(&self, p: Point) -> f64 {
        (self.u)(p)
    }

    pub fn grad_u(&self, p: Point) -> Vector {
        (self.grad_u)(p)
    }

    pub fn q(&self, p: Point) -> Vector {
        let m = self.alpha.eval(p).try_inverse().expect("alpha is invertible");
        -(m * self.grad_u(p))
    }

    /// `div q`.
    pub fn f(&self, p: Point) -> f64 {
        let m = self.alpha.eval(p).try_inverse().expect("alpha is invertible");
        let grad = self.grad_u(p);
        let hess = (self.hessian_u)(p);
        let [dx, dy] = (self.alpha_derivatives)(p);
        let dmx = -(m * dx * m);
        let dmy = -(m * dy * m);
        // sum_i (d_i M)_{i,:} . grad u
        let first = dmx.row(0).dot(&grad.transpose()) + dmy.row(1).dot(&grad.transpose());
        -(first + (m * hess).trace())
    }

    /// Boundary data: `u = -g`.
    pub fn g(&self, p: Point) -> f64 {
        -self.u(p)
    }

    /// `(max |alpha q + grad u|, max |div q - f|)` over the cell quadrature
    /// points of `space`, with `div q` from fourth-order central differences.
    pub fn consistency_residuals(&self, space: &WgSpace) -> (f64, f64) {
        let step = 1e-3;
        let mut first = 0.0f64;
        let mut second = 0.0f64;
        for cell in space.cells() {
            for p in &cell.rule.points {
                first = first.max((self.alpha.eval(*p) * self.q(*p) + self.grad_u(*p)).norm());
                let d = |e: Vector, component: usize| {
                    let at = |s: f64| self.q(p + e * s)[component];
                    (-at(2.0 * step) + 8.0 * at(step) - 8.0 * at(-step) + at(-2.0 * step)) / (12.0 * step)
                };
                let div = d(Vector::x(), 0) + d(Vector::y(), 1);
                second = second.max((div - self.f(*p)).abs());
            }
        }
        (first, second)
    }
}
