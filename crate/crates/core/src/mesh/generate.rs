use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PolyMesh;
use crate::{Error, Point, Result};

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn unit() -> Self {
        Rect::new(0.0, 0.0, 1.0, 1.0)
    }

    fn validate(&self) -> Result<()> {
        let ok = [self.x0, self.y0, self.x1, self.y1].iter().all(|v| v.is_finite())
            && self.x1 > self.x0
            && self.y1 > self.y0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("degenerate rectangle {self:?}")))
        }
    }
}

impl Default for Rect {
    fn default() -> Self {
        Rect::unit()
    }
}

fn grid(n: usize, domain: Rect) -> (Vec<Point>, Vec<Vec<usize>>) {
    let hx = (domain.x1 - domain.x0) / n as f64;
    let hy = (domain.y1 - domain.y0) / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            // pin the far side exactly so refinements share the same boundary
            let x = if i == n { domain.x1 } else { domain.x0 + i as f64 * hx };
            let y = if j == n { domain.y1 } else { domain.y0 + j as f64 * hy };
            vertices.push(Point::new(x, y));
        }
    }
    let v = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(vec![v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)]);
        }
    }
    (vertices, cells)
}

/// `n x n` axis-aligned cells covering `domain`.
pub fn generate_uniform_quad_mesh(n: usize, domain: Rect) -> Result<PolyMesh> {
    if n == 0 {
        return Err(Error::InvalidArgument("number of cells per side must be at least 1".into()));
    }
    domain.validate()?;
    let (vertices, cells) = grid(n, domain);
    PolyMesh::new(vertices, cells)
}

/// Uniform quad mesh with every interior vertex moved by a seeded random
/// offset of at most `jitter` times the local cell width in each direction.
///
/// For `jitter <= 0.3` the cells remain convex, hence star-shaped with respect
/// to their vertex centroid.
pub fn generate_perturbed_poly_mesh(n: usize, jitter: f64, seed: u64, domain: Rect) -> Result<PolyMesh> {
    if !(0.0..=0.3).contains(&jitter) {
        return Err(Error::InvalidArgument(format!("jitter {jitter} is outside [0, 0.3]")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("number of cells per side must be at least 1".into()));
    }
    domain.validate()?;
    let (mut vertices, cells) = grid(n, domain);
    if jitter > 0.0 {
        let hx = (domain.x1 - domain.x0) / n as f64;
        let hy = (domain.y1 - domain.y0) / n as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for j in 1..n {
            for i in 1..n {
                let radius = jitter * rng.random::<f64>().sqrt();
                let angle = std::f64::consts::TAU * rng.random::<f64>();
                let p = &mut vertices[j * (n + 1) + i];
                p.x += radius * angle.cos() * hx;
                p.y += radius * angle.sin() * hy;
            }
        }
    }
    PolyMesh::new(vertices, cells)
}
