//! Polygonal meshes.
//!
//! Cells are counter-clockwise vertex loops. Edges are built from the cell
//! sides: an edge is owned by the first (lowest-indexed) cell that uses it,
//! its vertices are stored in that cell's counter-clockwise order, and its
//! default unit normal points out of the owner, i.e. from the lower-indexed
//! incident cell towards the higher-indexed one, and outward on the boundary.

mod generate;
mod io;
mod regularity;

use std::collections::HashMap;

use crate::{Error, Point, Result, Vector};

pub use generate::{generate_perturbed_poly_mesh, generate_uniform_quad_mesh, Rect};
pub use io::{parse_mesh, read_mesh, write_mesh, MeshFile};
pub use regularity::{check_regularity, CellRegularity, EdgeRegularity, RegularityReport};

/// Spatial dimension of the geometry kernels.
pub const DIMENSION: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    /// Endpoints, in the counter-clockwise order of `left`.
    pub vertices: [usize; 2],
    /// Cell on the left of `vertices[0] -> vertices[1]`.
    pub left: usize,
    /// Cell on the right, `None` on the boundary.
    pub right: Option<usize>,
    /// The unit normal `n_e` of the direction set.
    pub normal: Vector,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolyMesh {
    dimension: usize,
    vertices: Vec<Point>,
    cells: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    cell_edges: Vec<Vec<usize>>,
    boundary_edges: Vec<usize>,
}

/// One side of a cell as seen from that cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellSide {
    pub edge: usize,
    /// `n_e . n_T`, exactly +1 or -1.
    pub sign: f64,
    /// Outward unit normal of the cell on this side.
    pub outward_normal: Vector,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElementGeometry {
    pub cell: usize,
    /// Arithmetic mean of the vertices; the star point of the fan.
    pub centroid: Point,
    pub diameter: f64,
    pub area: f64,
    pub fan_triangles: Vec<[Point; 3]>,
    pub sides: Vec<CellSide>,
}

fn cross(a: Vector, b: Vector) -> f64 {
    a.x * b.y - a.y * b.x
}

fn signed_area(points: &[Point]) -> f64 {
    let m = points.len();
    (0..m)
        .map(|i| {
            let p = points[i];
            let q = points[(i + 1) % m];
            p.x * q.y - q.x * p.y
        })
        .sum::<f64>()
        / 2.0
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q2 - q1, p1 - q1);
    let d2 = cross(q2 - q1, p2 - q1);
    let d3 = cross(p2 - p1, q1 - p1);
    let d4 = cross(p2 - p1, q2 - p1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on_segment = |a: Point, b: Point, c: Point| {
        c.x >= a.x.min(b.x) && c.x <= a.x.max(b.x) && c.y >= a.y.min(b.y) && c.y <= a.y.max(b.y)
    };
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

impl PolyMesh {
    /// Builds a mesh from vertex coordinates and counter-clockwise cells,
    /// validating every structural invariant.
    pub fn new(vertices: Vec<Point>, cells: Vec<Vec<usize>>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::MeshInvalid("mesh has no cells".into()));
        }
        if let Some(i) = vertices.iter().position(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(Error::MeshInvalid(format!("vertex {i} has non-finite coordinates")));
        }
        let mut referenced = vec![false; vertices.len()];
        for (c, cell) in cells.iter().enumerate() {
            if cell.len() < 3 {
                return Err(Error::MeshInvalid(format!("cell {c} has fewer than 3 vertices")));
            }
            for &v in cell {
                if v >= vertices.len() {
                    return Err(Error::MeshInvalid(format!(
                        "cell {c} references vertex {v}, but only {} vertices exist",
                        vertices.len()
                    )));
                }
                referenced[v] = true;
            }
            let mut sorted = cell.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::MeshInvalid(format!("cell {c} repeats a vertex")));
            }
            let points: Vec<Point> = cell.iter().map(|&v| vertices[v]).collect();
            let area = signed_area(&points);
            if area < 0.0 {
                return Err(Error::MeshInvalid(format!(
                    "cell {c} has clockwise orientation (signed area {area:.6e})"
                )));
            }
            if area == 0.0 {
                return Err(Error::MeshInvalid(format!("cell {c} is degenerate (zero area)")));
            }
            let m = points.len();
            for i in 0..m {
                for j in (i + 2)..m {
                    if i == 0 && j == m - 1 {
                        continue;
                    }
                    if segments_intersect(points[i], points[(i + 1) % m], points[j], points[(j + 1) % m]) {
                        return Err(Error::MeshInvalid(format!("cell {c} is not a simple polygon")));
                    }
                }
            }
        }
        if let Some(v) = referenced.iter().position(|r| !r) {
            return Err(Error::MeshInvalid(format!("vertex {v} is not used by any cell")));
        }

        let mut edges: Vec<Edge> = Vec::new();
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let m = cell.len();
            let mut sides = Vec::with_capacity(m);
            for i in 0..m {
                let (a, b) = (cell[i], cell[(i + 1) % m]);
                let key = (a.min(b), a.max(b));
                match lookup.get(&key) {
                    None => {
                        let d = vertices[b] - vertices[a];
                        let normal = Vector::new(d.y, -d.x) / d.norm();
                        lookup.insert(key, edges.len());
                        sides.push(edges.len());
                        edges.push(Edge { vertices: [a, b], left: c, right: None, normal });
                    }
                    Some(&e) => {
                        let edge = &mut edges[e];
                        if edge.right.is_some() || edge.left == c {
                            return Err(Error::MeshInvalid(format!(
                                "edge ({a}, {b}) is shared by more than two cells (cell {c})"
                            )));
                        }
                        if edge.vertices != [b, a] {
                            return Err(Error::MeshInvalid(format!(
                                "cells {} and {c} traverse edge ({a}, {b}) in the same direction",
                                edge.left
                            )));
                        }
                        edge.right = Some(c);
                        sides.push(e);
                    }
                }
            }
            cell_edges.push(sides);
        }
        let boundary_edges = edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_boundary())
            .map(|(i, _)| i)
            .collect();
        Ok(PolyMesh { dimension: DIMENSION, vertices, cells, edges, cell_edges, boundary_edges })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn boundary_edges(&self) -> &[usize] {
        &self.boundary_edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_interior_edges(&self) -> usize {
        self.edges.len() - self.boundary_edges.len()
    }

    /// Edge indices of a cell's sides; side `i` joins local vertices `i` and `i + 1`.
    pub fn cell_edges(&self, cell: usize) -> &[usize] {
        &self.cell_edges[cell]
    }

    pub fn cell_points(&self, cell: usize) -> Vec<Point> {
        self.cells[cell].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn edge_points(&self, edge: usize) -> [Point; 2] {
        let [a, b] = self.edges[edge].vertices;
        [self.vertices[a], self.vertices[b]]
    }

    pub fn edge_length(&self, edge: usize) -> f64 {
        let [a, b] = self.edge_points(edge);
        (b - a).norm()
    }

    /// Unit normal pointing from `left` towards `right` (outward of `left`).
    fn left_outward_normal(&self, edge: usize) -> Vector {
        let [a, b] = self.edge_points(edge);
        let d = b - a;
        Vector::new(d.y, -d.x) / d.norm()
    }

    /// Orientation sign `n_e . n_T` of `edge` as seen from `cell`.
    ///
    /// # Panics
    /// If `cell` is not incident to `edge`.
    pub fn sign(&self, cell: usize, edge: usize) -> f64 {
        let e = &self.edges[edge];
        let along_left = if e.normal.dot(&self.left_outward_normal(edge)) > 0.0 { 1.0 } else { -1.0 };
        if e.left == cell {
            along_left
        } else if e.right == Some(cell) {
            -along_left
        } else {
            panic!("cell {cell} is not incident to edge {edge}")
        }
    }

    pub fn cell_area(&self, cell: usize) -> f64 {
        signed_area(&self.cell_points(cell))
    }

    pub fn cell_diameter(&self, cell: usize) -> f64 {
        let pts = self.cell_points(cell);
        let mut d: f64 = 0.0;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                d = d.max((pts[j] - pts[i]).norm());
            }
        }
        d
    }

    pub fn vertex_centroid(&self, cell: usize) -> Point {
        let pts = self.cell_points(cell);
        let sum = pts.iter().fold(Vector::zeros(), |acc, p| acc + p.coords);
        Point::from(sum / pts.len() as f64)
    }

    /// Mesh size `h = max_T h_T`.
    pub fn mesh_size(&self) -> f64 {
        (0..self.num_cells()).map(|c| self.cell_diameter(c)).fold(0.0, f64::max)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_cells()).map(|c| self.cell_area(c)).sum()
    }

    /// Whether the fan from the vertex centroid has only positively oriented triangles.
    pub fn is_star_shaped_wrt_centroid(&self, cell: usize) -> bool {
        let c = self.vertex_centroid(cell);
        let pts = self.cell_points(cell);
        let m = pts.len();
        (0..m).all(|i| cross(pts[i] - c, pts[(i + 1) % m] - c) > 0.0)
    }

    pub fn geometry(&self, cell: usize) -> Result<ElementGeometry> {
        let pts = self.cell_points(cell);
        let centroid = self.vertex_centroid(cell);
        let area = self.cell_area(cell);
        if area <= 0.0 {
            return Err(Error::MeshInvalid(format!("cell {cell} has non-positive area")));
        }
        if !self.is_star_shaped_wrt_centroid(cell) {
            return Err(Error::Geometry {
                cell,
                message: "cell is not star-shaped with respect to its vertex centroid".into(),
            });
        }
        let m = pts.len();
        let fan_triangles = (0..m).map(|i| [centroid, pts[i], pts[(i + 1) % m]]).collect();
        let sides = self.cell_edges[cell]
            .iter()
            .map(|&edge| {
                let sign = self.sign(cell, edge);
                let normal = self.edges[edge].normal;
                CellSide { edge, sign, outward_normal: normal * sign, length: self.edge_length(edge) }
            })
            .collect();
        Ok(ElementGeometry {
            cell,
            centroid,
            diameter: self.cell_diameter(cell),
            area,
            fan_triangles,
            sides,
        })
    }

    /// Returns a copy with `n_e` negated on the listed edges.
    pub fn with_flipped_normals(&self, edges: &[usize]) -> Self {
        let mut mesh = self.clone();
        for &e in edges {
            mesh.edges[e].normal = -mesh.edges[e].normal;
        }
        mesh
    }

    pub fn with_all_normals_flipped(&self) -> Self {
        let all: Vec<usize> = (0..self.num_edges()).collect();
        self.with_flipped_normals(&all)
    }

    /// Whether the domain is a single convex polygon.
    pub fn is_domain_convex(&self) -> bool {
        // Boundary edges are oriented counter-clockwise around the domain
        // (each is stored in its owner's CCW order), so chain them by vertex.
        let mut next: HashMap<usize, usize> = HashMap::new();
        for &e in &self.boundary_edges {
            let [a, b] = self.edges[e].vertices;
            if next.insert(a, b).is_some() {
                return false;
            }
        }
        let Some(&start) = next.keys().min() else { return false };
        let mut loop_vertices = vec![start];
        let mut v = start;
        loop {
            v = next[&v];
            if v == start {
                break;
            }
            loop_vertices.push(v);
            if loop_vertices.len() > next.len() {
                return false;
            }
        }
        if loop_vertices.len() != next.len() {
            return false;
        }
        let pts: Vec<Point> = loop_vertices.iter().map(|&v| self.vertices[v]).collect();
        let m = pts.len();
        let scale = self.mesh_size();
        (0..m).all(|i| {
            let a = pts[i];
            let b = pts[(i + 1) % m];
            let c = pts[(i + 2) % m];
            cross(b - a, c - b) >= -1e-12 * scale * scale
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> PolyMesh {
        generate_uniform_quad_mesh(1, Rect::unit()).unwrap()
    }

    #[test]
    fn single_cell_counts() {
        let mesh = unit_square();
        assert_eq!(mesh.num_cells(), 1);
        assert_eq!(mesh.num_vertices(), 4);
        assert_eq!(mesh.boundary_edges().len(), 4);
        assert_eq!(mesh.num_interior_edges(), 0);
    }

    #[test]
    fn two_by_two_counts() {
        let mesh = generate_uniform_quad_mesh(2, Rect::unit()).unwrap();
        assert_eq!(mesh.num_cells(), 4);
        assert_eq!(mesh.num_vertices(), 9);
        assert_eq!(mesh.num_edges(), 12);
        assert_eq!(mesh.num_interior_edges(), 4);
    }

    #[test]
    fn boundary_normals_point_outward() {
        let mesh = generate_uniform_quad_mesh(3, Rect::unit()).unwrap();
        let center = Point::new(0.5, 0.5);
        for &e in mesh.boundary_edges() {
            let [a, b] = mesh.edge_points(e);
            let mid = Point::from((a.coords + b.coords) / 2.0);
            assert!(mesh.edges()[e].normal.dot(&(mid - center)) > 0.0);
            assert_eq!(mesh.sign(mesh.edges()[e].left, e), 1.0);
        }
    }

    #[test]
    fn interior_signs_cancel_and_point_to_higher_cell() {
        let mesh = generate_perturbed_poly_mesh(4, 0.2, 3, Rect::unit()).unwrap();
        for (i, e) in mesh.edges().iter().enumerate() {
            if let Some(r) = e.right {
                assert!(e.left < r);
                assert_eq!(mesh.sign(e.left, i) + mesh.sign(r, i), 0.0);
                let to_right = mesh.vertex_centroid(r) - mesh.vertex_centroid(e.left);
                assert!(e.normal.dot(&to_right) > 0.0);
            }
            assert!((e.normal.norm() - 1.0).abs() < 1e-14);
            let [a, b] = mesh.edge_points(i);
            assert!(e.normal.dot(&(b - a)).abs() < 1e-14);
        }
    }

    #[test]
    fn flipping_a_normal_flips_both_signs() {
        let mesh = generate_uniform_quad_mesh(2, Rect::unit()).unwrap();
        let interior = (0..mesh.num_edges()).find(|&e| !mesh.edges()[e].is_boundary()).unwrap();
        let flipped = mesh.with_flipped_normals(&[interior]);
        let e = &mesh.edges()[interior];
        assert_eq!(flipped.sign(e.left, interior), -1.0);
        assert_eq!(flipped.sign(e.right.unwrap(), interior), 1.0);
    }

    #[test]
    fn rejects_clockwise_cells() {
        let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        let err = PolyMesh::new(v, vec![vec![0, 2, 1]]).unwrap_err();
        assert!(err.to_string().contains("clockwise orientation"), "{err}");
    }

    #[test]
    fn rejects_out_of_range_vertex() {
        let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        let err = PolyMesh::new(v, vec![vec![0, 1, 3]]).unwrap_err();
        assert!(err.to_string().contains("cell 0 references vertex 3"), "{err}");
    }

    #[test]
    fn rejects_self_intersecting_cell() {
        let v = vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(2.0, 1.0),
            Point::new(1.0, -1.0),
        ];
        assert!(PolyMesh::new(v, vec![vec![0, 4, 1, 2, 3]]).is_err());
    }

    #[test]
    fn rejects_inconsistent_orientation_between_cells() {
        let v = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        // two overlapping triangles sharing edge 0-2 traversed the same way
        let err = PolyMesh::new(v, vec![vec![0, 1, 2], vec![0, 1, 2, 3]]).unwrap_err();
        assert!(matches!(err, Error::MeshInvalid(_)));
    }

    #[test]
    fn fan_triangles_partition_cell() {
        let mesh = generate_perturbed_poly_mesh(5, 0.3, 11, Rect::unit()).unwrap();
        for c in 0..mesh.num_cells() {
            let g = mesh.geometry(c).unwrap();
            let fan: f64 = g
                .fan_triangles
                .iter()
                .map(|t| cross(t[1] - t[0], t[2] - t[0]) / 2.0)
                .sum();
            assert!((fan - g.area).abs() <= 1e-12 * g.area);
        }
    }

    #[test]
    fn euler_relation_and_area() {
        for n in [1, 2, 5, 8] {
            let mesh = generate_perturbed_poly_mesh(n, 0.25, 1, Rect::unit()).unwrap();
            let v = mesh.num_vertices() as i64;
            let e = mesh.num_edges() as i64;
            let c = mesh.num_cells() as i64;
            assert_eq!(v - e + c, 1);
            assert!((mesh.total_area() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rectangle_is_convex_and_l_shape_is_not() {
        assert!(generate_uniform_quad_mesh(3, Rect::unit()).unwrap().is_domain_convex());
        let v = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 1.0),
            Point::new(2.0, 1.0),
            Point::new(0.0, 2.0),
            Point::new(1.0, 2.0),
        ];
        let cells = vec![vec![0, 1, 4, 3], vec![1, 2, 5, 4], vec![3, 4, 7, 6]];
        let mesh = PolyMesh::new(v, cells).unwrap();
        assert!(!mesh.is_domain_convex());
    }
}
