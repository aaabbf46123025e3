//! Empirical shape-regularity constants.
//!
//! For each cell: `|T| / h_T^2`, star-shapedness with respect to the vertex
//! centroid, the smallest ratio `dist(centroid, e) / h_T` over its sides (the
//! height of the triangle standing on `e` with apex at the centroid), and the
//! largest angle between `x_e - centroid` and the outward normal of `e` over
//! all side endpoints `x_e`. For each edge: `|e| / h_e` and `h_e / h_T`.
//! The circumscribed-simplex condition is not checked.

use serde::Serialize;

use super::PolyMesh;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellRegularity {
    pub area_ratio: f64,
    pub star_shaped: bool,
    pub min_height_ratio: f64,
    /// Radians; below `pi / 2` means every side sees the centroid from inside.
    pub max_apex_angle: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeRegularity {
    pub length_ratio: f64,
    /// Smallest `h_e / h_T` over the incident cells.
    pub diameter_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityReport {
    pub cells: Vec<CellRegularity>,
    pub edges: Vec<EdgeRegularity>,
    pub min_area_ratio: f64,
    pub max_area_ratio: f64,
    pub min_length_ratio: f64,
    pub min_diameter_ratio: f64,
    pub max_diameter_ratio: f64,
    pub min_height_ratio: f64,
    pub max_apex_angle: f64,
    pub all_star_shaped: bool,
}

pub fn check_regularity(mesh: &PolyMesh) -> Result<RegularityReport> {
    let mut cells = Vec::with_capacity(mesh.num_cells());
    let mut diameters = Vec::with_capacity(mesh.num_cells());
    for c in 0..mesh.num_cells() {
        let area = mesh.cell_area(c);
        if !(area > 0.0) {
            return Err(Error::MeshInvalid(format!("cell {c} has non-positive area {area:e}")));
        }
        let h = mesh.cell_diameter(c);
        diameters.push(h);
        let centroid = mesh.vertex_centroid(c);
        let mut min_height: f64 = f64::INFINITY;
        let mut max_angle: f64 = 0.0;
        for &e in mesh.cell_edges(c) {
            let n = mesh.edges()[e].normal * mesh.sign(c, e);
            let [a, b] = mesh.edge_points(e);
            min_height = min_height.min((a - centroid).dot(&n) / h);
            for x in [a, b] {
                let r = x - centroid;
                let cos = (r.dot(&n) / r.norm()).clamp(-1.0, 1.0);
                max_angle = max_angle.max(cos.acos());
            }
        }
        cells.push(CellRegularity {
            area_ratio: area / (h * h),
            star_shaped: mesh.is_star_shaped_wrt_centroid(c),
            min_height_ratio: min_height,
            max_apex_angle: max_angle,
        });
    }

    let edges: Vec<EdgeRegularity> = mesh
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let len = mesh.edge_length(i);
            // a flat edge's diameter is its length
            let h_e = len;
            let h_t = diameters[e.left].max(e.right.map_or(0.0, |r| diameters[r]));
            EdgeRegularity { length_ratio: len / h_e, diameter_ratio: h_e / h_t }
        })
        .collect();

    let fold = |it: &mut dyn Iterator<Item = f64>, init: f64, f: fn(f64, f64) -> f64| it.fold(init, f);
    Ok(RegularityReport {
        min_area_ratio: fold(&mut cells.iter().map(|c| c.area_ratio), f64::INFINITY, f64::min),
        max_area_ratio: fold(&mut cells.iter().map(|c| c.area_ratio), 0.0, f64::max),
        min_length_ratio: fold(&mut edges.iter().map(|e| e.length_ratio), f64::INFINITY, f64::min),
        min_diameter_ratio: fold(&mut edges.iter().map(|e| e.diameter_ratio), f64::INFINITY, f64::min),
        max_diameter_ratio: fold(&mut edges.iter().map(|e| e.diameter_ratio), 0.0, f64::max),
        min_height_ratio: fold(&mut cells.iter().map(|c| c.min_height_ratio), f64::INFINITY, f64::min),
        max_apex_angle: fold(&mut cells.iter().map(|c| c.max_apex_angle), 0.0, f64::max),
        all_star_shaped: cells.iter().all(|c| c.star_shaped),
        cells,
        edges,
    })
}
