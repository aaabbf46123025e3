//! JSON mesh files:
//!
//! ```json
//! { "dimension": 2, "vertices": [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], "cells": [[0, 1, 2]] }
//! ```
//!
//! Cells are counter-clockwise, 0-based vertex loops. Unknown fields are rejected.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PolyMesh, DIMENSION};
use crate::{Error, Point, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshFile {
    pub dimension: usize,
    pub vertices: Vec<[f64; 2]>,
    pub cells: Vec<Vec<usize>>,
}

impl From<&PolyMesh> for MeshFile {
    fn from(mesh: &PolyMesh) -> Self {
        MeshFile {
            dimension: mesh.dimension(),
            vertices: mesh.vertices().iter().map(|p| [p.x, p.y]).collect(),
            cells: mesh.cells().to_vec(),
        }
    }
}

impl MeshFile {
    pub fn into_mesh(self) -> Result<PolyMesh> {
        if self.dimension != DIMENSION {
            return Err(Error::MeshInvalid(format!(
                "dimension {} is not supported (only {DIMENSION})",
                self.dimension
            )));
        }
        let vertices = self.vertices.iter().map(|&[x, y]| Point::new(x, y)).collect();
        PolyMesh::new(vertices, self.cells)
    }
}

pub fn parse_mesh(text: &str, path: &Path) -> Result<PolyMesh> {
    let file: MeshFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: format!("line {}, column {}: {e}", e.line(), e.column()),
    })?;
    file.into_mesh().map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<PolyMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_mesh(&text, path)
}

pub fn write_mesh(mesh: &PolyMesh, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string(&MeshFile::from(mesh)).expect("mesh file serialization is infallible");
    fs::write(path, text + "\n")?;
    Ok(())
}
