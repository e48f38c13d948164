//! Cartesian grids and the scalar/vector fields stored on them.
//!
//! Storage is row-major: node `(i, j)` lives at `j * (nx + 1) + i` and cell
//! `(i, j)` at `j * nx + i`, with `i` along x and `j` along y (upwards).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid needs at least 2 cells per axis, got {nx}x{ny}")]
    TooSmall { nx: usize, ny: usize },
    #[error("side length must be positive and finite, got {0}")]
    BadSide(f64),
    #[error("field length {got} does not match {kind:?} layout of length {expected}")]
    LengthMismatch {
        kind: FieldKind,
        expected: usize,
        got: usize,
    },
    #[error("field contains a non-finite value at index {0}")]
    NonFinite(usize),
}

/// A square physical domain `[0, side_length]^2` split into `nx * ny` cells.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartesianGrid {
    pub nx: usize,
    pub ny: usize,
    pub side_length: f64,
}

impl CartesianGrid {
    pub fn new(nx: usize, ny: usize, side_length: f64) -> Result<Self, GridError> {
        if nx < 2 || ny < 2 {
            return Err(GridError::TooSmall { nx, ny });
        }
        if !(side_length.is_finite() && side_length > 0.0) {
            return Err(GridError::BadSide(side_length));
        }
        Ok(Self { nx, ny, side_length })
    }

    pub fn square(n: usize, side_length: f64) -> Result<Self, GridError> {
        Self::new(n, n, side_length)
    }

    pub fn hx(&self) -> f64 {
        self.side_length / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.side_length / self.ny as f64
    }

    /// Largest cell edge.
    pub fn cell_size(&self) -> f64 {
        self.hx().max(self.hy())
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn n_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [(i as f64 + 0.5) * self.hx(), (j as f64 + 0.5) * self.hy()]
    }

    pub fn node_position(&self, i: usize, j: usize) -> [f64; 2] {
        [i as f64 * self.hx(), j as f64 * self.hy()]
    }

    /// Cell containing a physical point, clamped to the grid.
    pub fn cell_of(&self, p: [f64; 2]) -> (usize, usize) {
        let clamp = |v: f64, h: f64, n: usize| -> usize {
            let k = (v / h).floor();
            if k < 0.0 {
                0
            } else {
                (k as usize).min(n - 1)
            }
        };
        (clamp(p[0], self.hx(), self.nx), clamp(p[1], self.hy(), self.ny))
    }

    /// Cell centres normalised to the unit square, in storage order.
    pub fn normalized_cell_centers(&self) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(self.n_cells());
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push([(i as f64 + 0.5) / self.nx as f64, (j as f64 + 0.5) / self.ny as f64]);
            }
        }
        out
    }

    pub fn len_of(&self, kind: FieldKind) -> usize {
        match kind {
            FieldKind::Nodal => self.n_nodes(),
            FieldKind::Cell => self.n_cells(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Nodal,
    Cell,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub grid: CartesianGrid,
    pub kind: FieldKind,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: CartesianGrid, kind: FieldKind) -> Self {
        Self {
            grid,
            kind,
            values: vec![0.0; grid.len_of(kind)],
        }
    }

    pub fn from_values(grid: CartesianGrid, kind: FieldKind, values: Vec<f64>) -> Result<Self, GridError> {
        let expected = grid.len_of(kind);
        if values.len() != expected {
            return Err(GridError::LengthMismatch {
                kind,
                expected,
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(k));
        }
        Ok(Self { grid, kind, values })
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Bilinear nodal field sampled at cell centres (mean of the four corners).
    pub fn nodal_to_cells(&self) -> ScalarField {
        assert_eq!(self.kind, FieldKind::Nodal);
        let g = self.grid;
        let mut out = Vec::with_capacity(g.n_cells());
        for j in 0..g.ny {
            for i in 0..g.nx {
                let s = self.values[g.node_index(i, j)]
                    + self.values[g.node_index(i + 1, j)]
                    + self.values[g.node_index(i, j + 1)]
                    + self.values[g.node_index(i + 1, j + 1)];
                out.push(0.25 * s);
            }
        }
        ScalarField {
            grid: g,
            kind: FieldKind::Cell,
            values: out,
        }
    }
}

/// Two components per node, interleaved `[ux0, uy0, ux1, uy1, ...]`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField2 {
    pub grid: CartesianGrid,
    pub values: Vec<f64>,
}

impl VectorField2 {
    pub fn zeros(grid: CartesianGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; 2 * grid.n_nodes()],
        }
    }

    pub fn from_values(grid: CartesianGrid, values: Vec<f64>) -> Result<Self, GridError> {
        let expected = 2 * grid.n_nodes();
        if values.len() != expected {
            return Err(GridError::LengthMismatch {
                kind: FieldKind::Nodal,
                expected,
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(k));
        }
        Ok(Self { grid, values })
    }

    pub fn at(&self, node: usize) -> [f64; 2] {
        [self.values[2 * node], self.values[2 * node + 1]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_grids() {
        assert_eq!(CartesianGrid::new(1, 4, 1.0), Err(GridError::TooSmall { nx: 1, ny: 4 }));
        assert!(matches!(CartesianGrid::new(4, 4, 0.0), Err(GridError::BadSide(_))));
    }

    #[test]
    fn indexing_is_row_major() {
        let g = CartesianGrid::new(3, 2, 1.0).unwrap();
        assert_eq!(g.node_index(1, 1), 5);
        assert_eq!(g.cell_index(2, 1), 5);
        assert_eq!(g.n_nodes(), 12);
    }

    #[test]
    fn field_length_is_checked() {
        let g = CartesianGrid::square(4, 1.0).unwrap();
        assert!(ScalarField::from_values(g, FieldKind::Cell, vec![0.0; 16]).is_ok());
        assert!(ScalarField::from_values(g, FieldKind::Nodal, vec![0.0; 16]).is_err());
        assert_eq!(
            ScalarField::from_values(g, FieldKind::Cell, {
                let mut v = vec![0.0; 16];
                v[3] = f64::NAN;
                v
            }),
            Err(GridError::NonFinite(3))
        );
    }
}
