//! Bilinear quadrilateral elements on a Cartesian grid, 2x2 Gauss quadrature.
//!
//! Local node order is counter-clockwise from the lower-left corner. Every cell
//! of a Cartesian grid is the same rectangle, so shape-function data is
//! computed once and shared by all elements.

use super::sparse::CsrMatrix;
use crate::grid::CartesianGrid;

pub const QP: usize = 4;

#[derive(Clone, Debug)]
pub struct QuadPoint {
    pub n: [f64; 4],
    pub dndx: [f64; 4],
    pub dndy: [f64; 4],
    pub weight: f64,
    /// Position inside the element relative to its lower-left corner.
    pub offset: [f64; 2],
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub grid: CartesianGrid,
    pub qps: [QuadPoint; QP],
    /// Global node ids of each element, local order.
    pub elements: Vec<[usize; 4]>,
}

impl Mesh {
    pub fn new(grid: CartesianGrid) -> Self {
        let (hx, hy) = (grid.hx(), grid.hy());
        let g = 1.0 / 3f64.sqrt();
        let corners = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
        let gauss = [(-g, -g), (g, -g), (g, g), (-g, g)];
        let qps = gauss.map(|(xi, eta)| {
            let mut q = QuadPoint {
                n: [0.0; 4],
                dndx: [0.0; 4],
                dndy: [0.0; 4],
                weight: 0.25 * hx * hy,
                offset: [0.5 * hx * (1.0 + xi), 0.5 * hy * (1.0 + eta)],
            };
            for (a, &(xa, ya)) in corners.iter().enumerate() {
                q.n[a] = 0.25 * (1.0 + xa * xi) * (1.0 + ya * eta);
                q.dndx[a] = 0.25 * xa * (1.0 + ya * eta) * 2.0 / hx;
                q.dndy[a] = 0.25 * ya * (1.0 + xa * xi) * 2.0 / hy;
            }
            q
        });
        let mut elements = Vec::with_capacity(grid.n_cells());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                elements.push([
                    grid.node_index(i, j),
                    grid.node_index(i + 1, j),
                    grid.node_index(i + 1, j + 1),
                    grid.node_index(i, j + 1),
                ]);
            }
        }
        Self { grid, qps, elements }
    }

    pub fn n_nodes(&self) -> usize {
        self.grid.n_nodes()
    }

    pub fn n_qp(&self) -> usize {
        self.elements.len() * QP
    }

    /// Sparsity pattern plus, per element, the CSR slot of each local entry.
    /// `dofs_per_node` is 1 for scalar and 2 for vector fields.
    pub fn pattern(&self, dofs_per_node: usize) -> (CsrMatrix, Vec<Vec<usize>>) {
        let ndof = dofs_per_node * self.n_nodes();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); ndof];
        for e in &self.elements {
            let dofs = element_dofs(e, dofs_per_node);
            for &r in &dofs {
                rows[r].extend_from_slice(&dofs);
            }
        }
        let m = CsrMatrix::from_pattern(rows);
        let scatter = self
            .elements
            .iter()
            .map(|e| {
                let dofs = element_dofs(e, dofs_per_node);
                let mut slots = Vec::with_capacity(dofs.len() * dofs.len());
                for &r in &dofs {
                    for &c in &dofs {
                        slots.push(m.position(r, c).unwrap());
                    }
                }
                slots
            })
            .collect();
        (m, scatter)
    }

    /// Row-sum lumped mass per node for unit density.
    pub fn lumped_area(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_nodes()];
        for e in &self.elements {
            for q in &self.qps {
                for a in 0..4 {
                    m[e[a]] += q.weight * q.n[a];
                }
            }
        }
        m
    }
}

pub fn element_dofs(e: &[usize; 4], dofs_per_node: usize) -> Vec<usize> {
    let mut d = Vec::with_capacity(4 * dofs_per_node);
    for &n in e {
        for c in 0..dofs_per_node {
            d.push(dofs_per_node * n + c);
        }
    }
    d
}

/// Plane-strain Voigt strain `[exx, eyy, 2 exy]` at a quadrature point.
pub fn strain_at(q: &QuadPoint, ue: &[f64; 8]) -> [f64; 3] {
    let mut e = [0.0; 3];
    for a in 0..4 {
        let (ux, uy) = (ue[2 * a], ue[2 * a + 1]);
        e[0] += q.dndx[a] * ux;
        e[1] += q.dndy[a] * uy;
        e[2] += q.dndy[a] * ux + q.dndx[a] * uy;
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_functions_partition_unity() {
        let m = Mesh::new(CartesianGrid::new(3, 2, 1.0).unwrap());
        for q in &m.qps {
            assert!((q.n.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            assert!(q.dndx.iter().sum::<f64>().abs() < 1e-12);
            assert!(q.dndy.iter().sum::<f64>().abs() < 1e-12);
        }
        let area: f64 = m.lumped_area().iter().sum();
        assert!((area - 1.0).abs() < 1e-12);
    }

    #[test]
    fn affine_displacement_gives_exact_strain() {
        let m = Mesh::new(CartesianGrid::square(4, 2.0).unwrap());
        let (gxx, gxy, gyx, gyy) = (0.01, 0.003, -0.002, 0.02);
        let e = m.elements[5];
        let mut ue = [0.0; 8];
        for a in 0..4 {
            let p = m.grid.node_position(e[a] % 5, e[a] / 5);
            ue[2 * a] = gxx * p[0] + gxy * p[1];
            ue[2 * a + 1] = gyx * p[0] + gyy * p[1];
        }
        for q in &m.qps {
            let s = strain_at(q, &ue);
            assert!((s[0] - gxx).abs() < 1e-14);
            assert!((s[1] - gyy).abs() < 1e-14);
            assert!((s[2] - (gxy + gyx)).abs() < 1e-14);
        }
    }
}
