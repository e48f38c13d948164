//! Damage equation `(Gc/w0 + 2H) psi - Gc w0 lap(psi) = 2H` with natural boundaries.
//!
//! The reaction term is row-sum lumped. Together with the non-positive
//! off-diagonals of the bilinear Laplacian on square cells this makes the
//! system an M-matrix, so the discrete solution obeys the maximum principle
//! and grows monotonically with `H`.

use super::fem::{Mesh, QP};
use super::sparse::{pcg, CgStats, CsrMatrix};
use super::PhaseFieldError;

/// History value imposed at seed quadrature points.
pub fn seed_history_value(gc: f64, w0: f64) -> f64 {
    1e3 * gc / (2.0 * w0)
}

#[derive(Clone, Debug)]
pub struct DamageOperator {
    mesh: Mesh,
    laplacian: CsrMatrix,
}

impl DamageOperator {
    pub fn new(mesh: Mesh) -> Self {
        let (mut lap, scatter) = mesh.pattern(1);
        let mut ke = [[0.0; 4]; 4];
        for qp in &mesh.qps {
            for a in 0..4 {
                for b in 0..4 {
                    ke[a][b] += qp.weight * (qp.dndx[a] * qp.dndx[b] + qp.dndy[a] * qp.dndy[b]);
                }
            }
        }
        for slots in &scatter {
            for a in 0..4 {
                for b in 0..4 {
                    lap.values[slots[a * 4 + b]] += ke[a][b];
                }
            }
        }
        Self { mesh, laplacian: lap }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    /// System matrix and right-hand side for history `h` (one value per quadrature point).
    pub fn assemble(&self, h: &[f64], gc: f64, w0: f64) -> (CsrMatrix, Vec<f64>) {
        let n = self.mesh.n_nodes();
        let mut react = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for (e, nodes) in self.mesh.elements.iter().enumerate() {
            for (q, qp) in self.mesh.qps.iter().enumerate() {
                let hq = h[e * QP + q];
                for a in 0..4 {
                    let wn = qp.weight * qp.n[a];
                    react[nodes[a]] += wn * (gc / w0 + 2.0 * hq);
                    rhs[nodes[a]] += wn * 2.0 * hq;
                }
            }
        }
        let mut a = self.laplacian.clone();
        a.values.iter_mut().for_each(|v| *v *= gc * w0);
        a.add_diagonal(&react);
        (a, rhs)
    }

    /// Solves for the damage field. When `previous` is given, the solve is for
    /// the increment from it, which keeps tiny increments resolvable.
    pub fn solve(
        &self,
        h: &[f64],
        gc: f64,
        w0: f64,
        previous: Option<&[f64]>,
        tol: f64,
        max_iter: usize,
    ) -> Result<(Vec<f64>, CgStats), PhaseFieldError> {
        if h.len() != self.mesh.n_qp() {
            return Err(PhaseFieldError::InvalidParam(format!(
                "history has {} values, mesh has {} quadrature points",
                h.len(),
                self.mesh.n_qp()
            )));
        }
        if let Some((index, &value)) = h.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(PhaseFieldError::NegativeHistory { index, value });
        }
        let (a, b) = self.assemble(h, gc, w0);
        let n = b.len();
        let base = previous.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
        let mut r = vec![0.0; n];
        a.mul_vec(&base, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let mut delta = vec![0.0; n];
        let st = pcg(&a, &r, &mut delta, tol, max_iter);
        if !st.converged {
            return Err(PhaseFieldError::CgNotConverged {
                stage: "damage",
                iterations: st.iterations,
                residual: st.relative_residual,
            });
        }
        let psi: Vec<f64> = base.iter().zip(&delta).map(|(p, d)| p + d).collect();
        let bound = h
            .iter()
            .map(|&hq| 2.0 * hq / (gc / w0 + 2.0 * hq))
            .fold(0.0, f64::max);
        for &p in &psi {
            if !p.is_finite() {
                return Err(PhaseFieldError::NonFinite { field: "damage", step: 0 });
            }
            if p < -1e-10 || p > bound + 1e-10 {
                return Err(PhaseFieldError::DamageOutOfRange(p));
            }
        }
        Ok((psi, st))
    }
}

/// One-shot damage solve with optional seed mask (one flag per element).
pub fn solve_damage(
    mesh: &Mesh,
    hplus: &[f64],
    seeds: Option<&[bool]>,
    gc: f64,
    w0: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>, PhaseFieldError> {
    let mut h = hplus.to_vec();
    if let Some(mask) = seeds {
        let hs = seed_history_value(gc, w0);
        for (e, &s) in mask.iter().enumerate() {
            if s {
                for q in 0..QP {
                    h[e * QP + q] = h[e * QP + q].max(hs);
                }
            }
        }
    }
    DamageOperator::new(mesh.clone())
        .solve(&h, gc, w0, None, tol, max_iter)
        .map(|(psi, _)| psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::CartesianGrid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mesh() -> Mesh {
        Mesh::new(CartesianGrid::square(12, 0.25).unwrap())
    }

    #[test]
    fn closed_forms() {
        let m = mesh();
        let (gc, w0) = (641.0, 2.0 * 0.25 / 12.0);
        let nq = m.n_qp();
        let psi = solve_damage(&m, &vec![0.0; nq], None, gc, w0, 1e-12, 1000).unwrap();
        assert!(psi.iter().all(|&p| p == 0.0));
        let half = solve_damage(&m, &vec![gc / (2.0 * w0); nq], None, gc, w0, 1e-12, 1000).unwrap();
        assert!(half.iter().all(|&p| (p - 0.5).abs() < 1e-10));
        let big = solve_damage(&m, &vec![1e6 * gc / w0; nq], None, gc, w0, 1e-12, 1000).unwrap();
        assert!(big.iter().all(|&p| (1.0 - p).abs() < 1e-3));
    }

    #[test]
    fn negative_history_rejected() {
        let m = mesh();
        let mut h = vec![0.0; m.n_qp()];
        h[7] = -1.0;
        assert!(matches!(
            solve_damage(&m, &h, None, 1.0, 0.05, 1e-12, 100),
            Err(PhaseFieldError::NegativeHistory { index: 7, .. })
        ));
    }

    #[test]
    fn maximum_principle_and_monotonicity() {
        let m = mesh();
        let op = DamageOperator::new(m.clone());
        let (gc, w0) = (50.0, 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut h = vec![0.0; m.n_qp()];
        let mut prev: Option<Vec<f64>> = None;
        for _ in 0..20 {
            for v in h.iter_mut() {
                if rng.random_bool(0.2) {
                    *v += rng.random_range(0.0..2.0) * gc / w0;
                }
            }
            let (psi, _) = op.solve(&h, gc, w0, prev.as_deref(), 1e-12, 2000).unwrap();
            let bound = h.iter().map(|&x| 2.0 * x / (gc / w0 + 2.0 * x)).fold(0.0, f64::max);
            assert!(psi.iter().all(|&p| p >= -1e-10 && p <= bound + 1e-10));
            if let Some(old) = &prev {
                assert!(psi.iter().zip(old).all(|(a, b)| *a >= b - 1e-12));
            }
            prev = Some(psi);
        }
    }

    #[test]
    fn seeds_raise_damage_locally() {
        let m = mesh();
        let mut seeds = vec![false; m.elements.len()];
        seeds[6 * 12 + 6] = true;
        let psi = solve_damage(&m, &vec![0.0; m.n_qp()], Some(&seeds), 641.0, 0.05, 1e-12, 1000).unwrap();
        let hot = m.elements[6 * 12 + 6][0];
        assert!(psi[hot] > 0.2);
        assert!(psi[0] < psi[hot]);
    }
}
