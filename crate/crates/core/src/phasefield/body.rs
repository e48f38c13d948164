//! The finite element momentum system on a Cartesian mesh.

use super::constitutive::{radial_return, tensile_energy_plane, trial_stress, EnergySplit, PlasticState, Sym};
use super::fem::{strain_at, Mesh, QP};
use super::newmark::StructuralSystem;
use super::sparse::CsrMatrix;
use super::PhaseFieldError;
use crate::material::{J2Params, MaterialSpec, Stiffness};

#[derive(Clone, Debug)]
pub struct ElasticBody {
    pub mesh: Mesh,
    pattern: CsrMatrix,
    scatter: Vec<Vec<usize>>,
    mass: Vec<f64>,
    stiffness: Stiffness,
    j2: Option<J2Params>,
    /// Degradation factor per quadrature point.
    pub g: Vec<f64>,
    /// Committed plastic state per quadrature point.
    pub plastic: Vec<PlasticState>,
}

impl ElasticBody {
    pub fn new(mesh: Mesh, material: &MaterialSpec) -> Result<Self, PhaseFieldError> {
        material
            .validate()
            .map_err(|e| PhaseFieldError::Material(e.to_string()))?;
        let j2 = material.j2();
        if let Some(p) = &j2 {
            if !(3.0 * p.shear + p.hardening > 0.0) {
                return Err(PhaseFieldError::InvalidParam("3 mu + H must be positive".into()));
            }
        }
        let (pattern, scatter) = mesh.pattern(2);
        let area = mesh.lumped_area();
        let mass = area
            .iter()
            .flat_map(|a| [a * material.density, a * material.density])
            .collect();
        let nq = mesh.n_qp();
        Ok(Self {
            pattern,
            scatter,
            mass,
            stiffness: material.plane_strain_stiffness(),
            j2,
            g: vec![1.0; nq],
            plastic: vec![PlasticState::default(); nq],
            mesh,
        })
    }

    fn gather(&self, e: usize, u: &[f64]) -> [f64; 8] {
        let nodes = self.mesh.elements[e];
        let mut ue = [0.0; 8];
        for a in 0..4 {
            ue[2 * a] = u[2 * nodes[a]];
            ue[2 * a + 1] = u[2 * nodes[a] + 1];
        }
        ue
    }

    /// Effective (undegraded) stress and tangent at a point with committed state `st`.
    fn material_response(&self, eps: &[f64; 3], st: &PlasticState) -> ([f64; 3], Stiffness, PlasticState) {
        match &self.j2 {
            Some(j2) => {
                let e: Sym = [eps[0], eps[1], 0.0, 0.5 * eps[2]];
                let rm = radial_return(&trial_stress(&e, st, j2), st, j2).expect("material validated on construction");
                ([rm.stress[0], rm.stress[1], rm.stress[3]], rm.tangent, rm.state)
            }
            None => {
                let c = &self.stiffness;
                let s = std::array::from_fn(|i| c[i][0] * eps[0] + c[i][1] * eps[1] + c[i][2] * eps[2]);
                (s, *c, *st)
            }
        }
    }

    /// Elastic strain `[xx, yy, zz, xy]` at every quadrature point.
    pub fn elastic_strains(&self, u: &[f64]) -> Vec<Sym> {
        let mut out = Vec::with_capacity(self.mesh.n_qp());
        for e in 0..self.mesh.elements.len() {
            let ue = self.gather(e, u);
            for (q, qp) in self.mesh.qps.iter().enumerate() {
                let eps = strain_at(qp, &ue);
                let p = &self.plastic[e * QP + q].eps_p;
                out.push([eps[0] - p[0], eps[1] - p[1], -p[2], 0.5 * eps[2] - p[3]]);
            }
        }
        out
    }

    /// Tensile energy density at every quadrature point.
    pub fn tensile_energies(&self, u: &[f64], lambda: f64, mu: f64, split: EnergySplit) -> Vec<f64> {
        self.elastic_strains(u)
            .iter()
            .map(|e| tensile_energy_plane([[e[0], e[3]], [e[3], e[1]]], e[2], lambda, mu, split))
            .collect()
    }

    /// Degraded stress `[sxx, syy, sxy]` at every quadrature point for committed state.
    pub fn stresses(&self, u: &[f64]) -> Vec<[f64; 3]> {
        let mut out = Vec::with_capacity(self.mesh.n_qp());
        for e in 0..self.mesh.elements.len() {
            let ue = self.gather(e, u);
            for (q, qp) in self.mesh.qps.iter().enumerate() {
                let i = e * QP + q;
                let (s, _, _) = self.material_response(&strain_at(qp, &ue), &self.plastic[i]);
                out.push(s.map(|v| v * self.g[i]));
            }
        }
        out
    }

    /// Static solve of `K u = 0` with every boundary dof prescribed by `boundary`.
    pub fn solve_static(
        &mut self,
        boundary: impl Fn([f64; 2]) -> [f64; 2],
        tol: f64,
        max_iter: usize,
    ) -> Result<Vec<f64>, PhaseFieldError> {
        let grid = self.mesh.grid;
        let n = self.n_dofs();
        let mut u = vec![0.0; n];
        let mut fixed = vec![false; n];
        for j in 0..=grid.ny {
            for i in 0..=grid.nx {
                if i == 0 || j == 0 || i == grid.nx || j == grid.ny {
                    let node = grid.node_index(i, j);
                    let d = boundary(grid.node_position(i, j));
                    u[2 * node] = d[0];
                    u[2 * node + 1] = d[1];
                    fixed[2 * node] = true;
                    fixed[2 * node + 1] = true;
                }
            }
        }
        let mut k = self.tangent_pattern();
        let mut f = vec![0.0; n];
        self.internal_force(&u, &mut f, &mut k);
        let r: Vec<f64> = (0..n).map(|i| if fixed[i] { 0.0 } else { -f[i] }).collect();
        k.constrain(&fixed);
        let mut du = vec![0.0; n];
        let st = super::sparse::pcg(&k, &r, &mut du, tol, max_iter);
        if !st.converged {
            return Err(PhaseFieldError::CgNotConverged {
                stage: "static",
                iterations: st.iterations,
                residual: st.relative_residual,
            });
        }
        for i in 0..n {
            u[i] += du[i];
        }
        Ok(u)
    }
}

impl StructuralSystem for ElasticBody {
    fn n_dofs(&self) -> usize {
        self.mass.len()
    }

    fn lumped_mass(&self) -> &[f64] {
        &self.mass
    }

    fn is_linear(&self) -> bool {
        self.j2.is_none()
    }

    fn tangent_pattern(&self) -> CsrMatrix {
        self.pattern.clone()
    }

    fn internal_force(&mut self, u: &[f64], f: &mut [f64], k: &mut CsrMatrix) {
        f.iter_mut().for_each(|v| *v = 0.0);
        for e in 0..self.mesh.elements.len() {
            let ue = self.gather(e, u);
            let mut fe = [0.0; 8];
            let mut ke = [[0.0; 8]; 8];
            for (q, qp) in self.mesh.qps.iter().enumerate() {
                let i = e * QP + q;
                let (s, d, _) = self.material_response(&strain_at(qp, &ue), &self.plastic[i]);
                let gw = self.g[i] * qp.weight;
                // Rows of B for each local node: [dN/dx, 0], [0, dN/dy], [dN/dy, dN/dx].
                let b: [[[f64; 2]; 3]; 4] = std::array::from_fn(|a| {
                    [[qp.dndx[a], 0.0], [0.0, qp.dndy[a]], [qp.dndy[a], qp.dndx[a]]]
                });
                for a in 0..4 {
                    for c in 0..2 {
                        fe[2 * a + c] += gw * (0..3).map(|r| b[a][r][c] * s[r]).sum::<f64>();
                    }
                    // D B_b is reused across rows of node a.
                    for bn in 0..4 {
                        for cb in 0..2 {
                            let db: [f64; 3] = std::array::from_fn(|r| (0..3).map(|l| d[r][l] * b[bn][l][cb]).sum());
                            for ca in 0..2 {
                                ke[2 * a + ca][2 * bn + cb] += gw * (0..3).map(|r| b[a][r][ca] * db[r]).sum::<f64>();
                            }
                        }
                    }
                }
            }
            let nodes = self.mesh.elements[e];
            for a in 0..4 {
                f[2 * nodes[a]] += fe[2 * a];
                f[2 * nodes[a] + 1] += fe[2 * a + 1];
            }
            let slots = &self.scatter[e];
            for r in 0..8 {
                for c in 0..8 {
                    k.values[slots[r * 8 + c]] += ke[r][c];
                }
            }
        }
    }

    fn commit(&mut self, u: &[f64]) {
        if self.j2.is_none() {
            return;
        }
        for e in 0..self.mesh.elements.len() {
            let ue = self.gather(e, u);
            for (q, qp) in self.mesh.qps.iter().enumerate() {
                let i = e * QP + q;
                let (_, _, next) = self.material_response(&strain_at(qp, &ue), &self.plastic[i]);
                self.plastic[i] = next;
            }
        }
    }

    fn strain_energy(&self, u: &[f64]) -> f64 {
        let c = &self.stiffness;
        let mut total = 0.0;
        let strains = self.elastic_strains(u);
        for (i, e) in strains.iter().enumerate() {
            let w = self.mesh.qps[i % QP].weight * self.g[i];
            let density = match &self.j2 {
                Some(j2) => {
                    let tr = e[0] + e[1] + e[2];
                    let m = tr / 3.0;
                    let dev2 = (e[0] - m).powi(2) + (e[1] - m).powi(2) + (e[2] - m).powi(2) + 2.0 * e[3] * e[3];
                    0.5 * j2.bulk * tr * tr + j2.shear * dev2
                }
                None => {
                    let v = [e[0], e[1], 2.0 * e[3]];
                    0.5 * (0..3).map(|r| v[r] * (0..3).map(|l| c[r][l] * v[l]).sum::<f64>()).sum::<f64>()
                }
            };
            total += w * density;
        }
        total
    }
}
