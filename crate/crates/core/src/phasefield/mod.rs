//! Dynamic phase-field fracture with staggered implicit time stepping.
//!
//! Each step solves the momentum balance at fixed damage with Newmark
//! integration, updates the tensile-energy history, then solves the damage
//! equation. A run stops when the `psi >= 0.99` node set connects the borders
//! the crack has to cross.

mod body;
mod constitutive;
mod damage;
mod fem;
mod newmark;
mod sparse;

pub use body::ElasticBody;
pub use constitutive::{
    degradation, deviator, radial_return, tensile_energy, trial_stress, update_history, von_mises, EnergySplit,
    PlasticState, ReturnMapping, Sym,
};
pub use damage::{seed_history_value, solve_damage, DamageOperator};
pub use fem::{strain_at, Mesh, QuadPoint, QP};
pub use newmark::{initial_acceleration, newmark_step, DynamicState, Newmark, SolverControls, StepStats, StructuralSystem};
pub use sparse::{pcg, CgStats, CsrMatrix};

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{structured_coords, Provenance, SampleRecord, Snapshots, Source, Targets};
use crate::deck::{render_deck_with, DeckError, DeckMeta, Loading, SimulationKind, Target, SNAPSHOT_COUNT};
use crate::material::MaterialRegistry;
use crate::geometry::{rasterize_config, FractureConfig};
use crate::initcond::ConfigSampler;
use crate::rng::SeededRng;
use crate::grid::{CartesianGrid, FieldKind, ScalarField, VectorField2};
use crate::material::MaterialSpec;
use crate::rulebased::{check_failure, Axis, Occupancy};

#[derive(Debug, Error)]
pub enum PhaseFieldError {
    #[error("conjugate gradient stalled in the {stage} solve after {iterations} iterations (relative residual {residual:.3e})")]
    CgNotConverged {
        stage: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("Newton iteration did not converge at step {step} after {iterations} iterations (residual {residual:.3e})")]
    NewtonNotConverged { step: usize, iterations: usize, residual: f64 },
    #[error("non-finite {field} at step {step}")]
    NonFinite { field: &'static str, step: usize },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("damage value {0} outside the admissible range")]
    DamageOutOfRange(f64),
    #[error("negative history value {value} at quadrature point {index}")]
    NegativeHistory { index: usize, value: f64 },
    #[error("strain tensor is not symmetric")]
    NonSymmetric,
    #[error("invariant violated at step {step}: {what}")]
    Invariant { step: usize, what: String },
    #[error("material: {0}")]
    Material(String),
    #[error("deck: {0}")]
    Deck(#[from] DeckError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseFieldParams {
    /// Regularization length in metres; two cells when unset.
    pub w0: Option<f64>,
    pub eta: f64,
    /// Time step in seconds; half a cell transit of the P wave when unset.
    pub dt: Option<f64>,
    pub newmark_beta: f64,
    pub newmark_gamma: f64,
    /// Boundary speed in m/s.
    pub boundary_speed: f64,
    pub loading: Loading,
    pub max_steps: usize,
    pub staggered_iters: usize,
    pub cg_tol: f64,
    pub cg_max_iters: usize,
    pub damage_cg_tol: f64,
    pub newton_tol: f64,
    pub newton_max: usize,
    pub snapshot_count: usize,
    pub energy_split: EnergySplit,
    pub failure_threshold: f64,
}

impl Default for PhaseFieldParams {
    fn default() -> Self {
        Self {
            w0: None,
            eta: 1e-6,
            dt: None,
            newmark_beta: 0.25,
            newmark_gamma: 0.5,
            boundary_speed: 1.0,
            loading: Loading::Axial,
            max_steps: 4000,
            staggered_iters: 1,
            cg_tol: 1e-8,
            cg_max_iters: 20_000,
            damage_cg_tol: 1e-12,
            newton_tol: 1e-8,
            newton_max: 20,
            snapshot_count: 10,
            energy_split: EnergySplit::Spectral,
            failure_threshold: 0.99,
        }
    }
}

impl PhaseFieldParams {
    /// Fills in `w0` and `dt` and checks every invariant.
    pub fn resolve(&self, grid: &CartesianGrid, material: &MaterialSpec) -> Result<(f64, f64), PhaseFieldError> {
        let h = grid.cell_size();
        let w0 = self.w0.unwrap_or(2.0 * h);
        let dt = self.dt.unwrap_or(0.5 * h / material.p_wave_speed());
        let bad = |m: String| Err(PhaseFieldError::InvalidParam(m));
        if !(w0 >= 2.0 * h * (1.0 - 1e-12)) {
            return bad(format!("w0 = {w0} is below two cells ({})", 2.0 * h));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad(format!("eta = {} must lie in (0, 1)", self.eta));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return bad(format!("dt = {dt} must be positive"));
        }
        if self.staggered_iters == 0 {
            return bad("staggered_iters must be at least 1".into());
        }
        if self.snapshot_count < 2 {
            return bad("snapshot_count must be at least 2".into());
        }
        if !(self.cg_tol > 0.0 && self.damage_cg_tol > 0.0 && self.newton_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if !(self.boundary_speed.is_finite()) {
            return bad("boundary_speed must be finite".into());
        }
        Ok((w0, dt))
    }

    pub fn progression_points(&self) -> Vec<f64> {
        let n = self.snapshot_count;
        (0..n).map(|k| 0.3 + 0.7 * k as f64 / (n - 1) as f64).collect()
    }

    fn controls(&self) -> SolverControls {
        SolverControls {
            cg_tol: self.cg_tol,
            cg_max_iters: self.cg_max_iters,
            newton_tol: self.newton_tol,
            newton_max: self.newton_max,
        }
    }
}

/// Full solver state at one instant.
#[derive(Clone, Debug)]
pub struct PhaseFieldState {
    pub u: VectorField2,
    pub v: VectorField2,
    pub a: VectorField2,
    pub psi: ScalarField,
    pub hplus: Vec<f64>,
    pub plastic: Vec<PlasticState>,
    pub t: f64,
    pub step: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub step: usize,
    pub time: f64,
    pub kinetic: f64,
    pub strain: f64,
    pub max_psi: f64,
}

pub fn write_energy_csv<W: Write>(rows: &[EnergyRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "step,time,kinetic,strain,max_psi")?;
    for r in rows {
        writeln!(out, "{},{:e},{:e},{:e},{}", r.step, r.time, r.kinetic, r.strain, r.max_psi)?;
    }
    Ok(())
}

/// Decimating store of past damage fields; keeps at most `capacity` evenly spaced steps.
#[derive(Clone, Debug)]
struct History {
    capacity: usize,
    stride: usize,
    entries: Vec<(usize, Vec<f32>)>,
}

impl History {
    fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(4),
            stride: 1,
            entries: Vec::new(),
        }
    }

    fn record(&mut self, step: usize, psi: &[f64]) {
        if step % self.stride != 0 {
            return;
        }
        self.entries.push((step, psi.iter().map(|&v| v as f32).collect()));
        if self.entries.len() >= self.capacity {
            self.stride *= 2;
            let stride = self.stride;
            self.entries.retain(|(s, _)| s % stride == 0);
        }
    }

    fn nearest(&self, step: f64) -> &[f32] {
        let best = self
            .entries
            .iter()
            .min_by(|a, b| (a.0 as f64 - step).abs().total_cmp(&(b.0 as f64 - step).abs()))
            .expect("history holds the initial state");
        &best.1
    }
}

/// Stepwise solver. [`run_phasefield`] drives it to failure.
#[derive(Clone, Debug)]
pub struct PhaseFieldSolver {
    params: PhaseFieldParams,
    material: MaterialSpec,
    lame: (f64, f64),
    w0: f64,
    scheme: Newmark,
    body: ElasticBody,
    damage: DamageOperator,
    dynamic: DynamicState,
    psi: Vec<f64>,
    hplus: Vec<f64>,
    step: usize,
    history: Option<History>,
    energy: Vec<EnergyRow>,
    failed_at: Option<usize>,
}

impl PhaseFieldSolver {
    pub fn new(
        config: &FractureConfig,
        material: &MaterialSpec,
        params: &PhaseFieldParams,
        grid: &CartesianGrid,
        record_history: bool,
    ) -> Result<Self, PhaseFieldError> {
        let (w0, dt) = params.resolve(grid, material)?;
        let mesh = Mesh::new(*grid);
        let body = ElasticBody::new(mesh.clone(), material)?;
        let damage = DamageOperator::new(mesh);
        let gc = material.fracture_energy;

        let raster = rasterize_config(config, grid);
        let hs = seed_history_value(gc, w0);
        let mut hplus = vec![0.0; body.mesh.n_qp()];
        for (e, &v) in raster.field.values.iter().enumerate() {
            if v >= 0.5 {
                hplus[e * QP..(e + 1) * QP].iter_mut().for_each(|h| *h = hs);
            }
        }
        let (psi, _) = damage.solve(&hplus, gc, w0, None, params.damage_cg_tol, params.cg_max_iters)?;
        let mut solver = Self {
            params: params.clone(),
            material: material.clone(),
            lame: material.lame(),
            w0,
            scheme: Newmark {
                beta: params.newmark_beta,
                gamma: params.newmark_gamma,
                dt,
            },
            dynamic: DynamicState::at_rest(body.mesh.n_nodes() * 2),
            body,
            damage,
            psi,
            hplus,
            step: 0,
            history: record_history.then(|| History::new(1024)),
            energy: Vec::new(),
            failed_at: None,
        };
        solver.scheme.validate()?;
        solver.refresh_degradation();
        for (d, rate) in solver.boundary_rates() {
            solver.dynamic.v[d] = rate;
        }
        initial_acceleration(&mut solver.body, &mut solver.dynamic);
        solver.after_step();
        Ok(solver)
    }

    pub fn dt(&self) -> f64 {
        self.scheme.dt
    }

    pub fn w0(&self) -> f64 {
        self.w0
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.dynamic.t
    }

    pub fn grid(&self) -> &CartesianGrid {
        &self.body.mesh.grid
    }

    /// Nodal damage, row-major over `(nx + 1) x (ny + 1)` nodes.
    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn displacement(&self) -> &[f64] {
        &self.dynamic.u
    }

    pub fn hplus(&self) -> &[f64] {
        &self.hplus
    }

    pub fn energy(&self) -> &[EnergyRow] {
        &self.energy
    }

    pub fn failed_at(&self) -> Option<usize> {
        self.failed_at
    }

    pub fn state(&self) -> PhaseFieldState {
        let grid = *self.grid();
        let vf = |x: &Vec<f64>| VectorField2::from_values(grid, x.clone()).expect("finite fields");
        PhaseFieldState {
            u: vf(&self.dynamic.u),
            v: vf(&self.dynamic.v),
            a: vf(&self.dynamic.a),
            psi: ScalarField::from_values(grid, FieldKind::Nodal, self.psi.clone()).expect("finite damage"),
            hplus: self.hplus.clone(),
            plastic: self.body.plastic.clone(),
            t: self.dynamic.t,
            step: self.step,
        }
    }

    /// Prescribed boundary velocities `(dof, rate)`.
    fn boundary_rates(&self) -> Vec<(usize, f64)> {
        let g = self.grid();
        let v = self.params.boundary_speed;
        let mut out = Vec::new();
        for i in 0..=g.nx {
            out.push((2 * g.node_index(i, 0) + 1, -v));
            out.push((2 * g.node_index(i, g.ny) + 1, v));
        }
        if self.params.loading == Loading::Biaxial {
            for j in 0..=g.ny {
                out.push((2 * g.node_index(0, j), -v));
                out.push((2 * g.node_index(g.nx, j), v));
            }
        }
        out
    }

    fn refresh_degradation(&mut self) {
        let eta = self.params.eta;
        for (e, nodes) in self.body.mesh.elements.iter().enumerate() {
            for (q, qp) in self.body.mesh.qps.iter().enumerate() {
                let p: f64 = (0..4).map(|a| qp.n[a] * self.psi[nodes[a]]).sum();
                self.body.g[e * QP + q] = constitutive::degradation_unchecked(p, eta);
            }
        }
    }

    fn after_step(&mut self) {
        let max_psi = self.psi.iter().copied().fold(0.0, f64::max);
        self.energy.push(EnergyRow {
            step: self.step,
            time: self.dynamic.t,
            kinetic: self.dynamic.kinetic_energy(self.body.lumped_mass()),
            strain: self.body.strain_energy(&self.dynamic.u),
            max_psi,
        });
        if let Some(h) = &mut self.history {
            h.record(self.step, &self.psi);
        }
        if self.failed_at.is_none() && self.percolates() {
            self.failed_at = Some(self.step);
        }
    }

    /// Whether the damaged node set spans the domain across the loading direction.
    pub fn percolates(&self) -> bool {
        let g = self.grid();
        let occ = Occupancy::from_threshold(g.nx + 1, g.ny + 1, &self.psi, self.params.failure_threshold);
        match self.params.loading {
            Loading::Axial => check_failure(&occ, Axis::Horizontal),
            Loading::Biaxial => check_failure(&occ, Axis::Horizontal) || check_failure(&occ, Axis::Vertical),
        }
    }

    /// Advances one staggered step.
    pub fn step(&mut self) -> Result<StepStats, PhaseFieldError> {
        let next = self.step + 1;
        let t_new = self.dynamic.t + self.scheme.dt;
        let prescribed: Vec<(usize, f64)> = self.boundary_rates().into_iter().map(|(d, r)| (d, r * t_new)).collect();
        let controls = self.params.controls();
        let gc = self.material.fracture_energy;
        let (lambda, mu) = self.lame;

        let saved_dynamic = self.dynamic.clone();
        let saved_plastic = self.body.plastic.clone();
        let saved_h = self.hplus.clone();
        let saved_psi = self.psi.clone();
        let mut total = StepStats::default();
        for iter in 0..self.params.staggered_iters {
            if iter > 0 {
                self.dynamic = saved_dynamic.clone();
                self.body.plastic = saved_plastic.clone();
                self.refresh_degradation();
            }
            let st = newmark_step(&mut self.body, &mut self.dynamic, &self.scheme, &prescribed, &controls, next)?;
            total.newton_iters += st.newton_iters;
            total.cg_iters += st.cg_iters;
            let energy = self.body.tensile_energies(&self.dynamic.u, lambda, mu, self.params.energy_split);
            let mut h = saved_h.clone();
            update_history(&mut h, &energy);
            let (psi, cg) = self
                .damage
                .solve(&h, gc, self.w0, Some(&saved_psi), self.params.damage_cg_tol, self.params.cg_max_iters)
                .map_err(|e| match e {
                    PhaseFieldError::NonFinite { field, .. } => PhaseFieldError::NonFinite { field, step: next },
                    other => other,
                })?;
            total.cg_iters += cg.iterations;
            self.hplus = h;
            self.psi = psi;
        }
        for (i, (&new, &old)) in self.psi.iter().zip(&saved_psi).enumerate() {
            if new < old - 1e-12 {
                return Err(PhaseFieldError::Invariant {
                    step: next,
                    what: format!("damage decreased at node {i}: {old} -> {new}"),
                });
            }
        }
        self.refresh_degradation();
        self.step = next;
        self.after_step();
        Ok(total)
    }

    /// Damage fields at the progression points of `reference_step`; needs a recorded history.
    pub fn snapshots_at(&self, reference_step: usize) -> Option<Vec<ScalarField>> {
        let history = self.history.as_ref()?;
        let grid = *self.grid();
        Some(
            self.params
                .progression_points()
                .into_iter()
                .map(|p| {
                    let target = p * reference_step as f64;
                    let values = if p >= 1.0 && reference_step == self.step {
                        self.psi.clone()
                    } else {
                        history.nearest(target).iter().map(|&v| v as f64).collect()
                    };
                    ScalarField::from_values(grid, FieldKind::Nodal, values).expect("finite damage")
                })
                .collect(),
        )
    }
}

#[derive(Clone, Debug)]
pub struct PhaseFieldRun {
    pub psi_final: ScalarField,
    pub failure_step: Option<usize>,
    /// `failure_step * dt`; `None` marks a censored run.
    pub failure_time: Option<f64>,
    pub steps_run: usize,
    pub dt: f64,
    pub w0: f64,
    /// Damage at the progression points of the failure step (of the last step when censored).
    pub snapshots: Option<Vec<ScalarField>>,
    pub energy: Vec<EnergyRow>,
}

impl PhaseFieldRun {
    pub fn censored(&self) -> bool {
        self.failure_step.is_none()
    }

    /// Packs the run as a structured-grid training record. Damage is averaged
    /// from nodes to cells; snapshots are kept only when there are exactly ten.
    pub fn to_record(
        &self,
        config: &FractureConfig,
        material: &str,
        loading: Loading,
        seed: u64,
        registry: &MaterialRegistry,
    ) -> Result<SampleRecord, DeckError> {
        let grid = self.psi_final.grid;
        let cells = |f: &ScalarField| f.nodal_to_cells().values.iter().map(|&v| v as f32).collect::<Vec<f32>>();
        let snapshots = self
            .snapshots
            .as_ref()
            .filter(|s| s.len() == SNAPSHOT_COUNT)
            .map(|s| Snapshots::new(s.iter().map(cells).collect()));
        let meta = DeckMeta::new(SimulationKind::PhaseField, material, loading, Target::FracturePattern);
        Ok(SampleRecord {
            deck_text: render_deck_with(&meta, registry)?,
            coords: structured_coords(grid.nx, grid.ny),
            input_field: rasterize_config(config, &grid).field.values.iter().map(|&v| v as f32).collect(),
            targets: Targets {
                final_field: cells(&self.psi_final),
                failure_time: self.failure_time.map(|t| t as f32),
                censored: self.censored(),
                snapshots,
            },
            provenance: Provenance {
                source: Source::Phasefield,
                seed,
                material: material.to_string(),
                loading,
                variant: None,
            },
            grid: Some((grid.nx as u32, grid.ny as u32)),
        })
    }
}

/// Runs until the damaged set percolates or `max_steps` is reached.
pub fn run_phasefield(
    config: &FractureConfig,
    material: &MaterialSpec,
    params: &PhaseFieldParams,
    grid: &CartesianGrid,
    snapshots: bool,
) -> Result<PhaseFieldRun, PhaseFieldError> {
    let mut solver = PhaseFieldSolver::new(config, material, params, grid, snapshots)?;
    while solver.failed_at().is_none() && solver.step_index() < params.max_steps {
        solver.step()?;
    }
    let psi_final = ScalarField::from_values(*grid, FieldKind::Nodal, solver.psi().to_vec())
        .map_err(|_| PhaseFieldError::NonFinite {
            field: "damage",
            step: solver.step_index(),
        })?;
    let failure_step = solver.failed_at();
    Ok(PhaseFieldRun {
        snapshots: if snapshots {
            solver.snapshots_at(solver.step_index())
        } else {
            None
        },
        failure_time: failure_step.map(|s| s as f64 * solver.dt()),
        failure_step,
        steps_run: solver.step_index(),
        dt: solver.dt(),
        w0: solver.w0(),
        energy: solver.energy().to_vec(),
        psi_final,
    })
}

/// Samples configuration `k` from `rng.fork(k)` and simulates it. The record's
/// provenance seed is the forked stream id.
pub fn simulate_record(
    sampler: &ConfigSampler,
    material: &MaterialSpec,
    params: &PhaseFieldParams,
    grid: &CartesianGrid,
    rng: &SeededRng,
    k: u64,
    registry: &MaterialRegistry,
) -> Result<(SampleRecord, PhaseFieldRun), PhaseFieldError> {
    let mut r = rng.fork(k);
    let config = sampler.sample(&mut r);
    let run = run_phasefield(&config, material, params, grid, true)?;
    log::debug!("phase-field record {k}: {} steps, failed {:?}", run.steps_run, run.failure_step);
    let record = run.to_record(&config, &material.name, params.loading, r.stream(), registry)?;
    Ok((record, run))
}

/// Records `0..count` of [`simulate_record`].
pub fn generate_records(
    sampler: &ConfigSampler,
    material: &MaterialSpec,
    params: &PhaseFieldParams,
    grid: &CartesianGrid,
    rng: &SeededRng,
    count: usize,
    registry: &MaterialRegistry,
) -> Result<Vec<SampleRecord>, PhaseFieldError> {
    (0..count as u64)
        .map(|k| simulate_record(sampler, material, params, grid, rng, k, registry).map(|(rec, _)| rec))
        .collect()
}
