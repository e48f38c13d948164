//! WebAssembly bindings for the browser demo in `www/`.
//!
//! A [`Demo`] holds one sampled fracture network and lets the page either grow
//! it with the rule-based surrogate or load it into a small phase-field solve.
//! Every view is returned as a row-major cell field in `[0, 1]`.

use fracture_core::geometry::rasterize_config;
use fracture_core::initcond::ConfigSampler;
use fracture_core::phasefield::{PhaseFieldParams, PhaseFieldSolver};
use fracture_core::rulebased::{check_failure, has_live_tips, init_rule_sim, step, GrowthMode, RuleSimState};
use fracture_core::{CartesianGrid, FieldKind, FractureConfig, MaterialRegistry, ScalarField, SeededRng};
use wasm_bindgen::prelude::*;

/// Steps after which the phase-field view gives up on percolation.
const PF_MAX_STEPS: usize = 4000;

#[wasm_bindgen]
pub struct Demo {
    grid: CartesianGrid,
    config: FractureConfig,
    mode: GrowthMode,
    rule: RuleSimState,
    solver: Option<PhaseFieldSolver>,
    registry: MaterialRegistry,
}

fn rule_cells(state: &RuleSimState) -> Vec<f32> {
    state.occupancy.to_f32()
}

#[wasm_bindgen]
impl Demo {
    /// A demo on an `n x n` grid with no fractures yet.
    #[wasm_bindgen(constructor)]
    pub fn new(n: usize) -> Result<Demo, String> {
        let sampler = ConfigSampler::default();
        let grid = CartesianGrid::square(n, sampler.side_length).map_err(|e| e.to_string())?;
        let config = FractureConfig {
            side_length: sampler.side_length,
            segments: Vec::new(),
        };
        let mode = GrowthMode::t(fracture_core::rulebased::Axis::Horizontal);
        let rule = init_rule_sim(&config, &grid, &mode);
        Ok(Demo {
            grid,
            config,
            mode,
            rule,
            solver: None,
            registry: MaterialRegistry::with_defaults(),
        })
    }

    pub fn width(&self) -> usize {
        self.grid.nx
    }

    /// Draws a new network with `lo..=hi` fractures per direction and resets both simulations.
    pub fn sample(&mut self, seed: u64, lo: u32, hi: u32) -> Result<Vec<f32>, String> {
        let sampler = ConfigSampler {
            n_per_direction: (lo.min(hi), lo.max(hi)),
            ..ConfigSampler::default()
        };
        sampler.validate().map_err(|e| e.to_string())?;
        self.config = sampler.sample(&mut SeededRng::new(seed, 0));
        self.solver = None;
        self.rule = init_rule_sim(&self.config, &self.grid, &self.mode);
        Ok(self.initial())
    }

    /// The rasterized network with no growth applied.
    pub fn initial(&self) -> Vec<f32> {
        rasterize_config(&self.config, &self.grid).field.values.iter().map(|&v| v as f32).collect()
    }

    pub fn fracture_count(&self) -> usize {
        self.config.segments.len()
    }

    /// Restarts rule-based growth under `mode`, e.g. `"X-vertical"`.
    pub fn set_mode(&mut self, mode: &str) -> Result<Vec<f32>, String> {
        self.mode = mode.parse()?;
        self.rule = init_rule_sim(&self.config, &self.grid, &self.mode);
        Ok(rule_cells(&self.rule))
    }

    /// Advances rule-based growth one step.
    pub fn rule_step(&mut self) -> Vec<f32> {
        if self.rule_running() {
            step(&mut self.rule, &self.mode);
            if check_failure(&self.rule.occupancy, self.mode.axis) {
                self.rule.failed_at = Some(self.rule.step);
            }
        }
        rule_cells(&self.rule)
    }

    pub fn rule_steps(&self) -> usize {
        self.rule.step
    }

    /// False once the network has failed or no tip can grow.
    pub fn rule_running(&self) -> bool {
        self.rule.failed_at.is_none() && has_live_tips(&self.rule) && !check_failure(&self.rule.occupancy, self.mode.axis)
    }

    pub fn rule_failed(&self) -> bool {
        self.rule.failed_at.is_some() || check_failure(&self.rule.occupancy, self.mode.axis)
    }

    /// Loads the current network into a phase-field solve of `material` under axial extension.
    pub fn pf_start(&mut self, material: &str) -> Result<Vec<f32>, String> {
        let spec = self.registry.get(material).map_err(|e| e.to_string())?;
        let params = PhaseFieldParams {
            max_steps: PF_MAX_STEPS,
            ..PhaseFieldParams::default()
        };
        let solver = PhaseFieldSolver::new(&self.config, spec, &params, &self.grid, false).map_err(|e| e.to_string())?;
        self.solver = Some(solver);
        self.pf_damage()
    }

    /// Advances the solve by up to `k` steps, stopping early at failure.
    pub fn pf_step(&mut self, k: usize) -> Result<Vec<f32>, String> {
        let solver = self.solver.as_mut().ok_or("no phase-field run; call pf_start first")?;
        for _ in 0..k {
            if solver.failed_at().is_some() || solver.step_index() >= PF_MAX_STEPS {
                break;
            }
            solver.step().map_err(|e| e.to_string())?;
        }
        self.pf_damage()
    }

    /// Damage averaged onto cells.
    pub fn pf_damage(&self) -> Result<Vec<f32>, String> {
        let solver = self.solver.as_ref().ok_or("no phase-field run")?;
        let nodal = ScalarField::from_values(self.grid, FieldKind::Nodal, solver.psi().to_vec()).map_err(|e| e.to_string())?;
        Ok(nodal.nodal_to_cells().values.iter().map(|&v| v as f32).collect())
    }

    pub fn pf_steps(&self) -> usize {
        self.solver.as_ref().map_or(0, |s| s.step_index())
    }

    /// Simulated time in microseconds.
    pub fn pf_time_us(&self) -> f64 {
        self.solver.as_ref().map_or(0.0, |s| s.time() * 1e6)
    }

    pub fn pf_failed(&self) -> bool {
        self.solver.as_ref().is_some_and(|s| s.failed_at().is_some())
    }

    pub fn materials(&self) -> Vec<String> {
        self.registry.names()
    }
}
