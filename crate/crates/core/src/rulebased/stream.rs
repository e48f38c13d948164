//! Endless, reproducible stream of surrogate training samples.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{run_rule_sim, Arrest, Axis, GrowthMode};
use crate::dataset::{structured_coords, Provenance, SampleRecord, Source, Targets};
use crate::deck::{render_deck, DeckMeta, Loading, SimulationKind, Target, GENERIC_MATERIAL};
use crate::grid::CartesianGrid;
use crate::initcond::ConfigSampler;
use crate::rng::{splitmix64, SeededRng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamParams {
    pub sampler: ConfigSampler,
    pub grid: CartesianGrid,
    pub max_steps: usize,
    #[serde(default = "one")]
    pub freeze_steps: u32,
    /// Growth modes to draw from; empty means all four.
    #[serde(default)]
    pub modes: Vec<(Arrest, Axis)>,
}

fn one() -> u32 {
    1
}

impl StreamParams {
    /// Enough steps for a tip to cross the grid even after a few freezes.
    pub fn with_defaults(sampler: ConfigSampler, grid: CartesianGrid) -> Self {
        let max_steps = 3 * grid.nx.max(grid.ny);
        Self {
            sampler,
            grid,
            max_steps,
            freeze_steps: 1,
            modes: Vec::new(),
        }
    }
}

/// Iterator over rule-based [`SampleRecord`]s. Record `k` depends only on the
/// stream's `(seed, stream)` and `k`, so streams can be sharded by index.
pub struct RuleStream {
    params: StreamParams,
    seed: u64,
    stream: u64,
    next: u64,
}

pub fn generate_stream(rng: &SeededRng, params: StreamParams) -> RuleStream {
    RuleStream {
        params,
        seed: rng.seed(),
        stream: rng.stream(),
        next: 0,
    }
}

impl RuleStream {
    pub fn record_at(&self, index: u64) -> (SampleRecord, GrowthMode) {
        let id = splitmix64(self.stream ^ splitmix64(index.wrapping_add(0xA5A5)));
        let mut rng = SeededRng::new(self.seed, id);
        let pool: &[(Arrest, Axis)] = if self.params.modes.is_empty() {
            &GrowthMode::ALL
        } else {
            &self.params.modes
        };
        let (arrest, axis) = pool[rng.random_range(0..pool.len())];
        let mode = match arrest {
            Arrest::T => GrowthMode::t(axis),
            Arrest::X => GrowthMode::x(axis, self.params.freeze_steps),
        };
        let config = self.params.sampler.sample(&mut rng);
        let g = &self.params.grid;
        let result = run_rule_sim(&config, g, &mode, self.params.max_steps.max(1), false);
        let variant = format!(
            "{}-mode {} growth",
            match arrest {
                Arrest::T => "T",
                Arrest::X => "X",
            },
            match axis {
                Axis::Horizontal => "horizontal",
                Axis::Vertical => "vertical",
            }
        );
        let mut meta = DeckMeta::new(SimulationKind::RuleBased, GENERIC_MATERIAL, Loading::Axial, Target::FracturePattern);
        meta.variant = Some(variant.clone());
        let deck_text = render_deck(&meta).expect("surrogate deck uses fixed vocabulary");
        let record = SampleRecord {
            deck_text,
            coords: structured_coords(g.nx, g.ny),
            input_field: result.initial.to_f32(),
            targets: Targets {
                final_field: result.occupancy.to_f32(),
                failure_time: result.failed_at.map(|s| s as f32),
                censored: result.failed_at.is_none(),
                snapshots: None,
            },
            provenance: Provenance {
                source: Source::Rulebased,
                seed: id,
                material: GENERIC_MATERIAL.into(),
                loading: Loading::Axial,
                variant: Some(variant),
            },
            grid: Some((g.nx as u32, g.ny as u32)),
        };
        (record, mode)
    }

    /// Like `next`, also returning the growth mode.
    pub fn next_with_mode(&mut self) -> (SampleRecord, GrowthMode) {
        let r = self.record_at(self.next);
        self.next += 1;
        r
    }
}

impl Iterator for RuleStream {
    type Item = SampleRecord;

    fn next(&mut self) -> Option<SampleRecord> {
        Some(self.next_with_mode().0)
    }
}
