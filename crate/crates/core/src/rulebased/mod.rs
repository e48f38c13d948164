//! Rule-based fracture surrogate.
//!
//! Fracture tips walk one cell per step along a fixed axis over a binary
//! occupancy grid. In T mode a tip that runs into an existing fracture stops;
//! in X mode it pauses and then passes through. Failure is a connected path of
//! fractured cells between opposite borders.

mod percolation;
mod stream;

pub use percolation::{check_failure, check_failure_with, Connectivity};
pub use stream::{generate_stream, RuleStream, StreamParams};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::geometry::{segment_cells, FractureConfig, Orientation};
use crate::grid::{CartesianGrid, FieldKind, ScalarField};

/// Binary cell grid, row-major (`j * nx + i`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Occupancy {
    pub nx: usize,
    pub ny: usize,
    pub cells: Vec<bool>,
}

impl Occupancy {
    pub fn new(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            cells: vec![false; nx * ny],
        }
    }

    pub fn from_field(field: &ScalarField) -> Self {
        assert_eq!(field.kind, FieldKind::Cell, "occupancy is defined on cells");
        Self {
            nx: field.grid.nx,
            ny: field.grid.ny,
            cells: field.values.iter().map(|&v| v >= 0.5).collect(),
        }
    }

    /// Thresholds a row-major array of `nx * ny` values.
    pub fn from_threshold(nx: usize, ny: usize, values: &[f64], threshold: f64) -> Self {
        assert_eq!(values.len(), nx * ny);
        Self {
            nx,
            ny,
            cells: values.iter().map(|&v| v >= threshold).collect(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[j * self.nx + i]
    }

    pub fn set(&mut self, i: usize, j: usize) {
        self.cells[j * self.nx + i] = true;
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn is_superset_of(&self, other: &Occupancy) -> bool {
        self.cells.len() == other.cells.len() && self.cells.iter().zip(&other.cells).all(|(&a, &b)| a || !b)
    }

    pub fn to_f32(&self) -> Vec<f32> {
        self.cells.iter().map(|&c| if c { 1.0 } else { 0.0 }).collect()
    }

    /// Plain-text grayscale dump (PGM "P2"), top row first.
    pub fn to_pgm(&self) -> String {
        let mut s = format!("P2\n{} {}\n1\n", self.nx, self.ny);
        for j in (0..self.ny).rev() {
            let row: Vec<&str> = (0..self.nx).map(|i| if self.get(i, j) { "1" } else { "0" }).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arrest {
    T,
    X,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Horizontal,
    Vertical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GrowthMode {
    pub arrest: Arrest,
    pub axis: Axis,
    /// Extra steps an X-mode tip waits after hitting a fracture.
    pub freeze_steps: u32,
}

impl GrowthMode {
    pub fn t(axis: Axis) -> Self {
        Self {
            arrest: Arrest::T,
            axis,
            freeze_steps: 1,
        }
    }

    pub fn x(axis: Axis, freeze_steps: u32) -> Self {
        Self {
            arrest: Arrest::X,
            axis,
            freeze_steps: freeze_steps.max(1),
        }
    }

    pub const ALL: [(Arrest, Axis); 4] = [
        (Arrest::T, Axis::Horizontal),
        (Arrest::T, Axis::Vertical),
        (Arrest::X, Axis::Horizontal),
        (Arrest::X, Axis::Vertical),
    ];

    /// Index into [`GrowthMode::ALL`].
    pub fn index(&self) -> usize {
        Self::ALL.iter().position(|&(a, x)| a == self.arrest && x == self.axis).unwrap()
    }
}

impl fmt::Display for GrowthMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = match self.arrest {
            Arrest::T => "T",
            Arrest::X => "X",
        };
        let x = match self.axis {
            Axis::Horizontal => "horizontal",
            Axis::Vertical => "vertical",
        };
        write!(f, "{a}-{x}")
    }
}

/// Parses `T-horizontal`, `x-vertical`, ... (freeze steps default to 1).
impl FromStr for GrowthMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_lowercase();
        let (a, x) = lower
            .split_once(['-', '_', ' '])
            .ok_or_else(|| format!("invalid growth mode `{s}`; expected one of T-horizontal, T-vertical, X-horizontal, X-vertical"))?;
        let axis = match x {
            "horizontal" | "h" => Axis::Horizontal,
            "vertical" | "v" => Axis::Vertical,
            _ => return Err(format!("invalid growth axis `{x}` in `{s}`; expected horizontal or vertical")),
        };
        match a {
            "t" => Ok(GrowthMode::t(axis)),
            "x" => Ok(GrowthMode::x(axis, 1)),
            _ => Err(format!("invalid arrest rule `{a}` in `{s}`; expected T or X")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Tip {
    pub cell: (usize, usize),
    /// Unit step along the growth axis, -1 or +1.
    pub direction: i8,
    pub frozen_remaining: u32,
    pub alive: bool,
    /// Set when an X-mode freeze expires: the next move enters the blocking cell.
    passing: bool,
}

impl Tip {
    pub fn new(cell: (usize, usize), direction: i8) -> Self {
        Self {
            cell,
            direction,
            frozen_remaining: 0,
            alive: true,
            passing: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RuleSimState {
    pub occupancy: Occupancy,
    pub tips: Vec<Tip>,
    pub step: usize,
    pub failed_at: Option<usize>,
}

/// Rasterises the configuration and spawns two outward tips at the ends of
/// every segment aligned with the growth axis. Other segments are obstacles.
pub fn init_rule_sim(config: &FractureConfig, grid: &CartesianGrid, mode: &GrowthMode) -> RuleSimState {
    let raster = crate::geometry::rasterize_config(config, grid);
    let occupancy = Occupancy::from_field(&raster.field);
    let mut tips = Vec::new();
    for seg in &config.segments {
        let aligned = matches!(
            (seg.orientation, mode.axis),
            (Orientation::Horizontal, Axis::Horizontal) | (Orientation::Vertical, Axis::Vertical)
        );
        if !aligned {
            continue;
        }
        let Some(seg) = seg.clipped(config.side_length) else {
            continue;
        };
        let (ci, cj) = grid.cell_of(seg.center);
        let cells = segment_cells(&seg, grid);
        let (lo, hi) = match mode.axis {
            Axis::Horizontal => {
                let cols = cells.iter().filter(|c| c.1 == cj).map(|c| c.0);
                (cols.clone().min(), cols.max())
            }
            Axis::Vertical => {
                let rows = cells.iter().filter(|c| c.0 == ci).map(|c| c.1);
                (rows.clone().min(), rows.max())
            }
        };
        let (Some(lo), Some(hi)) = (lo, hi) else {
            continue;
        };
        match mode.axis {
            Axis::Horizontal => {
                tips.push(Tip::new((lo, cj), -1));
                tips.push(Tip::new((hi, cj), 1));
            }
            Axis::Vertical => {
                tips.push(Tip::new((ci, lo), -1));
                tips.push(Tip::new((ci, hi), 1));
            }
        }
    }
    RuleSimState {
        occupancy,
        tips,
        step: 0,
        failed_at: None,
    }
}

/// Builds a state from an explicit occupancy and tip list.
pub fn state_from_parts(occupancy: Occupancy, tips: Vec<Tip>) -> RuleSimState {
    RuleSimState {
        occupancy,
        tips,
        step: 0,
        failed_at: None,
    }
}

/// Advances every live tip by one step. Targets are read from the grid as it
/// was at the start of the step, so tip order never matters.
pub fn step(state: &mut RuleSimState, mode: &GrowthMode) {
    let before = state.occupancy.clone();
    let (nx, ny) = (before.nx as isize, before.ny as isize);
    for tip in state.tips.iter_mut().filter(|t| t.alive) {
        if tip.frozen_remaining > 0 {
            tip.frozen_remaining -= 1;
            if tip.frozen_remaining == 0 {
                tip.passing = true;
            }
            continue;
        }
        let (i, j) = (tip.cell.0 as isize, tip.cell.1 as isize);
        let (ti, tj) = match mode.axis {
            Axis::Horizontal => (i + tip.direction as isize, j),
            Axis::Vertical => (i, j + tip.direction as isize),
        };
        if ti < 0 || tj < 0 || ti >= nx || tj >= ny {
            tip.alive = false;
            continue;
        }
        let target = (ti as usize, tj as usize);
        if before.get(target.0, target.1) && !tip.passing {
            match mode.arrest {
                Arrest::T => tip.alive = false,
                Arrest::X => tip.frozen_remaining = mode.freeze_steps.max(1),
            }
            continue;
        }
        tip.passing = false;
        tip.cell = target;
        state.occupancy.set(target.0, target.1);
    }
    state.step += 1;
}

pub fn has_live_tips(state: &RuleSimState) -> bool {
    state.tips.iter().any(|t| t.alive)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RuleSimResult {
    pub initial: Occupancy,
    pub occupancy: Occupancy,
    pub failed_at: Option<usize>,
    pub steps_run: usize,
    /// Occupancy after every step (index 0 is the initial grid), when requested.
    pub trajectory: Option<Vec<Occupancy>>,
}

/// Runs until the failure path appears or `max_steps` elapse.
///
/// The simulation also stops early once no tip is alive, since the grid can no
/// longer change.
pub fn run_rule_sim(
    config: &FractureConfig,
    grid: &CartesianGrid,
    mode: &GrowthMode,
    max_steps: usize,
    record_trajectory: bool,
) -> RuleSimResult {
    let state = init_rule_sim(config, grid, mode);
    run_from_state(state, mode, max_steps, record_trajectory)
}

pub fn run_from_state(mut state: RuleSimState, mode: &GrowthMode, max_steps: usize, record_trajectory: bool) -> RuleSimResult {
    assert!(max_steps >= 1, "max_steps must be at least 1");
    let initial = state.occupancy.clone();
    let mut trajectory = record_trajectory.then(|| vec![initial.clone()]);
    if check_failure(&state.occupancy, mode.axis) {
        state.failed_at = Some(0);
    }
    while state.failed_at.is_none() && state.step < max_steps && has_live_tips(&state) {
        step(&mut state, mode);
        if let Some(t) = trajectory.as_mut() {
            t.push(state.occupancy.clone());
        }
        if check_failure(&state.occupancy, mode.axis) {
            state.failed_at = Some(state.step);
        }
    }
    RuleSimResult {
        initial,
        occupancy: state.occupancy,
        failed_at: state.failed_at,
        steps_run: state.step,
        trajectory,
    }
}
