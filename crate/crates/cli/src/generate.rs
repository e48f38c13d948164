//! `gen-rulebased` and `gen-phasefield`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use fracture_core::initcond::ConfigSampler;
use fracture_core::phasefield::{simulate_record, write_energy_csv, PhaseFieldParams};
use fracture_core::rulebased::{generate_stream, GrowthMode, StreamParams};
use fracture_core::{CartesianGrid, MaterialRegistry, SeededRng};
use serde::Deserialize;

use crate::error::invalid;
use crate::output::{create_out, load_manifest, par_indexed, write_shards, write_stamp, RunContext};

fn eight() -> usize {
    8
}
fn thirty_two() -> usize {
    32
}
fn one() -> u32 {
    1
}
fn shard_size() -> usize {
    10_000
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RulebasedManifest {
    seed: u64,
    count: usize,
    /// Cells per side.
    #[serde(default = "eight")]
    grid: usize,
    #[serde(default)]
    sampler: Option<ConfigSampler>,
    /// Growth modes to draw from, e.g. `["T-horizontal", "X-vertical"]`; empty means all.
    #[serde(default)]
    modes: Vec<String>,
    #[serde(default = "one")]
    freeze_steps: u32,
    #[serde(default)]
    max_steps: Option<usize>,
    #[serde(default = "shard_size")]
    shard_size: usize,
}

fn checked_grid(n: usize, sampler: &ConfigSampler) -> anyhow::Result<CartesianGrid> {
    sampler.validate().map_err(|e| invalid(format!("sampler: {e}")))?;
    CartesianGrid::square(n, sampler.side_length).map_err(|e| invalid(format!("grid: {e}")))
}

pub fn rulebased(manifest: &Path, out: &Path, ctx: &RunContext) -> anyhow::Result<()> {
    let m = load_manifest::<RulebasedManifest>(manifest)?;
    let cfg = &m.value;
    let sampler = cfg.sampler.clone().unwrap_or_default();
    let grid = checked_grid(cfg.grid, &sampler)?;
    let mut modes = Vec::new();
    for s in &cfg.modes {
        let g: GrowthMode = s.parse().map_err(invalid)?;
        modes.push((g.arrest, g.axis));
    }
    let mut params = StreamParams::with_defaults(sampler, grid);
    params.freeze_steps = cfg.freeze_steps.max(1);
    params.modes = modes;
    if let Some(s) = cfg.max_steps {
        if s == 0 {
            return Err(invalid("max_steps must be at least 1"));
        }
        params.max_steps = s;
    }
    create_out(out)?;
    let stream = generate_stream(&SeededRng::new(cfg.seed, 0), params);
    let generated = par_indexed(cfg.count, ctx.worker_count(), |k| stream.record_at(k as u64));
    let mut per_mode: BTreeMap<String, usize> = BTreeMap::new();
    let mut failed = 0;
    for (r, mode) in &generated {
        *per_mode.entry(mode.to_string()).or_default() += 1;
        failed += usize::from(!r.targets.censored);
    }
    let records: Vec<_> = generated.into_iter().map(|(r, _)| r).collect();
    let index = write_shards(&records, out, "rulebased", cfg.shard_size)?;
    write_stamp(out, "gen-rulebased", &m.sha256, Some(cfg.seed))?;
    println!("{} records in {} shard(s), {failed} reached failure", records.len(), index.shards.len());
    for (mode, n) in per_mode {
        println!("  {mode}: {n}");
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PhasefieldManifest {
    seed: u64,
    count: usize,
    #[serde(default = "thirty_two")]
    grid: usize,
    material: String,
    /// Extra materials (JSON list of material specs) added to the built-in registry.
    #[serde(default)]
    materials_file: Option<PathBuf>,
    #[serde(default)]
    params: PhaseFieldParams,
    #[serde(default)]
    sampler: Option<ConfigSampler>,
    #[serde(default = "shard_size")]
    shard_size: usize,
}

pub fn registry_with(extra: Option<&Path>) -> anyhow::Result<MaterialRegistry> {
    let mut reg = MaterialRegistry::with_defaults();
    if let Some(p) = extra {
        reg.load_json_file(p).map_err(|e| invalid(format!("materials file {}: {e}", p.display())))?;
    }
    Ok(reg)
}

pub fn phasefield(manifest: &Path, out: &Path, ctx: &RunContext) -> anyhow::Result<()> {
    let m = load_manifest::<PhasefieldManifest>(manifest)?;
    let cfg = &m.value;
    let reg = registry_with(cfg.materials_file.as_deref())?;
    let material = reg.get(&cfg.material).map_err(|e| invalid(e.to_string()))?;
    let sampler = cfg.sampler.clone().unwrap_or_default();
    let grid = checked_grid(cfg.grid, &sampler)?;
    cfg.params.resolve(&grid, material).map_err(|e| invalid(e.to_string()))?;
    create_out(out)?;
    let energy_dir = out.join("energy");
    create_out(&energy_dir)?;
    let rng = SeededRng::new(cfg.seed, 0);
    let runs = par_indexed(cfg.count, ctx.worker_count(), |k| {
        simulate_record(&sampler, material, &cfg.params, &grid, &rng, k as u64, &reg)
    });
    let mut records = Vec::with_capacity(runs.len());
    for (k, r) in runs.into_iter().enumerate() {
        let (record, run) = r.with_context(|| format!("phase-field run {k}"))?;
        let path = energy_dir.join(format!("run-{k:05}.csv"));
        let file = std::fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
        write_energy_csv(&run.energy, std::io::BufWriter::new(file))?;
        records.push(record);
    }
    let censored = records.iter().filter(|r| r.targets.censored).count();
    let index = write_shards(&records, out, "phasefield", cfg.shard_size)?;
    write_stamp(out, "gen-phasefield", &m.sha256, Some(cfg.seed))?;
    println!(
        "{} {} records in {} shard(s): {} failed, {censored} censored",
        records.len(),
        material.name,
        index.shards.len(),
        records.len() - censored
    );
    Ok(())
}
