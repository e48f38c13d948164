//! Ordered stages and the pretrain-versus-scratch comparison.

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::{field_example, temporal_examples, ttf_example, ContextCache, Example, Task, TtfScaler};
use super::stage::{evaluate_l1, train_stage, Feed, LossRow, RunOptions, StageReport, StageSpec};
use super::TrainError;
use crate::model::{Model, ModelConfig};
use fracture_core::dataset::{read_shard, split, SampleRecord};
use fracture_core::initcond::ConfigSampler;
use fracture_core::rulebased::{generate_stream, StreamParams};
use fracture_core::{CartesianGrid, SeededRng};

fn eight() -> usize {
    8
}
fn one() -> u32 {
    1
}
fn sixty_four() -> usize {
    64
}

/// Where a stage's records come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    /// Surrogate records generated on the fly on an `n x n` grid.
    Rulebased {
        seed: u64,
        #[serde(default = "eight")]
        grid: usize,
        #[serde(default)]
        sampler: Option<ConfigSampler>,
        #[serde(default = "one")]
        freeze_steps: u32,
        /// Held-out records drawn from a separate stream.
        #[serde(default = "sixty_four")]
        val_count: usize,
    },
    /// Shard files; 10% of records (by provenance seed) are held out.
    Dataset { paths: Vec<PathBuf> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannedStage {
    pub source: SourceSpec,
    #[serde(flatten)]
    pub stage: StageSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurriculumPlan {
    pub stages: Vec<PlannedStage>,
}

/// Held-out share used for dataset sources.
pub const VALIDATION_FRACTION: f64 = 0.1;

/// Splits records 90/10 by provenance seed and stratum.
pub fn train_val_split(records: Vec<SampleRecord>, seed: u64) -> Result<(Vec<SampleRecord>, Vec<SampleRecord>), TrainError> {
    let s = split(&records, [1.0 - VALIDATION_FRACTION, VALIDATION_FRACTION, 0.0], seed).map_err(|e| TrainError::Data(e.to_string()))?;
    let mut slots: Vec<Option<SampleRecord>> = records.into_iter().map(Some).collect();
    let take = |idx: &[usize], slots: &mut Vec<Option<SampleRecord>>| idx.iter().map(|&i| slots[i].take().unwrap()).collect();
    let train = take(&s.train, &mut slots);
    let val = take(&s.val, &mut slots);
    Ok((train, val))
}

/// Examples for `task` from records; time-to-failure targets use `scaler`.
pub fn examples_for(records: &[SampleRecord], task: Task, ctx: &mut ContextCache, scaler: Option<&TtfScaler>) -> Result<Vec<Example>, TrainError> {
    let mut out = Vec::new();
    for r in records {
        match task {
            Task::Field => out.push(field_example(r, ctx)?),
            Task::Temporal => out.extend(temporal_examples(r, ctx)?),
            Task::TimeToFailure => {
                let s = scaler.ok_or_else(|| TrainError::Plan("time-to-failure examples need a fitted scaler".into()))?;
                if r.targets.failure_time.is_some() && !r.targets.censored {
                    out.push(ttf_example(r, ctx, s)?);
                }
            }
        }
    }
    Ok(out)
}

/// Builds the feed and validation set of a planned stage.
pub fn resolve_source(source: &SourceSpec, task: Task, ctx: &mut ContextCache) -> Result<(Feed, Vec<Example>), TrainError> {
    match source {
        SourceSpec::Rulebased {
            seed,
            grid,
            sampler,
            freeze_steps,
            val_count,
        } => {
            if task != Task::Field {
                return Err(TrainError::Incompatible(format!("surrogate streams provide final fields only, not {task:?}")));
            }
            let g = CartesianGrid::square(*grid, 0.25).map_err(|e| TrainError::Plan(e.to_string()))?;
            let sampler = sampler.clone().unwrap_or_default();
            sampler.validate().map_err(|e| TrainError::Plan(e.to_string()))?;
            let mut params = StreamParams::with_defaults(sampler, g);
            params.freeze_steps = *freeze_steps;
            let val_stream = generate_stream(&SeededRng::new(*seed, 1), params.clone());
            let val = (0..*val_count as u64)
                .map(|k| field_example(&val_stream.record_at(k).0, ctx))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((Feed::stream(generate_stream(&SeededRng::new(*seed, 0), params)), val))
        }
        SourceSpec::Dataset { paths } => {
            let mut records = Vec::new();
            for p in paths {
                records.extend(read_shard(p).map_err(|e| TrainError::Data(format!("{}: {e}", p.display())))?);
            }
            let (train, val) = train_val_split(records, 0)?;
            let scaler = if task == Task::TimeToFailure { Some(TtfScaler::fit(&train)?) } else { None };
            let tr = examples_for(&train, task, ctx, scaler.as_ref())?;
            let va = examples_for(&val, task, ctx, scaler.as_ref())?;
            Ok((Feed::Pool(tr), va))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurriculumReport {
    pub stages: Vec<StageReport>,
    pub total_steps: usize,
}

impl CurriculumReport {
    pub fn rows(&self) -> Vec<LossRow> {
        self.stages.iter().flat_map(|s| s.rows.iter().cloned()).collect()
    }
}

/// A stage with its data already resolved.
pub struct ResolvedStage {
    pub spec: StageSpec,
    pub feed: Feed,
    pub val: Vec<Example>,
}

/// Runs stages in order on one model.
pub fn run_stages(model: &mut Model, stages: Vec<ResolvedStage>, ctx: &mut ContextCache, opts: &RunOptions) -> Result<CurriculumReport, TrainError> {
    let mut reports = Vec::with_capacity(stages.len());
    let mut total = 0;
    for mut s in stages {
        let r = train_stage(model, &s.spec, &mut s.feed, &s.val, ctx, opts, total)?;
        total += r.steps;
        reports.push(r);
    }
    Ok(CurriculumReport {
        stages: reports,
        total_steps: total,
    })
}

/// Resolves every source first (so a bad path fails before any training), then runs the plan.
pub fn run_curriculum(plan: &CurriculumPlan, model: &mut Model, ctx: &mut ContextCache, opts: &RunOptions) -> Result<CurriculumReport, TrainError> {
    if plan.stages.is_empty() {
        return Err(TrainError::Plan("plan has no stages".into()));
    }
    let mut resolved = Vec::with_capacity(plan.stages.len());
    for p in &plan.stages {
        p.stage.validate()?;
        let (feed, val) = if p.stage.steps == 0 {
            (Feed::Pool(Vec::new()), Vec::new())
        } else {
            resolve_source(&p.source, p.stage.task, ctx)?
        };
        resolved.push(ResolvedStage {
            spec: p.stage.clone(),
            feed,
            val,
        });
    }
    run_stages(model, resolved, ctx, opts)
}

/// How many steps the from-scratch arm gets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMatching {
    /// Pretrain plus finetune steps: equal optimizer steps in both arms.
    TotalSteps,
    /// Only the finetune steps.
    FinetuneSteps,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbConfig {
    pub model: ModelConfig,
    pub pretrain_source: SourceSpec,
    pub pretrain: StageSpec,
    pub finetune: StageSpec,
    pub seeds: Vec<u64>,
    pub matching: StepMatching,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbRow {
    pub seed: u64,
    pub pretrained_l1: f64,
    pub scratch_l1: f64,
    pub pretrained_steps: usize,
    pub scratch_steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbReport {
    pub rows: Vec<AbRow>,
}

impl AbReport {
    /// Seeds where pretraining gave the lower held-out L1.
    pub fn wins(&self) -> usize {
        self.rows.iter().filter(|r| r.pretrained_l1 < r.scratch_l1).count()
    }

    /// Mean relative improvement `1 - pretrained / scratch`.
    pub fn mean_improvement(&self) -> f64 {
        self.rows.iter().map(|r| 1.0 - r.pretrained_l1 / r.scratch_l1).sum::<f64>() / self.rows.len().max(1) as f64
    }
}

/// Paired comparison of pretrain-then-finetune against training from scratch
/// on the finetune pool. Both arms of a seed start from the same weights and
/// are scored on the same held-out examples.
pub fn ab_harness(cfg: &AbConfig, finetune_pool: &[Example], held_out: &[Example], ctx: &mut ContextCache, opts: &RunOptions) -> Result<AbReport, TrainError> {
    if held_out.is_empty() || finetune_pool.is_empty() {
        return Err(TrainError::Data("A/B comparison needs finetune and held-out examples".into()));
    }
    let workers = if opts.workers > 0 { opts.workers } else { std::thread::available_parallelism().map_or(1, |n| n.get()) };
    let mut rows = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let init = Model::new(cfg.model.clone(), &mut ChaCha8Rng::seed_from_u64(seed))?;
        let mut pre = cfg.pretrain.clone();
        pre.seed ^= seed;
        let mut fin = cfg.finetune.clone();
        fin.seed ^= seed;
        let src = match &cfg.pretrain_source {
            SourceSpec::Rulebased {
                seed: s,
                grid,
                sampler,
                freeze_steps,
                val_count,
            } => SourceSpec::Rulebased {
                seed: s ^ seed,
                grid: *grid,
                sampler: sampler.clone(),
                freeze_steps: *freeze_steps,
                val_count: *val_count,
            },
            other => other.clone(),
        };

        let mut a = init.clone();
        let (feed, _) = resolve_source(&src, pre.task, ctx)?;
        let arm_a = run_stages(
            &mut a,
            vec![
                ResolvedStage { spec: pre.clone(), feed, val: Vec::new() },
                ResolvedStage {
                    spec: fin.clone(),
                    feed: Feed::Pool(finetune_pool.to_vec()),
                    val: Vec::new(),
                },
            ],
            ctx,
            opts,
        )?;

        let mut b = init;
        let mut scratch = fin.clone();
        scratch.name = format!("{}-scratch", fin.name);
        scratch.steps = match cfg.matching {
            StepMatching::TotalSteps => pre.steps + fin.steps,
            StepMatching::FinetuneSteps => fin.steps,
        };
        let arm_b = run_stages(
            &mut b,
            vec![ResolvedStage {
                spec: scratch,
                feed: Feed::Pool(finetune_pool.to_vec()),
                val: Vec::new(),
            }],
            ctx,
            opts,
        )?;
        let row = AbRow {
            seed,
            pretrained_l1: evaluate_l1(&a, held_out, workers)?,
            scratch_l1: evaluate_l1(&b, held_out, workers)?,
            pretrained_steps: arm_a.total_steps,
            scratch_steps: arm_b.total_steps,
        };
        log::info!("A/B seed {seed}: pretrained {:.4}, scratch {:.4}", row.pretrained_l1, row.scratch_l1);
        rows.push(row);
    }
    Ok(AbReport { rows })
}
