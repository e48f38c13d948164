//! Downstream fine-tuning tasks.

use serde::{Deserialize, Serialize};

use super::curriculum::{examples_for, run_stages, train_val_split, CurriculumReport, ResolvedStage};
use super::data::{ContextCache, Task, TtfScaler};
use super::stage::{Feed, RunOptions, StageSpec};
use super::TrainError;
use crate::model::{Mask, Model};
use fracture_core::dataset::SampleRecord;

/// Steps used for new-material fine-tuning when none are given.
pub const NEW_MATERIAL_STEPS: usize = 1500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinetuneTask {
    NewMaterial,
    Temporal,
    TimeToFailure,
    Unstructured,
}

impl std::str::FromStr for FinetuneTask {
    type Err = TrainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| TrainError::Plan(format!("unknown task `{s}` (new_material, temporal, time_to_failure, unstructured)")))
    }
}

#[derive(Clone, Debug)]
pub struct FinetuneOutcome {
    pub report: CurriculumReport,
    /// Failure-time standardization, for the time-to-failure task.
    pub scaler: Option<TtfScaler>,
}

fn check_records(task: FinetuneTask, records: &[SampleRecord], registry: &fracture_core::MaterialRegistry) -> Result<(), TrainError> {
    if records.is_empty() {
        return Err(TrainError::Data(format!("{task:?} fine-tuning needs at least one record")));
    }
    match task {
        FinetuneTask::NewMaterial => {
            let m = records[0].provenance.material.to_lowercase();
            for r in records {
                if r.provenance.material.to_lowercase() != m {
                    return Err(TrainError::Incompatible(format!(
                        "new-material records mix `{m}` and `{}`",
                        r.provenance.material
                    )));
                }
                if !r.deck_text.to_lowercase().contains(&m) {
                    return Err(TrainError::Incompatible(format!("deck text does not name the material `{m}`: {}", r.deck_text)));
                }
            }
            if !registry.contains(&m) {
                return Err(TrainError::Incompatible(format!("material `{m}` is not in the registry")));
            }
        }
        FinetuneTask::Temporal => {
            if let Some(r) = records.iter().find(|r| r.targets.snapshots.is_none()) {
                return Err(TrainError::Incompatible(format!("temporal record with seed {} has no snapshots", r.provenance.seed)));
            }
        }
        FinetuneTask::TimeToFailure => {
            if records.iter().all(|r| r.targets.censored || r.targets.failure_time.is_none()) {
                return Err(TrainError::Incompatible("every record is censored; no failure times to learn".into()));
            }
        }
        FinetuneTask::Unstructured => {
            if let Some(r) = records.iter().find(|r| r.grid.is_some()) {
                return Err(TrainError::Incompatible(format!(
                    "unstructured task got a structured-grid record (seed {})",
                    r.provenance.seed
                )));
            }
        }
    }
    Ok(())
}

/// Fine-tunes `model` on `records` for `task`. `base` supplies the optimiser
/// settings; the task fixes the mask, head and default step count. When
/// `held_out` is `None` a 10% validation split is taken from `records` (unless
/// there are too few records to split).
pub fn finetune_tasks(
    model: &mut Model,
    task: FinetuneTask,
    records: &[SampleRecord],
    held_out: Option<&[SampleRecord]>,
    base: &StageSpec,
    ctx: &mut ContextCache,
    opts: &RunOptions,
) -> Result<FinetuneOutcome, TrainError> {
    check_records(task, records, ctx.registry())?;
    let mut spec = base.clone();
    let (stage_task, mask) = match task {
        FinetuneTask::NewMaterial => (Task::Field, Mask::DecoderOnly),
        FinetuneTask::Temporal => (Task::Temporal, base.mask),
        FinetuneTask::TimeToFailure => (Task::TimeToFailure, base.mask),
        FinetuneTask::Unstructured => (Task::Field, Mask::All),
    };
    spec.task = stage_task;
    spec.mask = mask;
    if task == FinetuneTask::NewMaterial && spec.steps == 0 {
        spec.steps = NEW_MATERIAL_STEPS;
    }
    let (train, val): (Vec<SampleRecord>, Vec<SampleRecord>) = match held_out {
        Some(v) => (records.to_vec(), v.to_vec()),
        None if records.len() >= 10 => train_val_split(records.to_vec(), spec.seed)?,
        None => (records.to_vec(), Vec::new()),
    };
    let scaler = if stage_task == Task::TimeToFailure { Some(TtfScaler::fit(&train)?) } else { None };
    let tr = examples_for(&train, stage_task, ctx, scaler.as_ref())?;
    let va = examples_for(&val, stage_task, ctx, scaler.as_ref())?;
    let report = run_stages(
        model,
        vec![ResolvedStage {
            spec,
            feed: Feed::Pool(tr),
            val: va,
        }],
        ctx,
        opts,
    )?;
    Ok(FinetuneOutcome { report, scaler })
}
