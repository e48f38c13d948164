//! Metrics, optimiser, stages, curriculum and fine-tuning tasks.

mod curriculum;
mod data;
mod metrics;
mod optim;
mod stage;
mod tasks;

pub use curriculum::{
    ab_harness, examples_for, resolve_source, run_curriculum, run_stages, train_val_split, AbConfig, AbReport, AbRow, CurriculumPlan,
    CurriculumReport, PlannedStage, ResolvedStage, SourceSpec, StepMatching, VALIDATION_FRACTION,
};
pub use data::{field_example, temporal_examples, ttf_example, ContextCache, Example, ExampleTarget, Task, TtfScaler};
pub use metrics::{l1_metric, mae, mse, r2_metric};
pub use optim::{adam_step, clip_global_norm, global_norm, lr_schedule, AdamW, OptimizerState, StepInfo};
pub use stage::{evaluate_l1, predict, train_stage, write_loss_csv, Feed, LossRow, RunOptions, StageReport, StageSpec};
pub use tasks::{finetune_tasks, FinetuneOutcome, FinetuneTask, NEW_MATERIAL_STEPS};

use thiserror::Error;

use crate::autodiff::AutodiffError;
use crate::embed::EmbedError;
use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("metric: {0}")]
    Metric(String),
    #[error("non-finite {0}")]
    NonFinite(String),
    #[error("data: {0}")]
    Data(String),
    #[error("incompatible data for this stage: {0}")]
    Incompatible(String),
    #[error("plan: {0}")]
    Plan(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}
