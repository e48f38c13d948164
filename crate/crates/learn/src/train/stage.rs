//! One curriculum stage: accumulation-aware MSE optimisation of a model.

use std::io::Write;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::{field_example, ContextCache, Example, ExampleTarget, Task};
use super::metrics::l1_metric;
use super::optim::{adam_step, lr_schedule, AdamW, OptimizerState};
use super::TrainError;
use crate::autodiff::{Graph, Tensor};
use crate::model::{param_groups, Forward, Mask, Model};
use fracture_core::rulebased::RuleStream;

fn default_task() -> Task {
    Task::Field
}
fn default_mask() -> Mask {
    Mask::All
}
fn four() -> usize {
    4
}
fn default_warmup() -> usize {
    500
}
fn default_lr() -> f64 {
    1e-4
}

/// Hyper-parameters of one stage. Data comes separately as a [`Feed`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    pub name: String,
    #[serde(default = "default_task")]
    pub task: Task,
    pub steps: usize,
    #[serde(default = "default_mask")]
    pub mask: Mask,
    #[serde(default = "four")]
    pub batch_size: usize,
    /// Batches averaged into one optimizer step.
    #[serde(default = "four")]
    pub accumulation: usize,
    #[serde(default = "default_warmup")]
    pub warmup: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default)]
    pub optimizer: AdamW,
    /// Validation cadence in optimizer steps; `0` evaluates only at the end.
    #[serde(default)]
    pub eval_every: usize,
    /// Checkpoint cadence in optimizer steps; `0` disables checkpoints.
    #[serde(default)]
    pub checkpoint_every: usize,
    /// Seeds the order examples are drawn in.
    #[serde(default)]
    pub seed: u64,
}

impl StageSpec {
    pub fn new(name: &str, task: Task, steps: usize) -> Self {
        Self {
            name: name.to_string(),
            task,
            steps,
            mask: Mask::All,
            batch_size: 4,
            accumulation: 4,
            warmup: 500,
            lr: 1e-4,
            optimizer: AdamW::default(),
            eval_every: 0,
            checkpoint_every: 0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.batch_size == 0 || self.accumulation == 0 {
            return Err(TrainError::Plan(format!("stage `{}`: batch_size and accumulation must be at least 1", self.name)));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(TrainError::Plan(format!("stage `{}`: bad learning rate {}", self.name, self.lr)));
        }
        Ok(())
    }
}

/// Where a stage draws training examples from.
pub enum Feed {
    /// Surrogate records generated on the fly, consumed in order.
    Stream { stream: RuleStream, next: u64 },
    /// A fixed pool sampled uniformly with replacement.
    Pool(Vec<Example>),
}

impl Feed {
    pub fn stream(stream: RuleStream) -> Self {
        Feed::Stream { stream, next: 0 }
    }

    fn is_empty(&self) -> bool {
        matches!(self, Feed::Pool(p) if p.is_empty())
    }

    fn draw(&mut self, n: usize, rng: &mut ChaCha8Rng, ctx: &mut ContextCache, task: Task) -> Result<Vec<Example>, TrainError> {
        match self {
            Feed::Stream { stream, next } => {
                if task != Task::Field {
                    return Err(TrainError::Incompatible(format!("a surrogate stream only provides final-field targets, not {task:?}")));
                }
                let mut out = Vec::with_capacity(n);
                for _ in 0..n {
                    let (r, _) = stream.record_at(*next);
                    *next += 1;
                    out.push(field_example(&r, ctx)?);
                }
                Ok(out)
            }
            Feed::Pool(pool) => Ok((0..n).map(|_| pool[rng.random_range(0..pool.len())].clone()).collect()),
        }
    }
}

/// Parallelism and output locations; results do not depend on these.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads for per-example gradients; `0` uses all cores.
    pub workers: usize,
    pub checkpoint_dir: Option<PathBuf>,
}

impl RunOptions {
    fn worker_count(&self) -> usize {
        if self.workers > 0 {
            self.workers
        } else {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub step: usize,
    pub stage: String,
    pub lr: f64,
    pub train_mse: f64,
    pub val_l1: Option<f64>,
}

pub fn write_loss_csv<W: Write>(rows: &[LossRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "step,stage,lr,train_mse,val_l1")?;
    for r in rows {
        let v = r.val_l1.map(|v| format!("{v:e}")).unwrap_or_default();
        writeln!(w, "{},{},{:e},{:e},{}", r.step, r.stage, r.lr, r.train_mse, v)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub name: String,
    pub steps: usize,
    pub skipped: bool,
    pub trainable_fraction: f64,
    pub final_val_l1: Option<f64>,
    pub rows: Vec<LossRow>,
    pub checkpoints: Vec<PathBuf>,
}

/// Maps `f` over `items` on up to `workers` threads, keeping input order.
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    std::thread::scope(|s| {
        let handles: Vec<_> = items.chunks(chunk).map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<R>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

fn check_task(ex: &Example, task: Task) -> Result<(), TrainError> {
    match (&ex.target, task) {
        (ExampleTarget::Field(t), Task::Field | Task::Temporal) if t.len() == ex.queries.len() && !t.is_empty() => Ok(()),
        (ExampleTarget::Scalar(_), Task::TimeToFailure) => Ok(()),
        (ExampleTarget::Field(_), Task::TimeToFailure) => {
            Err(TrainError::Incompatible("time-to-failure stage got a field-target example".into()))
        }
        (ExampleTarget::Scalar(_), t) => Err(TrainError::Incompatible(format!("{t:?} stage got a scalar-target example"))),
        (ExampleTarget::Field(t), _) => Err(TrainError::Incompatible(format!(
            "field target has {} values for {} queries",
            t.len(),
            ex.queries.len()
        ))),
    }
}

/// Loss and per-parameter gradient of one example.
fn example_grad(model: &Model, trainable: &[bool], ex: &Example) -> Result<(f64, Vec<Tensor>), TrainError> {
    let mut g = Graph::new();
    let mut f = Forward::new(model, trainable);
    let z = f.encode(&mut g, &ex.tokens)?;
    let z = f.fuse_context(&mut g, z, &ex.context, ex.progression.as_deref())?;
    let (y, t) = match &ex.target {
        ExampleTarget::Field(t) => (f.decode_field(&mut g, z, &ex.queries)?, Tensor::new(vec![t.len(), 1], t.clone())?),
        ExampleTarget::Scalar(v) => (f.decode_scalar(&mut g, z)?, Tensor::new(vec![1, 1], vec![*v])?),
    };
    let t = g.constant(t);
    let loss = g.mse(y, t)?;
    let grads = g.backward(loss)?;
    let mut out = model.params.zeros_like();
    grads.accumulate_params(&mut out, 1.0);
    Ok((g.value(loss).item(), out))
}

/// Model output for one example: the field, or a one-element vector.
pub fn predict(model: &Model, ex: &Example) -> Result<Vec<f64>, TrainError> {
    Ok(match ex.target {
        ExampleTarget::Field(_) => model.predict_field(&ex.tokens, &ex.context, ex.progression.as_deref(), &ex.queries)?,
        ExampleTarget::Scalar(_) => vec![model.predict_scalar(&ex.tokens, &ex.context, ex.progression.as_deref())?],
    })
}

fn target_vec(ex: &Example) -> Vec<f64> {
    match &ex.target {
        ExampleTarget::Field(t) => t.clone(),
        ExampleTarget::Scalar(v) => vec![*v],
    }
}

/// Mean over examples of the per-example L1 error.
pub fn evaluate_l1(model: &Model, examples: &[Example], workers: usize) -> Result<f64, TrainError> {
    if examples.is_empty() {
        return Err(TrainError::Data("no validation examples".into()));
    }
    let errs = par_map(examples, workers, |ex| predict(model, ex).and_then(|p| l1_metric(&target_vec(ex), &p)));
    let mut sum = 0.0;
    for e in errs {
        sum += e?;
    }
    Ok(sum / examples.len() as f64)
}

/// Runs `spec.steps` optimizer steps. Parameters outside the stage's mask are
/// never written. Row step numbers start after `step_offset`.
pub fn train_stage(
    model: &mut Model,
    spec: &StageSpec,
    feed: &mut Feed,
    val: &[Example],
    ctx: &mut ContextCache,
    opts: &RunOptions,
    step_offset: usize,
) -> Result<StageReport, TrainError> {
    spec.validate()?;
    let groups = param_groups(&model.params, spec.mask);
    let mut report = StageReport {
        name: spec.name.clone(),
        steps: 0,
        skipped: false,
        trainable_fraction: groups.fraction,
        final_val_l1: None,
        rows: Vec::new(),
        checkpoints: Vec::new(),
    };
    if spec.steps == 0 || feed.is_empty() {
        log::info!("stage `{}` skipped: no steps or no data", spec.name);
        report.skipped = true;
        return Ok(report);
    }
    if let Feed::Pool(p) = feed {
        for ex in p.iter() {
            check_task(ex, spec.task)?;
        }
    }
    for ex in val {
        check_task(ex, spec.task)?;
    }
    let workers = opts.worker_count();
    let trainable = groups.trainable;
    let names = model.params.names().to_vec();
    let mut state = OptimizerState::new(model.params.tensors());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let window = spec.batch_size * spec.accumulation;
    for s in 1..=spec.steps {
        let batch = feed.draw(window, &mut rng, ctx, spec.task)?;
        for ex in &batch {
            check_task(ex, spec.task)?;
        }
        let m: &Model = model;
        let results = par_map(&batch, workers, |ex| example_grad(m, &trainable, ex));
        let mut grads = model.params.zeros_like();
        let mut loss = 0.0;
        for r in results {
            let (l, g) = r?;
            loss += l;
            for (acc, gi) in grads.iter_mut().zip(&g) {
                for (a, b) in acc.data.iter_mut().zip(&gi.data) {
                    *a += b;
                }
            }
        }
        let inv = 1.0 / window as f64;
        grads.iter_mut().for_each(|g| g.data.iter_mut().for_each(|v| *v *= inv));
        let lr = lr_schedule(s, spec.warmup, spec.lr);
        adam_step(&spec.optimizer, model.params.tensors_mut(), &names, &mut grads, &trainable, &mut state, lr)?;

        let last = s == spec.steps;
        let val_l1 = if !val.is_empty() && (last || (spec.eval_every > 0 && s % spec.eval_every == 0)) {
            Some(evaluate_l1(model, val, workers)?)
        } else {
            None
        };
        if val_l1.is_some() {
            report.final_val_l1 = val_l1;
        }
        report.rows.push(LossRow {
            step: step_offset + s,
            stage: spec.name.clone(),
            lr,
            train_mse: loss * inv,
            val_l1,
        });
        if let Some(dir) = &opts.checkpoint_dir {
            if spec.checkpoint_every > 0 && (s % spec.checkpoint_every == 0 || last) {
                std::fs::create_dir_all(dir).map_err(|e| TrainError::Io(e.to_string()))?;
                let path = dir.join(format!("{}-{:06}.ckpt", spec.name, step_offset + s));
                model.save(&path)?;
                report.checkpoints.push(path);
            }
        }
        report.steps = s;
    }
    Ok(report)
}
