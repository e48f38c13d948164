//! `embed`, `pretrain`, `finetune`, `predict` and `evaluate`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use fracture_core::dataset::SampleRecord;
use fracture_core::deck::{progression_points, render_deck_with, DeckMeta, Loading};
use fracture_core::rulebased::Occupancy;
use fracture_core::MaterialRegistry;
use fracture_learn::embed::{Embedder, EmbeddingCache, Provider, DEFAULT_CONTEXT_DIM};
use fracture_learn::model::{Model, ModelConfig};
use fracture_learn::train::{
    examples_for, finetune_tasks, l1_metric, mae, predict as model_predict, r2_metric, run_curriculum, write_loss_csv, ContextCache,
    CurriculumPlan, CurriculumReport, Example, ExampleTarget, FinetuneTask, LossRow, RunOptions, StageSpec, Task, TtfScaler,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::invalid;
use crate::generate::registry_with;
use crate::output::{create_out, load_manifest, par_indexed, read_records, write_json, write_stamp, RunContext};

/// Where deck embeddings come from. Without an explicit provider the sidecar
/// named by `FRACTURE_EMBED_URL` is used when set, otherwise the offline fallback.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbeddingSpec {
    #[serde(default)]
    provider: Option<Provider>,
    /// Hidden layer requested from the sidecar.
    #[serde(default)]
    layer: i64,
    #[serde(default)]
    cache_dir: Option<PathBuf>,
}

impl EmbeddingSpec {
    fn embedder(&self, dim: usize) -> Embedder {
        let provider = self.provider.clone().unwrap_or_else(|| Provider::from_env(dim, self.layer));
        log::info!("embedding provider {}", provider.id());
        let e = Embedder {
            provider,
            cache: None,
            expected_dim: dim,
        };
        match &self.cache_dir {
            Some(d) => e.with_cache(d),
            None => e,
        }
    }

    fn context(&self, dim: usize, registry: MaterialRegistry) -> ContextCache {
        ContextCache::with_registry(self.embedder(dim), registry)
    }
}

fn default_dim() -> usize {
    DEFAULT_CONTEXT_DIM
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbedManifest {
    #[serde(default)]
    texts: Vec<String>,
    /// Deck descriptions rendered to text before embedding.
    #[serde(default)]
    decks: Vec<DeckMeta>,
    #[serde(default = "default_dim")]
    dim: usize,
    #[serde(default)]
    embedding: EmbeddingSpec,
    #[serde(default)]
    materials_file: Option<PathBuf>,
}

#[derive(Serialize)]
struct EmbedRow {
    text: String,
    text_hash: String,
    provider: String,
    tokens: usize,
    dim: usize,
}

pub fn embed(manifest: &Path, out: &Path) -> anyhow::Result<()> {
    let m = load_manifest::<EmbedManifest>(manifest)?;
    let cfg = &m.value;
    let reg = registry_with(cfg.materials_file.as_deref())?;
    let mut texts = cfg.texts.clone();
    for d in &cfg.decks {
        texts.push(render_deck_with(d, &reg).map_err(|e| invalid(e.to_string()))?);
    }
    if texts.is_empty() {
        return Err(invalid("manifest lists no texts or decks to embed"));
    }
    create_out(out)?;
    let embedder = cfg.embedding.embedder(cfg.dim);
    let store = EmbeddingCache::new(out.join("embeddings"));
    let mut rows = Vec::with_capacity(texts.len());
    for t in &texts {
        let e = embedder.embed(t).with_context(|| format!("embedding `{t}`"))?;
        store.put(&e.provider, t, &e)?;
        println!("{}  {}x{}  {}", &e.text_hash[..12], e.tokens, e.dim, t);
        rows.push(EmbedRow {
            text: t.clone(),
            text_hash: e.text_hash.clone(),
            provider: e.provider.clone(),
            tokens: e.tokens,
            dim: e.dim,
        });
    }
    write_json(&out.join("embeddings.json"), &rows)?;
    write_stamp(out, "embed", &m.sha256, None)
}

#[derive(Serialize)]
struct StageSummary<'a> {
    name: &'a str,
    steps: usize,
    skipped: bool,
    trainable_fraction: f64,
    final_val_l1: Option<f64>,
    checkpoints: &'a [PathBuf],
}

fn write_training_outputs(out: &Path, model: &Model, report: &CurriculumReport) -> anyhow::Result<()> {
    model.save(&out.join("model.ckpt"))?;
    let rows: Vec<LossRow> = report.rows();
    let file = std::fs::File::create(out.join("loss.csv")).context("writing loss.csv")?;
    write_loss_csv(&rows, std::io::BufWriter::new(file))?;
    let stages: Vec<StageSummary> = report
        .stages
        .iter()
        .map(|s| StageSummary {
            name: &s.name,
            steps: s.steps,
            skipped: s.skipped,
            trainable_fraction: s.trainable_fraction,
            final_val_l1: s.final_val_l1,
            checkpoints: &s.checkpoints,
        })
        .collect();
    write_json(&out.join("report.json"), &serde_json::json!({ "total_steps": report.total_steps, "stages": stages }))?;
    for s in &report.stages {
        match (s.skipped, s.final_val_l1) {
            (true, _) => println!("stage {}: skipped", s.name),
            (false, Some(v)) => println!("stage {}: {} steps, validation L1 {v:.5}", s.name, s.steps),
            (false, None) => println!("stage {}: {} steps", s.name, s.steps),
        }
    }
    Ok(())
}

fn run_options(ctx: &RunContext, out: &Path) -> RunOptions {
    RunOptions {
        workers: ctx.workers,
        checkpoint_dir: Some(out.join("checkpoints")),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PretrainManifest {
    #[serde(default)]
    model: ModelConfig,
    /// Seeds parameter initialization.
    seed: u64,
    plan: CurriculumPlan,
    /// Start from this checkpoint instead of a fresh initialization.
    #[serde(default)]
    init_checkpoint: Option<PathBuf>,
    #[serde(default)]
    embedding: EmbeddingSpec,
    #[serde(default)]
    materials_file: Option<PathBuf>,
}

fn load_model(path: &Path, expected: Option<&ModelConfig>) -> anyhow::Result<Model> {
    match expected {
        None => Model::load(path).with_context(|| format!("loading checkpoint {}", path.display())),
        Some(cfg) => {
            let mut m = Model::new(cfg.clone(), &mut ChaCha8Rng::seed_from_u64(0))?;
            let ck = Model::load(path).with_context(|| format!("loading checkpoint {}", path.display()))?;
            m.load_params(ck.params).with_context(|| format!("checkpoint {} does not fit the manifest model", path.display()))?;
            Ok(m)
        }
    }
}

pub fn pretrain(manifest: &Path, out: &Path, ctx: &RunContext) -> anyhow::Result<()> {
    let m = load_manifest::<PretrainManifest>(manifest)?;
    let cfg = &m.value;
    let reg = registry_with(cfg.materials_file.as_deref())?;
    let mut model = match &cfg.init_checkpoint {
        Some(p) => load_model(p, Some(&cfg.model))?,
        None => Model::new(cfg.model.clone(), &mut ChaCha8Rng::seed_from_u64(cfg.seed))?,
    };
    create_out(out)?;
    let mut cc = cfg.embedding.context(model.config.context_dim, reg);
    let report = run_curriculum(&cfg.plan, &mut model, &mut cc, &run_options(ctx, out))?;
    write_training_outputs(out, &model, &report)?;
    write_stamp(out, "pretrain", &m.sha256, Some(cfg.seed))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FinetuneManifest {
    checkpoint: PathBuf,
    task: FinetuneTask,
    data: Vec<PathBuf>,
    #[serde(default)]
    held_out: Option<Vec<PathBuf>>,
    stage: StageSpec,
    #[serde(default)]
    embedding: EmbeddingSpec,
    #[serde(default)]
    materials_file: Option<PathBuf>,
}

pub fn finetune(manifest: &Path, out: &Path, ctx: &RunContext) -> anyhow::Result<()> {
    let m = load_manifest::<FinetuneManifest>(manifest)?;
    let cfg = &m.value;
    let reg = registry_with(cfg.materials_file.as_deref())?;
    let mut model = load_model(&cfg.checkpoint, None)?;
    let records = read_records(&cfg.data)?;
    let held = cfg.held_out.as_deref().map(read_records).transpose()?;
    create_out(out)?;
    let mut cc = cfg.embedding.context(model.config.context_dim, reg);
    let outcome = finetune_tasks(&mut model, cfg.task, &records, held.as_deref(), &cfg.stage, &mut cc, &run_options(ctx, out))?;
    write_training_outputs(out, &model, &outcome.report)?;
    if let Some(s) = &outcome.scaler {
        write_json(&out.join("scaler.json"), s)?;
    }
    write_stamp(out, "finetune", &m.sha256, Some(cfg.stage.seed))
}

/// One model input: source record, progression point (temporal task only) and example.
type Input = (usize, Option<f64>, Example);

/// Model inputs for every record. Time-to-failure inputs are built for every
/// record, censored or not; their targets are ignored.
fn inputs(records: &[SampleRecord], task: Task, cc: &mut ContextCache) -> anyhow::Result<Vec<Input>> {
    let mut out = Vec::new();
    for (i, r) in records.iter().enumerate() {
        match task {
            Task::TimeToFailure => {
                let mut probe = r.clone();
                probe.targets.failure_time = Some(r.targets.failure_time.unwrap_or(0.0));
                probe.targets.censored = false;
                let unit = TtfScaler {
                    stats: [(r.provenance.material.to_lowercase(), (0.0, 1.0))].into_iter().collect(),
                };
                out.extend(examples_for(&[probe], task, cc, Some(&unit))?.into_iter().map(|e| (i, None, e)));
            }
            Task::Temporal => {
                let points = progression_points();
                let ex = examples_for(std::slice::from_ref(r), task, cc, None)?;
                out.extend(ex.into_iter().enumerate().map(|(k, e)| (i, Some(points[k]), e)));
            }
            Task::Field => out.extend(examples_for(std::slice::from_ref(r), task, cc, None)?.into_iter().map(|e| (i, None, e))),
        }
    }
    Ok(out)
}

fn read_scaler(path: Option<&Path>, task: Task) -> anyhow::Result<Option<TtfScaler>> {
    match (task, path) {
        (Task::TimeToFailure, Some(p)) => {
            let text = std::fs::read_to_string(p).map_err(|e| invalid(format!("scaler {}: {e}", p.display())))?;
            Ok(Some(serde_json::from_str(&text).map_err(|e| invalid(format!("scaler {}: {e}", p.display())))?))
        }
        (Task::TimeToFailure, None) => Err(invalid("time-to-failure predictions need the `scaler` written by finetune")),
        _ => Ok(None),
    }
}

/// Model outputs in target units.
fn run_model(model: &Model, examples: &[Input], scaler: Option<&TtfScaler>, workers: usize) -> anyhow::Result<Vec<Vec<f64>>> {
    let raw = par_indexed(examples.len(), workers, |k| model_predict(model, &examples[k].2));
    raw.into_iter()
        .zip(examples)
        .map(|(p, (_, _, ex))| {
            let p = p?;
            Ok(match scaler {
                Some(s) => vec![s.inverse(&ex.material, p[0])?],
                None => p,
            })
        })
        .collect()
}

fn default_task() -> Task {
    Task::Field
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictManifest {
    checkpoint: PathBuf,
    data: Vec<PathBuf>,
    #[serde(default = "default_task")]
    task: Task,
    /// When given, the checkpoint must match this configuration exactly.
    #[serde(default)]
    model: Option<ModelConfig>,
    #[serde(default)]
    scaler: Option<PathBuf>,
    #[serde(default)]
    embedding: EmbeddingSpec,
    #[serde(default)]
    materials_file: Option<PathBuf>,
}

#[derive(Serialize)]
struct Prediction {
    record: usize,
    seed: u64,
    material: String,
    loading: Loading,
    #[serde(skip_serializing_if = "Option::is_none")]
    progression: Option<f64>,
    values: Vec<f64>,
}

pub fn predict(manifest: &Path, out: &Path, ctx: &RunContext) -> anyhow::Result<()> {
    let m = load_manifest::<PredictManifest>(manifest)?;
    let cfg = &m.value;
    let reg = registry_with(cfg.materials_file.as_deref())?;
    let model = load_model(&cfg.checkpoint, cfg.model.as_ref())?;
    let scaler = read_scaler(cfg.scaler.as_deref(), cfg.task)?;
    let records = read_records(&cfg.data)?;
    let mut cc = cfg.embedding.context(model.config.context_dim, reg);
    let examples = inputs(&records, cfg.task, &mut cc)?;
    create_out(out)?;
    let values = run_model(&model, &examples, scaler.as_ref(), ctx.worker_count())?;
    let field_dir = out.join("fields");
    let mut preds = Vec::with_capacity(values.len());
    for (k, ((i, progression, ex), v)) in examples.iter().zip(values).enumerate() {
        let r = &records[*i];
        if let (Some((nx, ny)), ExampleTarget::Field(_)) = (r.grid, &ex.target) {
            create_out(&field_dir)?;
            let occ = Occupancy::from_threshold(nx as usize, ny as usize, &v, 0.5);
            std::fs::write(field_dir.join(format!("{k:05}.pgm")), occ.to_pgm())?;
        }
        preds.push(Prediction {
            record: *i,
            seed: r.provenance.seed,
            material: r.provenance.material.clone(),
            loading: r.provenance.loading,
            progression: *progression,
            values: v,
        });
    }
    write_json(&out.join("predictions.json"), &preds)?;
    println!("{} predictions for {} records", preds.len(), records.len());
    write_stamp(out, "predict", &m.sha256, None)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
enum Predictor {
    Checkpoint(PathBuf),
    /// The same value at every target element.
    Constant(f64),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EvaluateManifest {
    predictor: Predictor,
    data: Vec<PathBuf>,
    #[serde(default = "default_task")]
    task: Task,
    #[serde(default)]
    scaler: Option<PathBuf>,
    #[serde(default)]
    embedding: EmbeddingSpec,
    #[serde(default)]
    materials_file: Option<PathBuf>,
    /// Context width for the constant predictor's inputs; ignored with a checkpoint.
    #[serde(default = "default_dim")]
    context_dim: usize,
}

/// One row of the metric table.
#[derive(Clone, Debug, Serialize)]
pub struct MetricRow {
    pub material: String,
    pub loading: String,
    pub samples: usize,
    /// Mean over samples of the per-sample L1 error.
    pub l1: f64,
    /// Mean absolute error over all pooled elements.
    pub mae: f64,
    /// Pooled R²; absent when the pooled targets are constant.
    pub r2: Option<f64>,
}

fn metric_row(material: &str, loading: &str, pairs: &[(Vec<f64>, Vec<f64>)]) -> anyhow::Result<MetricRow> {
    let mut l1 = 0.0;
    let (mut ys, mut ps) = (Vec::new(), Vec::new());
    for (y, p) in pairs {
        l1 += l1_metric(y, p)?;
        ys.extend_from_slice(y);
        ps.extend_from_slice(p);
    }
    Ok(MetricRow {
        material: material.to_string(),
        loading: loading.to_string(),
        samples: pairs.len(),
        l1: l1 / pairs.len() as f64,
        mae: mae(&ys, &ps)?,
        r2: r2_metric(&ys, &ps).ok(),
    })
}

fn target_of(r: &SampleRecord, ex: &Example, task: Task) -> Option<Vec<f64>> {
    match (task, &ex.target) {
        (Task::TimeToFailure, _) => match (r.targets.failure_time, r.targets.censored) {
            (Some(t), false) => Some(vec![t as f64]),
            _ => None,
        },
        (_, ExampleTarget::Field(t)) => Some(t.clone()),
        (_, ExampleTarget::Scalar(v)) => Some(vec![*v]),
    }
}

pub fn evaluate(manifest: &Path, out: &Path, ctx: &RunContext) -> anyhow::Result<()> {
    let m = load_manifest::<EvaluateManifest>(manifest)?;
    let cfg = &m.value;
    let reg = registry_with(cfg.materials_file.as_deref())?;
    let records = read_records(&cfg.data)?;
    if records.is_empty() {
        return Err(invalid("no records to evaluate"));
    }
    let model = match &cfg.predictor {
        Predictor::Checkpoint(p) => Some(load_model(p, None)?),
        Predictor::Constant(_) => None,
    };
    let dim = model.as_ref().map_or(cfg.context_dim, |m| m.config.context_dim);
    let mut cc = cfg.embedding.context(dim, reg);
    let examples = inputs(&records, cfg.task, &mut cc)?;
    let preds = match (&model, &cfg.predictor) {
        (Some(model), _) => run_model(model, &examples, read_scaler(cfg.scaler.as_deref(), cfg.task)?.as_ref(), ctx.worker_count())?,
        (None, Predictor::Constant(c)) => examples
            .iter()
            .map(|(i, _, ex)| vec![*c; target_of(&records[*i], ex, cfg.task).map_or(1, |t| t.len())])
            .collect(),
        (None, Predictor::Checkpoint(_)) => unreachable!(),
    };
    let mut groups: BTreeMap<(String, String), Vec<(Vec<f64>, Vec<f64>)>> = BTreeMap::new();
    let mut all = Vec::new();
    for ((i, _, ex), p) in examples.iter().zip(preds) {
        let r = &records[*i];
        let Some(y) = target_of(r, ex, cfg.task) else { continue };
        let loading = serde_json::to_value(r.provenance.loading)?.as_str().unwrap_or_default().to_string();
        groups.entry((r.provenance.material.to_lowercase(), loading)).or_default().push((y.clone(), p.clone()));
        all.push((y, p));
    }
    if all.is_empty() {
        return Err(invalid("no record has a target for this task (all censored?)"));
    }
    let mut rows = Vec::new();
    for ((mat, load), pairs) in &groups {
        rows.push(metric_row(mat, load, pairs)?);
    }
    rows.push(metric_row("all", "all", &all)?);
    create_out(out)?;
    write_json(&out.join("report.json"), &rows)?;
    let mut csv = String::from("material,loading,samples,l1,mae,r2\n");
    println!("{:<18} {:<8} {:>7} {:>10} {:>10} {:>8}", "material", "loading", "samples", "L1", "MAE", "R2");
    for r in &rows {
        let r2 = r.r2.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
        println!("{:<18} {:<8} {:>7} {:>10.5} {:>10.5} {:>8}", r.material, r.loading, r.samples, r.l1, r.mae, r2);
        csv.push_str(&format!("{},{},{},{:e},{:e},{}\n", r.material, r.loading, r.samples, r.l1, r.mae, r.r2.map(|v| format!("{v:e}")).unwrap_or_default()));
    }
    std::fs::write(out.join("report.csv"), csv)?;
    write_stamp(out, "evaluate", &m.sha256, None)
}
