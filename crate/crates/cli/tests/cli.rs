use std::path::{Path, PathBuf};
use std::process::Output;

use fracture_core::dataset::read_shard;
use serde_json::{json, Value};

fn fracture(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_fracture"))
        .args(args)
        .env_remove("FRACTURE_EMBED_URL")
        .env_remove("RUST_LOG")
        .output()
        .expect("spawn fracture")
}

/// Writes `manifest` into `dir` and runs `command` with output to `dir/out`.
fn run(dir: &Path, command: &str, name: &str, manifest: &Value) -> (Output, PathBuf) {
    let m = dir.join(format!("{name}.json"));
    std::fs::write(&m, serde_json::to_vec_pretty(manifest).unwrap()).unwrap();
    let out = dir.join(name);
    let o = fracture(&[command, "--workers", "1", "--manifest", m.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    (o, out)
}

fn ok(o: &Output) {
    assert!(o.status.success(), "exit {:?}\nstdout:\n{}\nstderr:\n{}", o.status.code(), String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr));
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn bytes(p: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

fn tiny_model() -> Value {
    json!({ "d_enc": 16, "d_dec": 16, "n_latents": 8, "n_self_layers": 1, "pos_bands": 4, "max_freq": 8.0, "context_dim": 8 })
}

#[test]
fn gen_rulebased_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let m = json!({ "seed": 3, "count": 1000 });
    let (a, out_a) = run(dir.path(), "gen-rulebased", "a", &m);
    let (b, out_b) = run(dir.path(), "gen-rulebased", "b", &m);
    ok(&a);
    ok(&b);
    let shard = bytes(out_a.join("rulebased-00000.shard"));
    assert_eq!(shard, bytes(out_b.join("rulebased-00000.shard")));
    assert_eq!(read_shard(out_a.join("rulebased-00000.shard")).unwrap().len(), 1000);
    assert_eq!(bytes(out_a.join("stamp.json")), bytes(out_b.join("stamp.json")));
    let stdout = String::from_utf8_lossy(&a.stdout);
    for mode in ["T-horizontal", "T-vertical", "X-horizontal", "X-vertical"] {
        assert!(stdout.contains(mode), "{stdout}");
    }
}

#[test]
fn stamp_records_manifest_hash_and_seed() {
    use sha2::Digest;
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run(dir.path(), "gen-rulebased", "r", &json!({ "seed": 11, "count": 5 }));
    ok(&o);
    let stamp: Value = serde_json::from_slice(&bytes(out.join("stamp.json"))).unwrap();
    let hash: String = sha2::Sha256::digest(bytes(dir.path().join("r.json"))).iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(stamp["manifest_sha256"], json!(hash));
    assert_eq!(stamp["seed"], json!(11));
    assert_eq!(stamp["command"], json!("gen-rulebased"));
    assert_eq!(stamp["version"], json!(env!("CARGO_PKG_VERSION")));
}

#[test]
fn gen_rulebased_rejects_bad_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let (o, _) = run(dir.path(), "gen-rulebased", "mode", &json!({ "seed": 1, "count": 3, "modes": ["T-diagonal"] }));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("T-diagonal"), "{}", stderr(&o));

    let (o, _) = run(dir.path(), "gen-rulebased", "key", &json!({ "seed": 1, "count": 3, "colour": "red" }));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));

    let o = fracture(&["gen-rulebased", "--manifest", dir.path().join("missing.json").to_str().unwrap(), "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gen_rulebased_count_zero_writes_empty_shard() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run(dir.path(), "gen-rulebased", "empty", &json!({ "seed": 3, "count": 0 }));
    ok(&o);
    assert!(read_shard(out.join("rulebased-00000.shard")).unwrap().is_empty());
}

#[test]
fn gen_rulebased_restricts_modes() {
    let dir = tempfile::tempdir().unwrap();
    let (o, _) = run(dir.path(), "gen-rulebased", "t", &json!({ "seed": 2, "count": 40, "modes": ["T-horizontal"] }));
    ok(&o);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("T-horizontal: 40"), "{stdout}");
    assert!(!stdout.contains("X-vertical"), "{stdout}");
}

#[test]
fn gen_phasefield_runs_and_repeats() {
    let dir = tempfile::tempdir().unwrap();
    let m = json!({ "seed": 5, "count": 4, "grid": 32, "material": "pbx" });
    let (a, out_a) = run(dir.path(), "gen-phasefield", "a", &m);
    ok(&a);
    let records = read_shard(out_a.join("phasefield-00000.shard")).unwrap();
    assert_eq!(records.len(), 4);
    for r in &records {
        assert_eq!(r.grid, Some((32, 32)));
        assert_eq!(r.targets.final_field.len(), 32 * 32);
        assert!(r.targets.censored || r.targets.failure_time.is_some());
        if !r.targets.censored {
            assert_eq!(r.targets.snapshots.as_ref().map(|s| s.fields.len()), Some(10));
        }
    }
    for k in 0..4 {
        let csv = String::from_utf8(bytes(out_a.join(format!("energy/run-{k:05}.csv")))).unwrap();
        assert!(csv.lines().count() > 1);
    }

    let (b, out_b) = run(dir.path(), "gen-phasefield", "b", &m);
    ok(&b);
    assert_eq!(bytes(out_a.join("phasefield-00000.shard")), bytes(out_b.join("phasefield-00000.shard")));
}

#[test]
fn gen_phasefield_unknown_material_names_registry() {
    let dir = tempfile::tempdir().unwrap();
    let (o, _) = run(dir.path(), "gen-phasefield", "m", &json!({ "seed": 1, "count": 1, "material": "unobtainium" }));
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("unobtainium") && e.contains("registry"), "{e}");
}

#[test]
fn evaluate_constant_predictor_matches_hand_l1() {
    let dir = tempfile::tempdir().unwrap();
    let (o, data) = run(dir.path(), "gen-rulebased", "data", &json!({ "seed": 8, "count": 20 }));
    ok(&o);
    let shard = data.join("rulebased-00000.shard");
    let c = 0.25;
    let (o, out) = run(
        dir.path(),
        "evaluate",
        "eval",
        &json!({ "predictor": { "constant": c }, "data": [shard], "context_dim": 8 }),
    );
    ok(&o);

    let records = read_shard(&shard).unwrap();
    let per_sample: Vec<f64> = records
        .iter()
        .map(|r| r.targets.final_field.iter().map(|&y| (y as f64 - c).abs()).sum::<f64>() / r.targets.final_field.len() as f64)
        .collect();
    let expected = per_sample.iter().sum::<f64>() / per_sample.len() as f64;

    let rows: Vec<Value> = serde_json::from_slice(&bytes(out.join("report.json"))).unwrap();
    let all = rows.iter().find(|r| r["material"] == "all").unwrap();
    assert_eq!(all["samples"], json!(20));
    assert!((all["l1"].as_f64().unwrap() - expected).abs() < 1e-12, "{all} vs {expected}");
    // every field has the same size, so pooled MAE equals the mean per-sample L1
    assert!((all["mae"].as_f64().unwrap() - expected).abs() < 1e-12);
    let csv = String::from_utf8(bytes(out.join("report.csv"))).unwrap();
    assert!(csv.starts_with("material,loading,samples,l1,mae,r2\n"));
}

#[test]
fn predict_rejects_mismatched_model_config() {
    let dir = tempfile::tempdir().unwrap();
    let (o, data) = run(dir.path(), "gen-rulebased", "data", &json!({ "seed": 1, "count": 2 }));
    ok(&o);
    let plan = json!({ "stages": [{ "name": "warm", "steps": 1, "batch_size": 1, "accumulation": 1,
                                     "source": { "kind": "rulebased", "seed": 1, "val_count": 0 } }] });
    let (o, trained) = run(dir.path(), "pretrain", "pre", &json!({ "model": tiny_model(), "seed": 0, "plan": plan }));
    ok(&o);

    let mut other = tiny_model();
    other["n_latents"] = json!(12);
    let (o, _) = run(
        dir.path(),
        "predict",
        "pred",
        &json!({ "checkpoint": trained.join("model.ckpt"), "data": [data.join("rulebased-00000.shard")], "model": other }),
    );
    assert_ne!(o.status.code(), Some(0));
    let e = stderr(&o);
    assert!(e.contains("does not fit"), "{e}");
    assert!(e.contains("latent"), "{e}");
}

#[test]
fn toy_pipeline_end_to_end() {
    let started = std::time::Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let (o, rb) = run(d, "gen-rulebased", "rb", &json!({ "seed": 4, "count": 64 }));
    ok(&o);
    let (o, pf) = run(d, "gen-phasefield", "pf", &json!({ "seed": 4, "count": 6, "grid": 8, "material": "pbx",
                                                         "sampler": { "n_per_direction": [1, 2], "length_range": [0.01, 0.05], "aperture_range": [0.0005, 0.005], "side_length": 0.25, "family": "training" } }));
    ok(&o);

    let plan = json!({ "stages": [
        { "name": "surrogate", "steps": 60, "batch_size": 2, "accumulation": 1, "warmup": 5, "lr": 3e-3,
          "source": { "kind": "dataset", "paths": [rb.join("rulebased-00000.shard")] } },
        { "name": "physics", "steps": 30, "batch_size": 2, "accumulation": 1, "warmup": 5, "lr": 3e-3,
          "source": { "kind": "dataset", "paths": [pf.join("phasefield-00000.shard")] } }
    ] });
    let pre_manifest = json!({ "model": tiny_model(), "seed": 7, "plan": plan });
    let (o, pre) = run(d, "pretrain", "pre", &pre_manifest);
    ok(&o);
    let loss = String::from_utf8(bytes(pre.join("loss.csv"))).unwrap();
    assert_eq!(loss.lines().count(), 1 + 90);
    let report: Value = serde_json::from_slice(&bytes(pre.join("report.json"))).unwrap();
    assert_eq!(report["total_steps"], json!(90));

    let (o, again) = run(d, "pretrain", "pre_again", &pre_manifest);
    ok(&o);
    assert_eq!(bytes(pre.join("model.ckpt")), bytes(again.join("model.ckpt")));
    assert_eq!(bytes(pre.join("stamp.json")), bytes(again.join("stamp.json")));

    let shard = pf.join("phasefield-00000.shard");
    let (o, ft) = run(
        d,
        "finetune",
        "ft",
        &json!({ "checkpoint": pre.join("model.ckpt"), "task": "temporal", "data": [shard],
                 "stage": { "name": "temporal", "steps": 20, "batch_size": 2, "accumulation": 1, "warmup": 5, "lr": 1e-3,
                            "mask": "decoder_only" } }),
    );
    ok(&o);

    let (o, pred) = run(d, "predict", "pred", &json!({ "checkpoint": ft.join("model.ckpt"), "data": [shard], "task": "temporal" }));
    ok(&o);
    let preds: Vec<Value> = serde_json::from_slice(&bytes(pred.join("predictions.json"))).unwrap();
    let with_snapshots = read_shard(&shard).unwrap().iter().filter(|r| r.targets.snapshots.is_some()).count();
    assert_eq!(preds.len(), 10 * with_snapshots);
    assert!(pred.join("fields/00000.pgm").exists());

    let (o, ev) = run(d, "evaluate", "ev", &json!({ "predictor": { "checkpoint": ft.join("model.ckpt") }, "data": [shard] }));
    ok(&o);
    let rows: Vec<Value> = serde_json::from_slice(&bytes(ev.join("report.json"))).unwrap();
    assert!(rows.iter().any(|r| r["material"] == "pbx"));
    let all = rows.iter().find(|r| r["material"] == "all").unwrap();
    assert!(all["l1"].as_f64().unwrap().is_finite());

    assert!(started.elapsed().as_secs() < 30 * 60);
}

#[test]
fn finetune_time_to_failure_writes_scaler() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (o, rb) = run(d, "gen-rulebased", "rb", &json!({ "seed": 9, "count": 40, "modes": ["T-horizontal"] }));
    ok(&o);
    let plan = json!({ "stages": [{ "name": "warm", "steps": 5, "batch_size": 2, "accumulation": 1,
                                     "source": { "kind": "rulebased", "seed": 2, "val_count": 0 } }] });
    let (o, pre) = run(d, "pretrain", "pre", &json!({ "model": tiny_model(), "seed": 1, "plan": plan }));
    ok(&o);
    let shard = rb.join("rulebased-00000.shard");
    let (o, ft) = run(
        d,
        "finetune",
        "ft",
        &json!({ "checkpoint": pre.join("model.ckpt"), "task": "time_to_failure", "data": [shard],
                 "stage": { "name": "ttf", "steps": 10, "batch_size": 2, "accumulation": 1, "warmup": 2 } }),
    );
    ok(&o);
    assert!(ft.join("scaler.json").exists());

    let eval = |name: &str, scaler: Option<PathBuf>| {
        let mut m = json!({ "predictor": { "checkpoint": ft.join("model.ckpt") }, "data": [shard], "task": "time_to_failure" });
        if let Some(s) = scaler {
            m["scaler"] = json!(s);
        }
        run(d, "evaluate", name, &m)
    };
    let (o, _) = eval("no_scaler", None);
    assert_eq!(o.status.code(), Some(2));
    let (o, ev) = eval("ev", Some(ft.join("scaler.json")));
    ok(&o);
    let rows: Vec<Value> = serde_json::from_slice(&bytes(ev.join("report.json"))).unwrap();
    assert!(rows.iter().find(|r| r["material"] == "all").unwrap()["r2"].is_number());
}

#[test]
fn embed_writes_fallback_embeddings() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run(dir.path(), "embed", "e", &json!({ "texts": ["steel under tension", "shale"], "dim": 16 }));
    ok(&o);
    let rows: Vec<Value> = serde_json::from_slice(&bytes(out.join("embeddings.json"))).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r["dim"] == json!(16) && r["provider"].as_str().unwrap().starts_with("fallback")));
    assert!(std::fs::read_dir(out.join("embeddings")).unwrap().count() >= 2);

    let (o, _) = run(dir.path(), "embed", "none", &json!({ "texts": [] }));
    assert_eq!(o.status.code(), Some(2));
}
