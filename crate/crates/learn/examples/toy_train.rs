//! Trains a small model on 8x8 surrogate data and compares it with the
//! constant-mean predictor on held-out records.
//!
//! `cargo run --release --example toy_train -- [steps] [lr] [width] [latents] [batch] [accumulation] [layers]`

use std::time::Instant;

use fracture_learn::embed::Embedder;
use fracture_learn::model::{Model, ModelConfig};
use fracture_learn::train::{
    mse, predict, resolve_source, train_stage, ContextCache, ExampleTarget, RunOptions, SourceSpec, StageSpec, Task,
};
use rand::SeedableRng;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let steps: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let lr: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(2e-3);
    let d: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(32);
    let cfg = ModelConfig {
        d_enc: d,
        d_dec: d,
        n_latents: args.get(4).and_then(|s| s.parse().ok()).unwrap_or(32),
        n_self_layers: args.get(7).and_then(|s| s.parse().ok()).unwrap_or(1),
        pos_bands: 4,
        max_freq: 8.0,
        context_dim: 64,
        ..ModelConfig::default()
    };
    let mut model = Model::new(cfg, &mut rand_chacha::ChaCha8Rng::seed_from_u64(0)).unwrap();
    println!("{} parameters", model.params.numel());
    let mut ctx = ContextCache::new(Embedder::fallback(64));
    let src = SourceSpec::Rulebased {
        seed: 1,
        grid: 8,
        sampler: None,
        freeze_steps: 1,
        val_count: 256,
    };
    let (mut feed, val) = resolve_source(&src, Task::Field, &mut ctx).unwrap();
    let mut spec = StageSpec::new("toy", Task::Field, steps);
    spec.lr = lr;
    spec.warmup = 100;
    spec.batch_size = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(4);
    spec.accumulation = args.get(6).and_then(|s| s.parse().ok()).unwrap_or(4);
    spec.eval_every = 250;
    let t0 = Instant::now();
    let rep = train_stage(&mut model, &spec, &mut feed, &val, &mut ctx, &RunOptions::default(), 0).unwrap();
    for r in rep.rows.iter().filter(|r| r.val_l1.is_some()) {
        println!("step {} mse {:.4} val_l1 {:.4}", r.step, r.train_mse, r.val_l1.unwrap());
    }
    let (mut ys, mut ps) = (vec![], vec![]);
    for ex in &val {
        if let ExampleTarget::Field(t) = &ex.target {
            ys.extend(t.iter().copied());
        }
        ps.extend(predict(&model, ex).unwrap());
    }
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let base = mse(&ys, &vec![mean; ys.len()]).unwrap();
    let m = mse(&ys, &ps).unwrap();
    println!("held-out mse {m:.4} baseline {base:.4} ratio {:.3} in {:.1}s", m / base, t0.elapsed().as_secs_f64());
}
