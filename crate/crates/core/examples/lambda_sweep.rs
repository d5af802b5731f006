//! Hits@1 per hop bucket as the path weight λ moves from 0 to 1.

use terp::experiment::{embeddings, lambda_sweep, prepare_toy, run, sweep_table, toy_config};
use terp::kge::ModelKind;
use terp::toy::{generate_toy, ToyConfig};

fn main() -> anyhow::Result<()> {
    let cfg = toy_config(0);
    let prep = prepare_toy(&generate_toy(&ToyConfig::default())?, &cfg.inference)?;
    let kge = embeddings(&prep, &cfg.kge, ModelKind::RotatE)?;
    let model = run(&prep, &kge, &cfg, None)?.model;
    let lambdas: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let reports = lambda_sweep(&model, &prep.env, &prep.test, &lambdas, &cfg.inference)?;
    print!("{}", sweep_table(&reports));
    Ok(())
}
