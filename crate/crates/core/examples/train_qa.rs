//! End-to-end: toy benchmark, RotatE embeddings, QA training, evaluation.
//!
//! cargo run --release --example train_qa -- [seed]

use std::time::Instant;

use terp::experiment::{embeddings, prepare_toy, run, toy_config};
use terp::kge::ModelKind;
use terp::toy::{generate_toy, ToyConfig};

fn main() -> anyhow::Result<()> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0);
    let cfg = toy_config(seed);
    let bench = generate_toy(&ToyConfig { seed, ..ToyConfig::default() })?;
    let prep = prepare_toy(&bench, &cfg.inference)?;

    let t = Instant::now();
    let kge = embeddings(&prep, &cfg.kge, ModelKind::RotatE)?;
    println!("embeddings: {:.1}s", t.elapsed().as_secs_f64());

    let t = Instant::now();
    let result = run(&prep, &kge, &cfg, None)?;
    let losses = &result.train.epoch_losses;
    println!(
        "qa training: {:.1}s, {} examples/epoch, loss {:.3} -> {:.3}",
        t.elapsed().as_secs_f64(),
        result.train.examples_per_epoch,
        losses[0],
        losses.last().unwrap()
    );
    print!("{}", result.report.summary());
    Ok(())
}
