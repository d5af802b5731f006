//! Accuracy when half of the graph's edges are removed before training.

use terp::experiment::{embeddings, prepare, run, toy_config};
use terp::kge::ModelKind;
use terp::toy::{generate_toy, ToyConfig};

fn main() -> anyhow::Result<()> {
    let cfg = toy_config(0);
    let bench = generate_toy(&ToyConfig::default())?;
    for fraction in [0.0, 0.5] {
        let kg = bench.kg.drop_edges(fraction, 7)?;
        let kept = kg.triples().len();
        let prep = prepare(kg, bench.train.clone(), bench.valid.clone(), bench.test.clone(), &cfg.inference)?;
        let kge = embeddings(&prep, &cfg.kge, ModelKind::RotatE)?;
        let r = run(&prep, &kge, &cfg, None)?;
        println!("dropped {:.0}% ({kept} triples left)", 100.0 * fraction);
        print!("{}", r.report.summary());
    }
    Ok(())
}
