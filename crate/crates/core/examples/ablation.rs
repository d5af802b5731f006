//! Trains each model variant on the same graph and prints a comparison table.
//!
//! cargo run --release --example ablation -- [seed] [variant;variant...]

use terp::experiment::{ablation_run, ablation_table, prepare_toy, standard_variants, toy_config, Variant};
use terp::toy::{generate_toy, ToyConfig};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    let variants = match args.next() {
        Some(list) => list.split(';').map(Variant::parse).collect::<Result<Vec<_>, _>>()?,
        None => standard_variants(),
    };
    let cfg = toy_config(seed);
    let prep = prepare_toy(&generate_toy(&ToyConfig { seed, ..ToyConfig::default() })?, &cfg.inference)?;
    let rows = ablation_run(&prep, &cfg, &variants)?;
    print!("{}", ablation_table(&rows));
    Ok(())
}
