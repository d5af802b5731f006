//! Generates the synthetic family/city/company benchmark and writes it out.
//!
//! cargo run --example toy_benchmark -- [out_dir] [seed]

use std::path::PathBuf;

use terp::toy::{generate_toy, ToyConfig};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "toy".into()));
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);

    let bench = generate_toy(&ToyConfig { seed, ..ToyConfig::default() })?;
    let kg = &bench.kg;
    println!("{} entities, {} relations, {} triples", kg.num_entities(), kg.num_relations(), kg.triples().len());
    println!("train {} / valid {} / test {}", bench.train.len(), bench.valid.len(), bench.test.len());
    for q in bench.test.iter().take(5) {
        let answers: Vec<_> = q.answers.iter().map(|&a| kg.entity_label(a)).collect();
        println!("  [{:?} hop] {} -> {answers:?}", q.hop_annotation.unwrap_or(0), q.text);
    }
    bench.write_to_dir(&out)?;
    println!("wrote {}", out.display());
    Ok(())
}
