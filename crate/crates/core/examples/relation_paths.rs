//! Shortest relation paths between entities of the toy graph.

use terp::paths::{enumerate_shortest_paths, PathCache};
use terp::toy::{generate_toy, ToyConfig};

fn main() -> anyhow::Result<()> {
    let bench = generate_toy(&ToyConfig::default())?;
    let kg = bench.kg.add_inverse_relations()?;

    for q in bench.test.iter().filter(|q| q.hop_annotation == Some(2)).take(4) {
        let (h, a) = (q.topic_entities[0], q.answers[0]);
        println!("{}  ({} -> {})", q.text, kg.entity_label(h), kg.entity_label(a));
        for p in enumerate_shortest_paths(&kg, h, a, 3, 8)? {
            println!("    {}", p.describe(&kg));
        }
    }

    let cache = PathCache::new(&kg, 3, 32);
    let h = bench.test[0].topic_entities[0];
    let reachable = (0..kg.num_entities()).filter(|&c| !cache.get(&kg, h, c).unwrap().is_empty()).count();
    println!("{} reaches {reachable} entities within 3 hops; {} pairs cached", kg.entity_label(h), cache.len());
    Ok(())
}
