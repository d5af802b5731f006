//! Personalized PageRank subgraphs around question topics.

use terp::ppr::{personalized_pagerank, ppr_subgraph};
use terp::toy::{generate_toy, ToyConfig};

fn main() -> anyhow::Result<()> {
    let bench = generate_toy(&ToyConfig::default())?;
    let kg = &bench.kg;
    let q = &bench.test[0];
    let run = personalized_pagerank(kg, &q.topic_entities, 0.2, 30)?;
    let mut top: Vec<usize> = (0..kg.num_entities()).collect();
    top.sort_by(|&a, &b| run.scores[b].total_cmp(&run.scores[a]));
    println!("{}", q.text);
    for &e in top.iter().take(8) {
        println!("  {:<16} {:.4}", kg.entity_label(e), run.scores[e]);
    }
    for cap in [16, 64, 128] {
        let sg = ppr_subgraph(kg, &q.topic_entities, 0.2, cap, 30)?;
        let recalled = q.answers.iter().all(|&a| sg.contains(a));
        println!("cap {cap:>3}: {} entities, answers inside: {recalled}", sg.len());
    }
    Ok(())
}
