//! Trains RotatE on the toy graph and checks link prediction and composition.

use std::time::Instant;

use terp::complex::{distance, hadamard, Norm};
use terp::experiment::toy_config;
use terp::kge::{compose_relations, filtered_tail_rank, train_kge};
use terp::toy::{generate_toy, ToyConfig};

fn main() -> anyhow::Result<()> {
    let cfg = toy_config(0).kge;
    let kg = generate_toy(&ToyConfig::default())?.kg.add_inverse_relations()?;

    let t = Instant::now();
    let out = train_kge(&kg, &cfg)?;
    println!(
        "{} epochs in {:.1}s, loss {:.3} -> {:.3}",
        cfg.epochs,
        t.elapsed().as_secs_f64(),
        out.epoch_losses[0],
        out.epoch_losses.last().unwrap()
    );

    let forward: Vec<_> = kg.triples().iter().filter(|t| t.relation < kg.num_base_relations()).collect();
    let mut hits = 0;
    let mut mrr = 0.0;
    for t in &forward {
        let rank = filtered_tail_rank(&out.table, &kg, t, cfg.norm)?;
        hits += (rank == 1) as usize;
        mrr += 1.0 / rank as f64;
    }
    let n = forward.len() as f64;
    println!("filtered tail hits@1 {:.3}, mrr {:.3}", hits as f64 / n, mrr / n);

    // grandfather = father ∘ father, read off the embeddings
    let father = kg.relation_id("father")?;
    let grand = compose_relations(&[father, father], &out.table)?;
    let t = forward.iter().find(|t| t.relation == father).unwrap();
    let h = out.table.entity(t.head);
    let guess = hadamard(&h, &grand)?;
    let best = (0..kg.num_entities())
        .min_by(|&a, &b| {
            let da = distance(&guess, &out.table.entity(a), Norm::L1).unwrap();
            let db = distance(&guess, &out.table.entity(b), Norm::L1).unwrap();
            da.total_cmp(&db)
        })
        .unwrap();
    println!("father∘father of {} -> {}", kg.entity_label(t.head), kg.entity_label(best));
    Ok(())
}
