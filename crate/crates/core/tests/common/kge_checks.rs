//! Link-prediction sanity checks on graphs whose answers are known.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use terp::complex::Norm;
use terp::kg::KnowledgeGraph;
use terp::kge::{filtered_tail_rank, train_kge, KgeTrainConfig, ModelKind};

use super::oracles::mean_circular_error;

pub fn cycle_kg() -> KnowledgeGraph {
    KnowledgeGraph::from_labeled([("a", "next", "b"), ("b", "next", "c"), ("c", "next", "d"), ("d", "next", "a")])
        .unwrap()
        .add_inverse_relations()
        .unwrap()
}

/// Mean filtered rank over every triple of the augmented cycle, both directions.
pub fn cycle_mean_rank(seed: u64) -> f64 {
    let kg = cycle_kg();
    let cfg = KgeTrainConfig {
        dim: 8,
        epochs: 200,
        learning_rate: 0.05,
        negatives_per_positive: 3,
        batch_size: 4,
        seed,
        ..KgeTrainConfig::default()
    };
    let table = train_kge(&kg, &cfg).unwrap().table;
    let ranks: Vec<usize> = kg
        .triples()
        .iter()
        .map(|t| filtered_tail_rank(&table, &kg, t, Norm::L1).unwrap())
        .collect();
    ranks.iter().sum::<usize>() as f64 / ranks.len() as f64
}

/// Three layers of `n` entities; `r1: X→Y` and `r2: Y→Z` are random
/// bijections and `r3: X→Z` is their composition.
pub fn composition_kg(n: usize, seed: u64) -> KnowledgeGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s: Vec<usize> = (0..n).collect();
    let mut t: Vec<usize> = (0..n).collect();
    s.shuffle(&mut rng);
    t.shuffle(&mut rng);
    let x = |i: usize| format!("x{i}");
    let y = |i: usize| format!("y{i}");
    let z = |i: usize| format!("z{i}");
    let mut triples = Vec::new();
    for i in 0..n {
        triples.push((x(i), "r1", y(s[i])));
        triples.push((y(s[i]), "r2", z(t[s[i]])));
        triples.push((x(i), "r3", z(t[s[i]])));
    }
    KnowledgeGraph::from_labeled(triples.iter().map(|(h, r, tl)| (h.as_str(), *r, tl.as_str())))
        .unwrap()
        .add_inverse_relations()
        .unwrap()
}

/// Mean circular error between `phase(r1) + phase(r2)` and `phase(r3)`.
pub fn composition_phase_error(seed: u64) -> f64 {
    let kg = composition_kg(30, seed);
    let cfg = KgeTrainConfig {
        model: ModelKind::RotatE,
        dim: 16,
        epochs: 300,
        learning_rate: 0.02,
        negatives_per_positive: 8,
        batch_size: 16,
        seed,
        ..KgeTrainConfig::default()
    };
    let table = train_kge(&kg, &cfg).unwrap().table;
    let id = |l: &str| kg.relation_id(l).unwrap();
    let (p1, p2, p3) = (
        table.relation_phase(id("r1")).unwrap(),
        table.relation_phase(id("r2")).unwrap(),
        table.relation_phase(id("r3")).unwrap(),
    );
    let sum: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| a + b).collect();
    mean_circular_error(&sum, &p3)
}
