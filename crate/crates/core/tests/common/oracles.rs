//! Independent reference implementations.

use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use terp::kg::{KnowledgeGraph, Triple, Vocab};

/// Every walk of length `1..=max_len` from `h`, kept only at the smallest
/// length that reaches `c`. Exponential, fine for a dozen nodes.
pub fn brute_force_paths(kg: &KnowledgeGraph, h: usize, c: usize, max_len: usize) -> BTreeSet<Vec<usize>> {
    if h == c {
        return BTreeSet::new();
    }
    for len in 1..=max_len {
        let mut found = BTreeSet::new();
        walk(kg, h, c, len, &mut Vec::new(), &mut found);
        if !found.is_empty() {
            return found;
        }
    }
    BTreeSet::new()
}

fn walk(kg: &KnowledgeGraph, u: usize, c: usize, left: usize, prefix: &mut Vec<usize>, found: &mut BTreeSet<Vec<usize>>) {
    if left == 0 {
        if u == c {
            found.insert(prefix.clone());
        }
        return;
    }
    for t in kg.triples().iter().filter(|t| t.head == u) {
        prefix.push(t.relation);
        walk(kg, t.tail, c, left - 1, prefix, found);
        prefix.pop();
    }
}

/// Random multigraph with `n` nodes, `r` relations and about `density·n` edges,
/// self-loops and parallel edges allowed.
pub fn random_graph(seed: u64, n: usize, r: usize, density: f64) -> KnowledgeGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entities = Vocab::from_labels((0..n).map(|i| format!("n{i}")));
    let relations = Vocab::from_labels((0..r).map(|i| format!("r{i}")));
    let m = ((n as f64) * density).round() as usize;
    let triples = (0..m)
        .map(|_| Triple::new(rng.gen_range(0..n), rng.gen_range(0..r), rng.gen_range(0..n)))
        .collect();
    KnowledgeGraph::new(entities, relations, triples).unwrap()
}

/// Smallest absolute angle between `a` and `b`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

pub fn mean_circular_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| circular_distance(*x, *y)).sum::<f64>() / a.len() as f64
}

/// `(x + iy)(u + iv)` computed from polar form.
pub fn polar_product(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let (ra, pa) = (a.0.hypot(a.1), a.1.atan2(a.0));
    let (rb, pb) = (b.0.hypot(b.1), b.1.atan2(b.0));
    let (r, p) = (ra * rb, pa + pb);
    (r * p.cos(), r * p.sin())
}

pub fn within_pi(x: f64) -> bool {
    x > -PI - 1e-12 && x <= PI + 1e-12
}
