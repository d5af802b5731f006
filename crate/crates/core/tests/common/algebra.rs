//! Deterministic sweep over the complex-algebra properties.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use terp::complex::{from_polar, hadamard, modulus, phase, wrap_angle, ComplexVec};
use terp::kge::{compose_relations, train_kge, KgeTrainConfig, ModelKind};

use super::oracles::{circular_distance, random_graph};

/// Largest deviations seen: `(unit-modulus drift, phase addition, polar round trip)`.
pub fn sweep(cases: usize, seed: u64) -> (f64, f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut drift, mut add, mut round): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..cases {
        let d = rng.gen_range(1..16);
        let a: Vec<f64> = (0..d).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let b: Vec<f64> = (0..d).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let (ra, rb) = (ComplexVec::from_phase(&a), ComplexVec::from_phase(&b));
        let prod = hadamard(&ra, &rb).unwrap();
        for ((p, x), y) in phase(&prod).iter().zip(&a).zip(&b) {
            add = add.max(circular_distance(*p, x + y));
        }
        for m in modulus(&prod).iter().chain(&modulus(&ra)) {
            drift = drift.max((m - 1.0).abs());
        }
        let m: Vec<f64> = (0..d).map(|_| rng.gen_range(1e-3..10.0)).collect();
        let z = from_polar(&m, &a).unwrap();
        for ((mm, pp), (m0, a0)) in modulus(&z).iter().zip(phase(&z)).zip(m.iter().zip(&a)) {
            round = round.max((mm - m0).abs() / m0).max(circular_distance(pp, wrap_angle(*a0)));
        }
        let back = from_polar(&modulus(&z), &phase(&z)).unwrap();
        for (x, y) in back.flatten().iter().zip(z.flatten()) {
            round = round.max((x - y).abs());
        }
    }
    (drift, add, round)
}

/// Modulus drift of trained relations and of their compositions after Adam updates.
pub fn trained_drift(seed: u64) -> f64 {
    let kg = random_graph(seed, 12, 3, 3.0).add_inverse_relations().unwrap();
    let cfg = KgeTrainConfig {
        model: ModelKind::RotatE,
        dim: 8,
        epochs: 40,
        learning_rate: 0.05,
        negatives_per_positive: 4,
        batch_size: 8,
        seed,
        ..KgeTrainConfig::default()
    };
    let table = train_kge(&kg, &cfg).unwrap().table;
    let mut worst: f64 = 0.0;
    let nr = kg.num_relations();
    let paths: Vec<Vec<usize>> = (0..nr).flat_map(|r| (0..nr).map(move |s| vec![r, s, (r + s) % nr])).collect();
    for p in paths {
        let z = compose_relations(&p, &table).unwrap();
        for m in modulus(&z) {
            worst = worst.max((m - 1.0).abs());
        }
    }
    worst
}
