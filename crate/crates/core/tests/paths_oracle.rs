mod common;

use std::collections::BTreeSet;

use common::oracles::{brute_force_paths, random_graph};
use terp::paths::{enumerate_shortest_paths, PathCache};

fn compare(seed: u64) -> usize {
    let n = 4 + (seed as usize % 9);
    let kg = random_graph(seed, n, 1 + seed as usize % 3, 1.8);
    let mut checked = 0;
    for h in 0..n {
        for c in 0..n {
            let got = enumerate_shortest_paths(&kg, h, c, 4, usize::MAX).unwrap();
            let got: BTreeSet<Vec<usize>> = got.iter().map(|p| p.steps.clone()).collect();
            assert_eq!(got, brute_force_paths(&kg, h, c, 4), "seed {seed} pair ({h},{c})");
            checked += 1;
        }
    }
    checked
}

#[test]
fn matches_brute_force_on_fifty_graphs() {
    let pairs: usize = (0..50).map(compare).sum();
    assert!(pairs > 1000);
}

#[test]
fn inverse_augmented_graphs_match_too() {
    for seed in 100..110 {
        let kg = random_graph(seed, 8, 2, 1.2).add_inverse_relations().unwrap();
        for h in 0..8 {
            for c in 0..8 {
                let got: BTreeSet<Vec<usize>> = enumerate_shortest_paths(&kg, h, c, 3, usize::MAX)
                    .unwrap()
                    .into_iter()
                    .map(|p| p.steps)
                    .collect();
                assert_eq!(got, brute_force_paths(&kg, h, c, 3));
            }
        }
    }
}

#[test]
fn cap_keeps_the_lexicographic_prefix() {
    for seed in 0..20 {
        let kg = random_graph(seed, 10, 3, 3.0);
        for (h, c) in [(0, 9), (1, 5), (3, 7)] {
            let all = enumerate_shortest_paths(&kg, h, c, 4, usize::MAX).unwrap();
            let capped = enumerate_shortest_paths(&kg, h, c, 4, 2).unwrap();
            assert_eq!(capped.len(), all.len().min(2));
            assert_eq!(capped[..], all[..capped.len()]);
            assert!(all.windows(2).all(|w| w[0].steps < w[1].steps));
            for p in &all {
                assert!(p.realizes(&kg, h, c));
            }
        }
    }
}

#[test]
fn cache_returns_the_enumerated_paths() {
    let kg = random_graph(7, 9, 2, 2.0);
    let cache = PathCache::new(&kg, 3, 16);
    for h in 0..9 {
        for c in 0..9 {
            let direct = enumerate_shortest_paths(&kg, h, c, 3, 16).unwrap();
            assert_eq!(*cache.get(&kg, h, c).unwrap(), direct);
            assert_eq!(*cache.get(&kg, h, c).unwrap(), direct);
        }
    }
}
