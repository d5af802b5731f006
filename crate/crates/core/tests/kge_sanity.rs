mod common;

use common::kge_checks::{composition_phase_error, cycle_mean_rank};

#[test]
fn cycle_is_ranked_near_the_top() {
    for seed in 0..3 {
        let r = cycle_mean_rank(seed);
        assert!(r <= 2.0, "seed {seed}: mean rank {r}");
    }
}

#[test]
fn composed_relation_phases_add_up() {
    let e = composition_phase_error(0);
    assert!(e < 0.5, "mean circular error {e}");
}
