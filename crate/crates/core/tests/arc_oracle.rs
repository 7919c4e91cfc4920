use pcosync_core::{containing_arc_ticks, TickClock};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Anchored brute force: for each phase taken as the arc's start, the arc
/// must reach the farthest phase going forward; keep the shortest.
fn anchored_arc(phases: &[u64], period: u64) -> u64 {
    phases
        .iter()
        .map(|&a| {
            phases
                .iter()
                .map(|&p| (p % period + period - a % period) % period)
                .max()
                .unwrap()
        })
        .min()
        .unwrap()
}

#[test]
fn ten_thousand_random_sets_match_the_brute_force() {
    let period = TickClock::default().ticks_per_period();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..10_000 {
        let n = rng.gen_range(1..=12);
        let phases: Vec<u64> = (0..n).map(|_| rng.gen_range(0..period)).collect();
        assert_eq!(
            containing_arc_ticks(&phases, period).unwrap(),
            anchored_arc(&phases, period),
            "{phases:?}"
        );
    }
}

#[test]
fn clustered_sets_match_the_brute_force() {
    // phases bunched near the wrap point exercise the circular gap
    let period = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..2_000 {
        let n = rng.gen_range(1..=12);
        let phases: Vec<u64> = (0..n)
            .map(|_| (period - 50 + rng.gen_range(0..100u64)) % period)
            .collect();
        assert_eq!(
            containing_arc_ticks(&phases, period).unwrap(),
            anchored_arc(&phases, period)
        );
    }
}

proptest! {
    #[test]
    fn arc_matches_brute_force(phases in prop::collection::vec(0u64..1_000, 1..=12)) {
        prop_assert_eq!(containing_arc_ticks(&phases, 1_000).unwrap(), anchored_arc(&phases, 1_000));
    }

    #[test]
    fn arc_is_below_one_period(phases in prop::collection::vec(0u64..=1_000_000, 1..=12)) {
        prop_assert!(containing_arc_ticks(&phases, 1_000_000).unwrap() < 1_000_000);
    }

    #[test]
    fn arc_is_rotation_invariant(
        phases in prop::collection::vec(0u64..1_000_000, 1..=12),
        offset in 0u64..1_000_000,
    ) {
        let rotated: Vec<u64> = phases.iter().map(|p| (p + offset) % 1_000_000).collect();
        prop_assert_eq!(
            containing_arc_ticks(&phases, 1_000_000).unwrap(),
            containing_arc_ticks(&rotated, 1_000_000).unwrap()
        );
    }

    #[test]
    fn arc_is_permutation_invariant(
        phases in prop::collection::vec(0u64..1_000_000, 1..=12),
        seed in any::<u64>(),
    ) {
        let mut shuffled = phases.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.gen_range(0..=i));
        }
        prop_assert_eq!(
            containing_arc_ticks(&phases, 1_000_000).unwrap(),
            containing_arc_ticks(&shuffled, 1_000_000).unwrap()
        );
    }
}
