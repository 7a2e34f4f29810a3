//! Property tests over randomly generated games.

use proptest::prelude::*;

use crate::dynamics::{Dynamics, Lexicographic};
use crate::game::{load_game, save_game, Coalition, Game, Partition};
use crate::generators::{random_game, RandomGameParams};
use crate::oracle::{enumerate_partitions, random_partition};
use crate::rng::Stream;
use crate::shapley::{exact_values, shapley_exact, sign_split};

const TOL: f64 = 1e-9;

fn game(n: usize, seed: u64) -> Game {
    random_game(&RandomGameParams::sweep(n), seed).unwrap()
}

/// Random game with singleton values that may be negative.
fn raw_game(n: usize, seed: u64) -> Game {
    let p = RandomGameParams {
        n,
        singleton_lo: -1.0,
        singleton_hi: 1.0,
        enforce_a1: false,
        ..Default::default()
    };
    random_game(&p, seed).unwrap()
}

fn nonempty_mask(n: usize) -> impl Strategy<Value = Coalition> {
    (1u32..(1u32 << n)).prop_map(Coalition)
}

fn game_and_mask() -> impl Strategy<Value = (Game, Coalition)> {
    (1usize..=8, any::<u64>()).prop_flat_map(|(n, seed)| (Just(game(n, seed)), nonempty_mask(n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn efficiency((g, s) in game_and_mask()) {
        let total: f64 = exact_values(&g, s).iter().sum();
        prop_assert!((total - g.v(s)).abs() <= TOL);
    }

    #[test]
    fn shift_moves_each_value_by_its_constant(n in 1usize..=6, seed in any::<u64>()) {
        let g = raw_game(n, seed);
        let (shifted, c) = g.shift_to_nonneg_singletons();
        prop_assert!(shifted.check_assumption1().is_empty());
        for m in 1u32..1 << n {
            let s = Coalition(m);
            let (a, b) = (exact_values(&g, s), exact_values(&shifted, s));
            for (k, i) in s.members().enumerate() {
                prop_assert!((b[k] - a[k] - c[i]).abs() <= TOL);
            }
        }
    }

    #[test]
    fn linearity(n in 1usize..=7, s1 in any::<u64>(), s2 in any::<u64>()) {
        let (g1, g2) = (raw_game(n, s1), raw_game(n, s2));
        let sum = g1.sum(&g2).unwrap();
        let s = sum.grand();
        let (a, b, c) = (exact_values(&g1, s), exact_values(&g2, s), exact_values(&sum, s));
        for k in 0..n {
            prop_assert!((c[k] - a[k] - b[k]).abs() <= TOL);
        }
    }

    #[test]
    fn symmetric_players_share_equally(n in 2usize..=7, seed in any::<u64>()) {
        // v depends on players 0 and 1 only through how many of them are present.
        let mut stream = Stream::new(seed);
        let table: Vec<f64> = (0..3usize << (n - 2)).map(|_| stream.uniform(-1.0, 1.0)).collect();
        let g = Game::from_fn(n, |s| {
            if s.is_empty() {
                return 0.0;
            }
            let pair = (s.mask() & 1) + ((s.mask() >> 1) & 1);
            table[(pair as usize) << (n - 2) | (s.mask() >> 2) as usize]
        }).unwrap();
        let phi = shapley_exact(&g, g.grand()).unwrap();
        prop_assert!((phi.values()[0] - phi.values()[1]).abs() <= TOL);
    }

    #[test]
    fn dummy_player_gets_its_singleton_value(n in 2usize..=7, seed in any::<u64>(), d in -1.0f64..1.0) {
        let base = raw_game(n - 1, seed);
        let dummy = n - 1;
        let g = Game::from_fn(n, |s| {
            let rest = base.v(Coalition(s.mask() & !(1 << dummy)));
            if s.contains(dummy) { rest + d } else { rest }
        }).unwrap();
        let phi = shapley_exact(&g, g.grand()).unwrap();
        prop_assert!((phi.get(dummy).unwrap() - d).abs() <= TOL);
    }

    #[test]
    fn positive_scaling_keeps_every_decision(n in 2usize..=7, seed in any::<u64>(), alpha in 0.1f64..10.0) {
        let g = game(n, seed);
        let scaled = g.scaled(alpha).unwrap();
        let (d, ds) = (Dynamics::new(&g, TOL), Dynamics::new(&scaled, TOL));
        let p = random_partition(n, &mut Stream::new(seed));
        for &s in p.blocks() {
            let a = sign_split(&shapley_exact(&g, s).unwrap(), TOL);
            let b = sign_split(&shapley_exact(&scaled, s).unwrap(), TOL);
            prop_assert_eq!(a, b);
            prop_assert_eq!(d.split_rule(s), ds.split_rule(s));
        }
        prop_assert_eq!(d.profitable_pairs(&p), ds.profitable_pairs(&p));
        prop_assert_eq!(d.composite_step(&p, &mut Lexicographic).0, ds.composite_step(&p, &mut Lexicographic).0);
        prop_assert_eq!(d.atomic_step(&p, &mut Lexicographic).0, ds.atomic_step(&p, &mut Lexicographic).0);
    }

    #[test]
    fn merge_raises_surplus_by_delta(n in 2usize..=8, seed in any::<u64>()) {
        let g = game(n, seed);
        let d = Dynamics::new(&g, TOL);
        let p = random_partition(n, &mut Stream::new(seed));
        let before = d.phi(&p);
        match d.merge_once(&p, &mut Lexicographic) {
            Some((q, _)) => {
                let (i, j) = d.profitable_pairs(&p)[0];
                let delta = d.merge_surplus(p.blocks()[i], p.blocks()[j]);
                prop_assert!(delta > TOL);
                prop_assert!((d.phi(&q) - before - delta).abs() <= TOL);
                prop_assert_eq!(q.len() + 1, p.len());
            }
            None => prop_assert!(d.profitable_pairs(&p).is_empty()),
        }
    }

    #[test]
    fn partition_text_round_trips(n in 1usize..=12, seed in any::<u64>()) {
        let p = random_partition(n, &mut Stream::new(seed));
        prop_assert_eq!(Partition::parse(&p.to_string(), n).unwrap(), p.clone());
        prop_assert_eq!(Partition::from_nested(&p.to_nested(), n).unwrap(), p);
    }

    #[test]
    fn game_file_round_trips_bit_for_bit(n in 1usize..=6, seed in any::<u64>()) {
        let g = raw_game(n, seed);
        let back = load_game(&save_game(&g)).unwrap();
        let same = g.values().iter().zip(back.values()).all(|(a, b)| a.to_bits() == b.to_bits());
        prop_assert!(same);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn split_annihilates_unfairness_on_every_partition(n in 2usize..=6, seed in any::<u64>()) {
        let g = game(n, seed);
        let d = Dynamics::new(&g, TOL);
        for p in enumerate_partitions(n).unwrap() {
            let (q, _) = d.split_operator(&p);
            prop_assert!(d.psi(&q) <= TOL * n as f64, "{} -> {}", p, q);
        }
    }
}
