//! Randomized invariants across modules.

use proptest::prelude::*;
use supermarket::fast::{enumerated_transition_probs, generator, memory_map, mu_product, stationary};
use supermarket::fluid::{fixed_point, integrate};
use supermarket::sim::{apply_arrival, apply_departure, draw_arrival_sample, event_rng, simulate, SimOptions};
use supermarket::{FluidVector, LimitParams, MicroState, ModelParams, SortedLengths};

fn tail_vector(max_d: usize) -> impl Strategy<Value = FluidVector> {
    prop::collection::vec(0.0..0.95f64, 1..=max_d).prop_map(|mut v| {
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        FluidVector::new(v).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn single_events_keep_the_state_valid(seed in any::<u64>(), queues in 1usize..30, n in 1usize..4, steps in 1usize..300) {
        let mut s = MicroState::one_in_memory(queues);
        let mut rng = event_rng(seed);
        let mut customers = 1i64;
        for i in 0..steps {
            if i % 3 != 0 || s.busy() == 0 {
                let slots = draw_arrival_sample(&s, n, &mut rng);
                let e = apply_arrival(&mut s, &slots, &mut rng);
                prop_assert!(s.mem_len <= e.joined_len + 1);
                customers += 1;
            } else {
                apply_departure(&mut s, &mut rng).unwrap();
                customers -= 1;
            }
            prop_assert!(s.validate().is_ok());
            prop_assert_eq!(s.total_customers() as i64, customers);
        }
    }

    #[test]
    fn memory_is_never_longer_than_the_sample_minimum_plus_one(y in 0usize..8, v in prop::collection::vec(0usize..8, 1..4)) {
        let out = memory_map(y, &v);
        let m = *v.iter().min().unwrap();
        prop_assert!(out <= y.min(m) + 1);
        prop_assert!(memory_map(y + 1, &v) >= out);
    }

    #[test]
    fn closed_form_generator_matches_enumeration(x in tail_vector(5), n in 1usize..4) {
        let params = ModelParams::new(0.6, n, 500).unwrap();
        let g = generator(&x, params);
        let e = enumerated_transition_probs(&x, n);
        for (a, b) in g.probs.iter().zip(&e) {
            for (p, q) in a.iter().zip(b) {
                prop_assert!((p - q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stationary_tails_are_mu_products(x in tail_vector(6), n in 1usize..4) {
        let params = ModelParams::new(0.5, n, 100).unwrap();
        let pi = stationary(&generator(&x, params)).unwrap();
        for k in 0..=x.depth() {
            prop_assert!((pi.tail(k) - mu_product(&x, n, k)).abs() < 1e-10);
        }
    }

    #[test]
    fn ode_is_monotone_in_the_initial_condition(lo in tail_vector(4), bump in 0.0..0.05f64) {
        let p = LimitParams::new(0.7, 2).unwrap();
        let hi: Vec<f64> = lo.x.iter().map(|v| (v + bump).min(1.0)).collect();
        let hi = FluidVector::new(hi).unwrap();
        let a = integrate(&lo, p, 2.0, 1e-9).unwrap();
        let b = integrate(&hi, p, 2.0, 1e-9).unwrap();
        for t in [0.5, 1.0, 2.0] {
            prop_assert!(a.eval(t).le(&b.eval(t), 1e-8));
        }
    }

    #[test]
    fn sorted_lengths_round_trip(seed in any::<u64>(), queues in 1usize..20) {
        let params = ModelParams::new(0.8, 2, queues).unwrap();
        let opts = SimOptions { d_record: 2, grid_per_unit: 0.0, keep_events: false };
        let tr = simulate(params, &MicroState::one_in_memory(queues), 3.0, &opts, seed).unwrap();
        let y = SortedLengths::from_micro(&tr.final_state);
        prop_assert_eq!(y.to_micro(), tr.final_state);
    }
}

#[test]
fn fixed_point_is_strictly_decreasing() {
    for n in 1..=3 {
        for lambda in [0.1, 0.5, 0.95] {
            let mut t = fixed_point(LimitParams::new(lambda, n).unwrap(), 10);
            for k in 0..10 {
                assert!(t.log_a(k + 1) < t.log_a(k));
            }
        }
    }
}
