//! Invariants of the search engines on random instances.

mod common;

use std::collections::BTreeSet;

use common::{
    conflict_prone_instances, is_normal, oracle, oracle_worlds, random_instances, Admissibility,
    Instance,
};
use conflictbn::{
    MassMode, Observation, QueryFormula, SearchParams, SearchState, StopReason, Strategy,
};
use proptest::prelude::*;

const STRATEGIES: [Strategy; 2] = [Strategy::BestFirst, Strategy::IterativeDeepening];

fn one_random(seed: u64) -> Instance {
    random_instances(seed, 1, 10).pop().unwrap()
}

fn one_conflicted(seed: u64) -> Instance {
    conflict_prone_instances(seed, 1, 10).pop().unwrap()
}

fn exhaust<'a>(inst: &'a Instance, params: SearchParams) -> SearchState<'a> {
    let mut state = SearchState::new(&inst.net, &inst.query, &inst.obs, params).unwrap();
    assert_eq!(state.run(|_, _| {}).unwrap(), StopReason::Exhausted);
    state
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bounds_bracket_the_truth_at_every_step(seed in any::<u64>(), conflicted in any::<bool>()) {
        let inst = if conflicted { one_conflicted(seed) } else { one_random(seed) };
        let (_, p_obs, joint) = oracle(&inst.net, &inst.query, &inst.obs);
        let truth = joint / p_obs;
        for strategy in STRATEGIES {
            let mut state = SearchState::new(
                &inst.net, &inst.query, &inst.obs, SearchParams::default().with_strategy(strategy),
            ).unwrap();
            let mut bad = 0;
            state.run(|_, st| {
                for mode in [MassMode::Naive, MassMode::ConflictAdjusted] {
                    let s = st.snapshot_with(mode).unwrap();
                    if s.post_lower > truth + 1e-12 || truth > s.post_upper + 1e-12 {
                        bad += 1;
                    }
                }
            }).unwrap();
            prop_assert_eq!(bad, 0, "{} {}", inst.label, strategy);
        }
    }

    #[test]
    fn heuristic_and_mass_factor_are_sound(seed in any::<u64>()) {
        let inst = one_conflicted(seed);
        for strategy in STRATEGIES {
            let state = exhaust(&inst, SearchParams::default().with_strategy(strategy));
            let check = Admissibility::check(&inst.net, &inst.obs, state.heuristic());
            prop_assert_eq!(check.h_violations, 0);
            prop_assert_eq!(check.mass_violations, 0);
        }
    }

    #[test]
    fn registered_conflicts_hold(seed in any::<u64>()) {
        let inst = one_conflicted(seed);
        let state = exhaust(&inst, SearchParams::default());
        for c in state.conflicts() {
            let mut witness = false;
            oracle_worlds(&inst.net, &inst.obs, |w, _| {
                witness |= c.vars.iter().all(|&v| is_normal(&inst.net, w, v));
            });
            prop_assert!(!witness, "{:?}", c.names(&inst.net));
        }
    }

    #[test]
    fn best_first_never_revisits(seed in any::<u64>(), conflicted in any::<bool>()) {
        let inst = if conflicted { one_conflicted(seed) } else { one_random(seed) };
        let params = SearchParams { track_revisits: true, ..SearchParams::default() };
        let state = exhaust(&inst, params);
        prop_assert_eq!(state.counters().revisits, 0);
    }

    #[test]
    fn best_first_finds_worlds_in_probability_order(seed in any::<u64>(), conflicted in any::<bool>()) {
        let inst = if conflicted { one_conflicted(seed) } else { one_random(seed) };
        let params = SearchParams { decide_early: false, ..SearchParams::default() };
        let state = exhaust(&inst, params);
        for pair in state.worlds().windows(2) {
            // keys are compared on a 1e-9 grid of ln f
            prop_assert!(pair[1].log_g <= pair[0].log_g + 2e-9, "{} after {}", pair[1].log_g, pair[0].log_g);
        }
    }

    #[test]
    fn both_strategies_generate_the_same_worlds(seed in any::<u64>(), conflicts in any::<bool>()) {
        let inst = one_random(seed);
        let mut params = SearchParams::default().with_conflicts(conflicts);
        params.decide_early = false;
        let sets: Vec<BTreeSet<Vec<u16>>> = STRATEGIES
            .iter()
            .map(|&s| exhaust(&inst, params.clone().with_strategy(s)).worlds().iter().map(|w| w.values.clone()).collect())
            .collect();
        prop_assert_eq!(&sets[0], &sets[1]);
        let mut expected = BTreeSet::new();
        oracle_worlds(&inst.net, &inst.obs, |w, _| {
            expected.insert(w.to_vec());
        });
        prop_assert_eq!(&sets[0], &expected);
    }

    #[test]
    fn traces_do_not_depend_on_the_query(seed in any::<u64>(), other in any::<u64>()) {
        let inst = one_random(seed);
        let alternative = one_random(other);
        // a query over variables the network may not have is replaced by a constant
        let second = if alternative.query.variables().iter().all(|&v| v < inst.net.len()) {
            alternative.query
        } else {
            QueryFormula::Const(false)
        };
        for strategy in STRATEGIES {
            let mut params = SearchParams::default().with_strategy(strategy);
            params.decide_early = false;
            params.record_expansions = true;
            let a = exhaust(&inst, params.clone());
            let mut b = SearchState::new(&inst.net, &second, &inst.obs, params).unwrap();
            b.run(|_, _| {}).unwrap();
            prop_assert_eq!(a.expansion_log(), b.expansion_log());
            prop_assert_eq!(a.worlds().len(), b.worlds().len());
        }
    }

    #[test]
    fn naive_queue_mass_never_rises(seed in any::<u64>()) {
        let inst = one_random(seed);
        for strategy in STRATEGIES {
            for obs in [&inst.obs, &Observation::new()] {
                let params = SearchParams::default()
                    .with_strategy(strategy)
                    .with_conflicts(false)
                    .with_mass_mode(MassMode::Naive);
                let mut state = SearchState::new(&inst.net, &inst.query, obs, params).unwrap();
                let mut last = f64::INFINITY;
                let mut rises = 0;
                state.run(|_, st| {
                    let p_q = st.queue_mass(MassMode::Naive);
                    if p_q > last {
                        rises += 1;
                    }
                    last = p_q;
                }).unwrap();
                prop_assert_eq!(rises, 0);
            }
        }
    }

    #[test]
    fn incremental_mass_tracks_a_fresh_sum(seed in any::<u64>()) {
        let inst = one_conflicted(seed);
        for strategy in STRATEGIES {
            let mut state = SearchState::new(
                &inst.net, &inst.query, &inst.obs, SearchParams::default().with_strategy(strategy),
            ).unwrap();
            let mut worst = 0.0f64;
            state.run(|_, st| {
                for mode in [MassMode::Naive, MassMode::ConflictAdjusted] {
                    let (a, b) = (st.queue_mass(mode), st.recomputed_queue_mass(mode));
                    worst = worst.max((a - b).abs());
                }
            }).unwrap();
            prop_assert!(worst < 1e-12, "{}", worst);
        }
    }
}
