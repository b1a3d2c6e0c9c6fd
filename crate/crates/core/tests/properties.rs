use std::sync::Arc;

use demlab_core::balls_bins::BallsBinsState;
use demlab_core::envelope::{ConstantError, CriticalTransition};
use demlab_core::er_components::ComponentState;
use demlab_core::graph::gen_pairing;
use demlab_core::greedy_matching::MatchingState;
use demlab_core::trajectories::{BallsTrajectory, ConstantTrajectory, ErrorFunctionSpec};
use demlab_core::{
    check_good_event, derive_seed, CriticalIntervalMonitor, Envelope, MartingaleTransform, SeedPlan, Sign, SimClock,
    TrackedSeries, Trajectory,
};
use proptest::prelude::*;

fn basic_envelope(n: u64) -> Envelope {
    Envelope::new(Arc::new(ErrorFunctionSpec::balls_basic(n).unwrap()), n as f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_telescopes(values in prop::collection::vec(0.0f64..1e4, 1..60), n in 100u64..100_000, k in 0u32..5) {
        let env = basic_envelope(n);
        let traj = BallsTrajectory { k };
        let x0 = n as f64 * traj.value(0.0);
        let mut t = MartingaleTransform::start(Sign::Plus, Arc::new(traj), env.clone(), x0, 1);
        let nf = n as f64;
        for (i, &v) in values.iter().enumerate() {
            let clock = SimClock::at(n, i as u64 + 1, values.len() as u64).unwrap();
            let got = t.advance(v, &clock, true);
            let ti = clock.t();
            let expected = t.initial() + (v - x0) - nf * ((traj.value(ti) + env.epsilon(ti)) - (traj.value(0.0) + env.epsilon(0.0)));
            let scale = expected.abs().max(got.abs()).max(1.0);
            prop_assert!((got - expected).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn frozen_transform_stays_bit_identical(values in prop::collection::vec(-1e6f64..1e6, 2..50), fail_at in 0usize..49) {
        let env = Envelope::new(Arc::new(ConstantError { epsilon: 0.3, delta: None }), 10.0);
        let mut t = MartingaleTransform::start(Sign::Minus, Arc::new(ConstantTrajectory(2.0)), env, 20.0, 1);
        let fail_at = fail_at.min(values.len() - 1);
        let mut frozen = None;
        for (i, &v) in values.iter().enumerate() {
            let good = i < fail_at;
            let out = t.advance_with(i as u64 + 1, v, 2.0, 0.3, good);
            if let Some(f) = frozen {
                prop_assert_eq!(f64::to_bits(out), f64::to_bits(f));
            } else if !good {
                frozen = Some(out);
            }
        }
        prop_assert_eq!(t.frozen_at(), Some(fail_at as u64 + 1));
    }

    #[test]
    fn good_event_check_is_deterministic(values in prop::collection::vec(0.0f64..2000.0, 1..8)) {
        let n = 1000u64;
        let env = basic_envelope(n);
        let trajs: Vec<BallsTrajectory> = (0..values.len()).map(|k| BallsTrajectory { k: k as u32 }).collect();
        let refs: Vec<&dyn Trajectory> = trajs.iter().map(|t| t as &dyn Trajectory).collect();
        let series: Vec<TrackedSeries> = values
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let mut s = TrackedSeries::new(format!("X_{k}"), 1);
                s.record(0, v);
                s
            })
            .collect();
        let clock = SimClock::new(n, 10).unwrap();
        let first = check_good_event(&series, &refs, &env, &clock).unwrap();
        let second = check_good_event(&series, &refs, &env, &clock).unwrap();
        prop_assert_eq!(first.clone(), second);
        if let Some(v) = first {
            let (lo, hi) = env.bounds(trajs[v.index].value(0.0), 0.0);
            prop_assert!(values[v.index] < lo || values[v.index] > hi);
            for k in 0..v.index {
                let (lo, hi) = env.bounds(trajs[k].value(0.0), 0.0);
                prop_assert!(values[k] >= lo && values[k] <= hi);
            }
        }
    }

    #[test]
    fn critical_entry_follows_a_value_below_delta(steps in prop::collection::vec(-3i32..=3, 1..300)) {
        let (lo, hi) = (10.0, 20.0);
        let mut monitor = CriticalIntervalMonitor::new();
        let mut value = 0.0f64;
        let mut history = vec![value];
        monitor.update_with(value, 0, lo, hi);
        for (i, s) in steps.iter().enumerate() {
            value += *s as f64;
            history.push(value);
            let step = i as u64 + 1;
            if let CriticalTransition::Entered(j) = monitor.update_with(value, step, lo, hi) {
                prop_assert_eq!(j, step);
                prop_assert!(history[j as usize - 1] <= lo);
            }
            if let Some(j) = monitor.entry_step() {
                prop_assert!(j >= 1 && history[j as usize - 1] <= lo);
            }
        }
    }

    #[test]
    fn balls_conservation_along_paths(n in 1u64..200, steps in 0u64..2000, seed in any::<u64>()) {
        let mut s = BallsBinsState::new(n, seed).unwrap();
        for i in 0..steps {
            s.place();
            if i % 97 == 0 {
                prop_assert!(s.audit());
            }
        }
        prop_assert!(s.audit());
        prop_assert_eq!(s.histogram().iter().sum::<u64>(), n);
    }

    #[test]
    fn components_conservation_along_paths(n in 2u64..150, frac in 0.0f64..1.0, seed in any::<u64>()) {
        let mut s = ComponentState::new(n, seed).unwrap();
        let steps = (frac * s.max_edges() as f64) as u64;
        for _ in 0..steps {
            s.add_random_edge().unwrap();
        }
        prop_assert!(s.audit());
        let vertices: u64 = s.histogram().iter().enumerate().map(|(k, &c)| k as u64 * c).sum();
        prop_assert_eq!(vertices, n);
    }

    #[test]
    fn matching_bookkeeping_along_paths(half_n in 5u32..40, d in 1u32..6, seed in any::<u64>()) {
        let n = 2 * half_n;
        prop_assume!(d < n);
        let g = gen_pairing(n, d, seed).unwrap();
        let mut s = MatchingState::new(g.graph(), seed ^ 1);
        s.enable_neighbour_sums();
        while s.step_random().is_some() {
            prop_assert!(s.audit());
        }
        // maximal: every edge has a matched endpoint
        for &(a, b) in g.graph().edges() {
            prop_assert!(s.is_matched(a) || s.is_matched(b));
        }
        prop_assert!(!s.matching().is_empty());
    }

    #[test]
    fn seed_plans_are_pure(base in any::<u64>(), replicas in 1u64..64) {
        let plan = SeedPlan { base, replicas };
        let a: Vec<u64> = plan.seeds().map(|(_, s)| s).collect();
        prop_assert_eq!(&a, &plan.seeds().map(|(_, s)| s).collect::<Vec<_>>());
        prop_assert_eq!(a.len() as u64, replicas);
        for (r, s) in plan.seeds() {
            prop_assert_eq!(s, derive_seed(base, r));
        }
        let mut sorted = a.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), a.len());
    }
}
