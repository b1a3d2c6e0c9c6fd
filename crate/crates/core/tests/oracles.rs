//! Exhaustive enumeration oracles for the drift formulas and the samplers.

use demlab_core::balls_bins::BallsBinsState;
use demlab_core::er_components::ComponentState;
use demlab_core::graph::{gen_circulant, gen_pairing, SimpleGraph};
use demlab_core::greedy_matching::MatchingState;
use demlab_core::seed::{derive_seed, rng_from_seed, uniform_below};
use num_rational::Ratio;

fn r(n: i64, d: i64) -> Ratio<i64> {
    Ratio::new(n, d)
}

#[test]
fn balls_drift_equals_enumeration() {
    let mut rng = rng_from_seed(17);
    for n in 1..=12u64 {
        for trial in 0..40 {
            let mut state = BallsBinsState::new(n, derive_seed(n, trial)).unwrap();
            let steps = uniform_below(&mut rng, 3 * n + 1);
            for _ in 0..steps {
                state.place();
            }
            let loads = state.loads().to_vec();
            let top = loads.iter().copied().max().unwrap_or(0) as usize + 2;
            for k in 0..=top {
                let mut total = 0i64;
                for &l in &loads {
                    let l = l as usize;
                    total += (l + 1 == k) as i64 - (l == k) as i64;
                }
                let oracle = r(total, n as i64);
                let formula = state.exact_drift(k);
                let expected = *oracle.numer() as f64 / *oracle.denom() as f64;
                assert!(
                    (formula - expected).abs() <= 1e-15,
                    "n={n} k={k}: {formula} vs {oracle}"
                );
            }
        }
    }
}

#[test]
fn balls_place_in_matches_enumeration_of_each_bin() {
    let mut state = BallsBinsState::new(5, 1).unwrap();
    for _ in 0..7 {
        state.place();
    }
    for bin in 0..5 {
        let mut next = state.clone();
        next.place_in(bin);
        assert!(next.audit());
        let l = state.loads()[bin] as usize;
        assert_eq!(next.count(l) + 1, state.count(l));
        assert_eq!(next.count(l + 1), state.count(l + 1) + 1);
    }
}

fn er_enumeration(state: &ComponentState, k: u64) -> Ratio<i64> {
    // independent of the library oracle: recompute components by BFS
    let n = state.n() as usize;
    let mut adj = vec![Vec::new(); n];
    let mut missing = Vec::new();
    for u in 0..n as u32 {
        for v in (u + 1)..n as u32 {
            if state.has_edge(u, v) {
                adj[u as usize].push(v as usize);
                adj[v as usize].push(u as usize);
            } else {
                missing.push((u as usize, v as usize));
            }
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut stack = vec![s];
        comp[s] = id;
        let mut size = 0u64;
        while let Some(x) = stack.pop() {
            size += 1;
            for &y in &adj[x] {
                if comp[y] == usize::MAX {
                    comp[y] = id;
                    stack.push(y);
                }
            }
        }
        sizes.push(size);
    }
    let mut total = 0i64;
    for &(u, v) in &missing {
        if comp[u] == comp[v] {
            continue;
        }
        let (a, b) = (sizes[comp[u]], sizes[comp[v]]);
        total += (a + b == k) as i64 - (a == k) as i64 - (b == k) as i64;
    }
    r(total, missing.len() as i64)
}

#[test]
fn components_oracle_agrees_with_independent_enumeration() {
    let mut rng = rng_from_seed(5);
    for trial in 0..200u64 {
        let n = 2 + uniform_below(&mut rng, 29);
        let mut state = ComponentState::new(n, trial).unwrap();
        let steps = uniform_below(&mut rng, state.max_edges());
        for _ in 0..steps {
            state.add_random_edge().unwrap();
        }
        for k in 1..=5 {
            assert_eq!(state.exact_drift_oracle(k as usize).unwrap(), er_enumeration(&state, k));
        }
    }
}

#[test]
fn components_formula_within_slack_on_reachable_states() {
    let mut rng = rng_from_seed(99);
    let mut worst: f64 = 0.0;
    for trial in 0..1000u64 {
        let n = 5 + uniform_below(&mut rng, 26);
        let mut state = ComponentState::new(n, derive_seed(7, trial)).unwrap();
        let steps = uniform_below(&mut rng, state.max_edges());
        for _ in 0..steps {
            state.add_random_edge().unwrap();
        }
        for k in 1..=5usize {
            let oracle = er_enumeration(&state, k as u64);
            let exact = *oracle.numer() as f64 / *oracle.denom() as f64;
            let gap = (exact - state.formula_drift(k)).abs();
            let slack = 40.0 * (k * k * k) as f64 / n as f64;
            worst = worst.max(gap / slack);
            assert!(gap <= slack, "n={n} steps={steps} k={k}: gap {gap} > {slack}");
        }
    }
    assert!(worst < 1.0);
}

#[test]
fn component_law_and_increments_along_paths() {
    for seed in 0..20 {
        let mut state = ComponentState::new(40, seed).unwrap();
        let mut prev = state.histogram().to_vec();
        while state.step() < state.max_edges() {
            let before = state.components();
            let e = state.add_random_edge().unwrap();
            assert_eq!(state.components(), before - e.merged.is_some() as u64);
            assert!(state.audit());
            for (k, (&a, &b)) in prev.iter().zip(state.histogram()).enumerate().skip(1) {
                assert!(a.abs_diff(b) <= 2, "k={k}");
            }
            prev = state.histogram().to_vec();
        }
    }
}

fn state_with_edges(n: u64, edges: &[(u32, u32)], seed: u64) -> ComponentState {
    let mut s = ComponentState::new(n, seed).unwrap();
    for &(u, v) in edges {
        s.add_edge(u, v).unwrap();
    }
    s
}

fn chi_square_missing_edges(edges: &[(u32, u32)], samples: u64) -> (f64, usize) {
    let template = state_with_edges(6, edges, 0);
    let missing = template.missing_edges();
    let mut counts = vec![0u64; missing.len()];
    for i in 0..samples {
        let mut s = state_with_edges(6, edges, derive_seed(1234, i));
        let e = s.add_random_edge().unwrap();
        let key = (e.u.min(e.v), e.u.max(e.v));
        counts[missing.iter().position(|&m| m == key).unwrap()] += 1;
    }
    let expected = samples as f64 / missing.len() as f64;
    let chi = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    (chi, missing.len() - 1)
}

#[test]
fn missing_edge_sampling_is_uniform() {
    // chi-square 0.999 quantiles for 9 and 4 degrees of freedom
    let (chi, df) = chi_square_missing_edges(&[(0, 1), (1, 2), (3, 4), (0, 5), (2, 5)], 100_000);
    assert_eq!(df, 9);
    assert!(chi < 27.877, "chi-square {chi}");
    let dense = [
        (0, 1),
        (0, 2),
        (0, 3),
        (0, 4),
        (1, 2),
        (1, 3),
        (1, 5),
        (2, 4),
        (3, 4),
        (3, 5),
    ];
    let (chi, df) = chi_square_missing_edges(&dense, 100_000);
    assert_eq!(df, 4);
    assert!(chi < 18.467, "chi-square {chi}");
}

fn matching_enumeration(state: &MatchingState<'_>, v: u32) -> Ratio<i64> {
    let alive = state.alive_count();
    let mut total = 0i64;
    for idx in 0..alive {
        let mut next = state.clone();
        next.match_alive(idx);
        total += next.degree(v) as i64 - state.degree(v) as i64;
    }
    r(total, alive as i64)
}

fn matching_states<'g>(graph: &'g SimpleGraph, seed: u64, steps: u64) -> MatchingState<'g> {
    let mut s = MatchingState::new(graph, seed);
    for _ in 0..steps {
        if s.step_random().is_none() {
            break;
        }
    }
    s
}

#[test]
fn matching_drift_equals_enumeration() {
    for g in [gen_circulant(4, 2).unwrap(), gen_circulant(4, 3).unwrap()] {
        let s = MatchingState::new(g.graph(), 0);
        for v in 0..4 {
            assert_eq!(s.exact_drift_ratio(v).unwrap(), matching_enumeration(&s, v));
        }
    }
    let mut rng = rng_from_seed(3);
    let mut checked = 0;
    for trial in 0..100u64 {
        let g = gen_pairing(20, 3, trial).unwrap();
        let steps = uniform_below(&mut rng, 6);
        let s = matching_states(g.graph(), trial, steps);
        if s.is_halted() {
            continue;
        }
        for v in 0..20 {
            assert_eq!(s.exact_drift_ratio(v).unwrap(), matching_enumeration(&s, v));
        }
        checked += 1;
    }
    assert!(checked >= 90);
}

#[test]
fn matching_edge_classes_match_enumeration() {
    let g = gen_pairing(30, 4, 8).unwrap();
    let s = matching_states(g.graph(), 2, 3);
    for v in 0..30 {
        let mut classes = [0u64; 3];
        for idx in 0..s.alive_count() {
            let mut next = s.clone();
            next.match_alive(idx);
            classes[(s.degree(v) - next.degree(v)) as usize] += 1;
        }
        assert_eq!(s.edge_classes(v), (classes[0], classes[1], classes[2]));
    }
}

#[test]
fn alive_edge_selection_is_uniform() {
    let g = gen_pairing(20, 3, 1).unwrap();
    let frozen = matching_states(g.graph(), 5, 2);
    let alive: Vec<(u32, u32)> = frozen.alive_edges().collect();
    let e = alive.len() as f64;
    let samples = 100_000u64;
    let mut counts = vec![0u64; alive.len()];
    for i in 0..samples {
        // same frozen state, fresh selection randomness
        let mut s = MatchingState::new(g.graph(), derive_seed(77, i));
        for &(a, b) in frozen.matching() {
            let idx = s.alive_edges().position(|x| x == (a, b)).unwrap();
            s.match_alive(idx);
        }
        let chosen = s.step_random().unwrap();
        counts[alive.iter().position(|&x| x == chosen).unwrap()] += 1;
    }
    let p = 1.0 / e;
    let sd = (samples as f64 * p * (1.0 - p)).sqrt();
    for &c in &counts {
        assert!((c as f64 - samples as f64 * p).abs() <= 5.0 * sd);
    }
}

#[test]
fn step_random_selection_is_uniform() {
    let g = gen_circulant(12, 3).unwrap();
    let mut counts = std::collections::HashMap::new();
    let samples = 100_000u64;
    for seed in 0..samples {
        let mut s = MatchingState::new(g.graph(), seed);
        let e = s.step_random().unwrap();
        *counts.entry(e).or_insert(0u64) += 1;
    }
    let e = g.graph().edge_count() as f64;
    assert_eq!(counts.len(), e as usize);
    let p = 1.0 / e;
    let sd = (samples as f64 * p * (1.0 - p)).sqrt();
    for &c in counts.values() {
        assert!((c as f64 - samples as f64 * p).abs() <= 5.0 * sd);
    }
}

#[test]
fn variance_bound_dominates_resampled_variance() {
    let g = gen_pairing(50, 6, 21).unwrap();
    let s = matching_states(g.graph(), 9, 4);
    let (n, d) = (50.0, 6.0);
    let k_const = 2.0;
    let eps_scale = k_const * (d * f64::ln(n)).sqrt();
    let eps = |step: f64| eps_scale / (1.0 - 2.0 * step / n).powi(4);
    let i = s.step() as f64;
    let shift = -2.0 * d / n + (eps(i + 1.0) - eps(i));
    let mut rng = rng_from_seed(4);
    for v in 0..50 {
        let bound = s.variance_step(v, shift).bound;
        let draws: Vec<f64> = (0..10_000)
            .map(|_| {
                let mut next = s.clone();
                next.match_alive(uniform_below(&mut rng, s.alive_count() as u64) as usize);
                (next.degree(v) as f64 - s.degree(v) as f64) - shift
            })
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        assert!(var <= bound, "v={v}: {var} > {bound}");
    }
}
