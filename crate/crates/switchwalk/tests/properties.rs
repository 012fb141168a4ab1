//! Cross-module invariants checked against independent brute-force
//! oracles on randomly generated weighted digraphs.

use proptest::prelude::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

use switchwalk::circuit_synth::{solve_lp, synthesize_circuit, SynthesisError, SynthesisStatus};
use switchwalk::cycle_synth::{detect_negative_cycle, enumerate_cycles};
use switchwalk::digraph::SwitchingDigraph;
use switchwalk::walks::{
    decompose_to_circuits, decompose_to_cycles, extract_contractive_cycle, xi, xi_bar, Walk,
    XiValue,
};

/// Random weighted digraph: up to `max_v` vertices with a random
/// stable/unstable split, vertex weights in (0, 2], edge weights (ln mu)
/// in [-2, 2], self-loops allowed.
fn random_digraph(rng: &mut ChaCha8Rng, max_v: usize, max_e: usize) -> SwitchingDigraph {
    let n = rng.random_range(2..=max_v);
    let mut stable = BTreeMap::new();
    let mut unstable = BTreeMap::new();
    for v in 1..=n {
        let w = rng.random_range(0.0..2.0) + 1e-6;
        if rng.random_bool(0.5) {
            stable.insert(v, w);
        } else {
            unstable.insert(v, w);
        }
    }
    let mut pairs: Vec<(usize, usize)> = (1..=n)
        .flat_map(|i| (1..=n).map(move |j| (i, j)))
        .collect();
    pairs.shuffle(rng);
    let count = rng.random_range(0..=max_e.min(pairs.len()));
    let edges: Vec<((usize, usize), f64)> = pairs[..count]
        .iter()
        .map(|&e| (e, rng.random_range(-2.0..2.0)))
        .collect();
    SwitchingDigraph::from_parts(&stable, &unstable, &edges).unwrap()
}

/// Minimum cost over nonempty balanced 0/1 edge subsets (exactly the
/// integral circulations, i.e. unions of edge-disjoint circuits), by
/// exhaustive enumeration. `None` when no balanced nonempty subset
/// exists.
fn min_circulation_cost_brute_force(g: &SwitchingDigraph) -> Option<f64> {
    let edges = g.edges();
    let m = edges.len();
    assert!(m <= 16, "oracle is exponential in the edge count");
    let costs: Vec<f64> = edges
        .iter()
        .map(|&(i, j)| g.edge_cost(i, j).unwrap())
        .collect();
    let vertex_pos: BTreeMap<usize, usize> = g
        .vertices()
        .iter()
        .enumerate()
        .map(|(p, &v)| (v, p))
        .collect();
    let mut best: Option<f64> = None;
    for mask in 1u32..(1 << m) {
        let mut balance = [0i32; 16];
        let mut cost = 0.0;
        let mut bits = mask;
        while bits != 0 {
            let k = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let (i, j) = edges[k];
            balance[vertex_pos[&i]] += 1;
            balance[vertex_pos[&j]] -= 1;
            cost += costs[k];
        }
        if balance[..g.vertex_count()].iter().all(|&b| b == 0)
            && best.map(|b| cost < b).unwrap_or(true)
        {
            best = Some(cost);
        }
    }
    best
}

/// Minimum cost over closed walks of length at most `max_len`, by
/// min-plus matrix powering. `None` when there is no closed walk at all.
fn min_closed_walk_cost_brute_force(g: &SwitchingDigraph, max_len: usize) -> Option<f64> {
    let n = g.vertex_count();
    let pos: BTreeMap<usize, usize> = g
        .vertices()
        .iter()
        .enumerate()
        .map(|(p, &v)| (v, p))
        .collect();
    let inf = f64::INFINITY;
    let mut step = vec![vec![inf; n]; n];
    for &(i, j) in g.edges() {
        let c = g.edge_cost(i, j).unwrap();
        if c < step[pos[&i]][pos[&j]] {
            step[pos[&i]][pos[&j]] = c;
        }
    }
    let mut current = step.clone();
    let mut best = inf;
    for _ in 0..max_len {
        for (v, row) in current.iter().enumerate() {
            best = best.min(row[v]);
        }
        let mut next = vec![vec![inf; n]; n];
        for u in 0..n {
            for v in 0..n {
                if current[u][v] == inf {
                    continue;
                }
                for w in 0..n {
                    let candidate = current[u][v] + step[v][w];
                    if candidate < next[u][w] {
                        next[u][w] = candidate;
                    }
                }
            }
        }
        current = next;
    }
    (best < inf).then_some(best)
}

#[test]
fn lp_optimum_matches_the_circulation_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut contractive_seen = 0;
    for trial in 0..300 {
        let g = random_digraph(&mut rng, 7, 14);
        let oracle = min_circulation_cost_brute_force(&g);
        match solve_lp(&g) {
            Err(SynthesisError::Infeasible) => {
                assert!(oracle.is_none(), "trial {trial}: oracle found {oracle:?}");
            }
            Ok(solution) => {
                let oracle = oracle.expect("feasible LP implies some circulation");
                match solution.status {
                    SynthesisStatus::Contractive => {
                        contractive_seen += 1;
                        assert!(
                            (solution.objective - oracle.min(0.0)).abs() <= 1e-6,
                            "trial {trial}: lp {} vs oracle {}",
                            solution.objective,
                            oracle
                        );
                        // eta is exactly 0/1 and the support is balanced.
                        assert!(solution.eta.iter().all(|&v| v == 0.0 || v == 1.0));
                    }
                    SynthesisStatus::NoneExists => {
                        assert!(
                            oracle >= -1e-6,
                            "trial {trial}: oracle found negative circulation {oracle}"
                        );
                    }
                }
            }
            Err(e) => panic!("trial {trial}: unexpected solver error {e}"),
        }
    }
    assert!(contractive_seen > 30, "generator made too few contractive cases");
}

#[test]
fn detection_agrees_with_enumeration_and_walk_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for trial in 0..400 {
        let g = random_digraph(&mut rng, 8, 16);
        let detected = detect_negative_cycle(&g);
        let enumerated = enumerate_cycles(&g, g.vertex_count().max(1)).unwrap();
        let negative_cycle_exists = enumerated.first().map(|(_, c)| *c < -1e-9).unwrap_or(false);
        assert_eq!(
            detected.is_some(),
            negative_cycle_exists,
            "trial {trial}: detection disagreed with enumeration"
        );
        let walk_min = min_closed_walk_cost_brute_force(&g, 2 * g.edge_count().max(1));
        let contractive_walk_exists = walk_min.map(|c| c < -1e-9).unwrap_or(false);
        assert_eq!(
            negative_cycle_exists, contractive_walk_exists,
            "trial {trial}: closed-walk search disagreed with cycle enumeration"
        );
        if let Some(cycle) = detected {
            assert!(cycle.is_cycle());
            cycle.validate(&g).unwrap();
            assert!(xi_bar(&cycle, &g).unwrap() < 0.0);
        }
    }
}

#[test]
fn extracted_circuits_cover_the_support_cost() {
    let mut rng = ChaCha8Rng::seed_from_u64(555);
    for _ in 0..200 {
        let g = random_digraph(&mut rng, 7, 14);
        let solution = match synthesize_circuit(&g) {
            Ok(s) => s,
            Err(SynthesisError::Infeasible) => continue,
            Err(e) => panic!("unexpected error {e}"),
        };
        if solution.status != SynthesisStatus::Contractive {
            continue;
        }
        // Component costs add up to the LP objective, every component is
        // a circuit over support edges, and each is itself contractive or
        // at least non-positive up to the threshold.
        let total: f64 = solution.components.iter().map(|c| c.cost).sum();
        assert!((total - solution.objective).abs() <= 1e-9);
        let circuit = solution.circuit.as_ref().unwrap();
        assert!(xi_bar(circuit, &g).unwrap() < 0.0);
        let mut support_edges: Vec<(usize, usize)> = Vec::new();
        for component in &solution.components {
            assert!(component.circuit.is_circuit());
            support_edges.extend(component.circuit.edges());
        }
        support_edges.sort_unstable();
        let mut expected = solution.support.clone();
        expected.sort_unstable();
        assert_eq!(support_edges, expected);
    }
}

proptest! {
    /// Closed-walk decompositions conserve the edge multiset and the cost
    /// sum; contractive walks always yield a contractive simple cycle.
    #[test]
    fn decomposition_conserves_cost_and_edges(
        seq in proptest::collection::vec(1usize..=5, 1..30),
        seed in 0u64..1_000,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Complete digraph with self-loops on 5 vertices, random weights.
        let mut stable = BTreeMap::new();
        let mut unstable = BTreeMap::new();
        for v in 1..=5usize {
            let w = rng.random_range(0.0..2.0) + 1e-6;
            if rng.random_bool(0.5) { stable.insert(v, w); } else { unstable.insert(v, w); }
        }
        let edges: Vec<((usize, usize), f64)> = (1..=5usize)
            .flat_map(|i| (1..=5usize).map(move |j| (i, j)))
            .map(|e| (e, rng.random_range(-2.0..2.0)))
            .collect();
        let g = SwitchingDigraph::from_parts(&stable, &unstable, &edges).unwrap();

        let mut vertices = seq;
        vertices.push(vertices[0]);
        let walk = Walk::new(vertices).unwrap();
        let total = xi_bar(&walk, &g).unwrap();
        let tol = 1e-12 * walk.len() as f64;

        let circuits = decompose_to_circuits(&walk).unwrap();
        let mut circuit_cost = 0.0;
        let mut merged: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for c in &circuits {
            prop_assert!(c.is_circuit());
            circuit_cost += xi_bar(c, &g).unwrap();
            for (e, m) in c.edge_multiplicities() {
                *merged.entry(e).or_insert(0) += m;
            }
        }
        prop_assert!((circuit_cost - total).abs() <= tol);
        prop_assert_eq!(merged, walk.edge_multiplicities());

        let mut cycle_cost = 0.0;
        for c in &circuits {
            for cycle in decompose_to_cycles(c).unwrap() {
                prop_assert!(cycle.is_cycle());
                cycle_cost += xi_bar(&cycle, &g).unwrap();
            }
        }
        prop_assert!((cycle_cost - total).abs() <= tol);

        if total < 0.0 {
            let extracted = extract_contractive_cycle(&walk, &g).unwrap();
            prop_assert!(extracted.is_cycle());
            prop_assert!(xi_bar(&extracted, &g).unwrap() < 0.0);
            // The extracted cycle's edges are a sub-multiset of the walk's.
            let walk_edges = walk.edge_multiplicities();
            for (e, m) in extracted.edge_multiplicities() {
                prop_assert!(walk_edges.get(&e).copied().unwrap_or(0) >= m);
            }
        }

        // Sign consistency between the ratio and cost forms.
        if let XiValue::Defined(x) = xi(&walk, &g).unwrap() {
            prop_assert_eq!(total < 0.0, x < 1.0);
        }
    }

    /// Cost additivity under concatenation at a shared base vertex.
    #[test]
    fn concatenation_adds_costs(
        a in proptest::collection::vec(1usize..=4, 1..12),
        b in proptest::collection::vec(1usize..=4, 1..12),
        seed in 0u64..1_000,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stable: BTreeMap<usize, f64> =
            (1..=4).map(|v| (v, rng.random_range(0.0..2.0) + 1e-6)).collect();
        let edges: Vec<((usize, usize), f64)> = (1..=4usize)
            .flat_map(|i| (1..=4usize).map(move |j| (i, j)))
            .map(|e| (e, rng.random_range(-2.0..2.0)))
            .collect();
        let g = SwitchingDigraph::from_parts(&stable, &BTreeMap::new(), &edges).unwrap();

        let mut first = a;
        first.push(first[0]);
        let mut second = vec![first[0]];
        second.extend(b);
        second.push(first[0]);
        let w1 = Walk::new(first).unwrap();
        let w2 = Walk::new(second).unwrap();
        let joined = w1.concat(&w2).unwrap();
        prop_assert!(joined.is_closed());
        let sum = xi_bar(&w1, &g).unwrap() + xi_bar(&w2, &g).unwrap();
        prop_assert!((xi_bar(&joined, &g).unwrap() - sum).abs() <= 1e-12 * joined.len() as f64);
    }

    /// Walks serialize as bare JSON vertex arrays.
    #[test]
    fn walk_serialization_round_trips(seq in proptest::collection::vec(1usize..=9, 1..20)) {
        let walk = Walk::new(seq).unwrap();
        let json = serde_json::to_string(&walk).unwrap();
        prop_assert!(json.starts_with('['));
        let back: Walk = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, walk);
    }
}
