use std::collections::BTreeMap;

use proptest::prelude::*;
use queuelay_core::bounds::{
    arboricity_brute_force, degeneracy, mad, mad_brute_force, mad_flow, nash_williams_arboricity,
    queue_edge_bound_check, Rational,
};
use queuelay_core::constructors::{
    construction_star_partition, degeneracy_star_partition, star_queue_layout, stars_to_queues,
};
use queuelay_core::io::{emit_graph, layout_from_json, layout_to_json, parse_graph, to_text};
use queuelay_core::ktree::{mary_ktree, random_ktree};
use queuelay_core::layout::{crosses, layout_locality, max_rainbow, nests, validate_layout};
use queuelay_core::solver::{exact_lqn, exact_qn, min_queues_for_order, SolveOptions};
use queuelay_core::{Edge, Graph, LinearOrder, QueueLayout, Validation};

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        prop::collection::vec(any::<bool>(), pairs).prop_map(move |bits| {
            let mut edges = Vec::new();
            let mut i = 0;
            for u in 0..n as u32 {
                for v in u + 1..n as u32 {
                    if bits[i] {
                        edges.push((u, v));
                    }
                    i += 1;
                }
            }
            Graph::new(n, edges).unwrap()
        })
    })
}

fn graph_and_order(max_n: usize) -> impl Strategy<Value = (Graph, LinearOrder)> {
    graph_strategy(max_n).prop_flat_map(|g| {
        let n = g.n();
        (Just(g), Just((0..n as u32).collect::<Vec<_>>()).prop_shuffle())
            .prop_map(|(g, perm)| (g, LinearOrder::new(perm).unwrap()))
    })
}

fn order_strategy(n: usize) -> impl Strategy<Value = LinearOrder> {
    Just((0..n as u32).collect::<Vec<_>>())
        .prop_shuffle()
        .prop_map(|p| LinearOrder::new(p).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn nests_and_crosses_partition_disjoint_pairs((g, ord) in graph_and_order(8)) {
        let rev = ord.reversed();
        for (i, &e) in g.edges().iter().enumerate() {
            for &f in &g.edges()[i + 1..] {
                let n = nests(e, f, &ord).unwrap();
                let c = crosses(e, f, &ord).unwrap();
                prop_assert!(!(n && c));
                let (a, b) = (ord.interval(e), ord.interval(f));
                let overlap = a.0.max(b.0) < a.1.min(b.1);
                if e.shares_endpoint(f) {
                    prop_assert!(!n && !c);
                } else if overlap {
                    prop_assert!(n != c);
                } else {
                    // separated edges neither nest nor cross
                    prop_assert!(!n && !c);
                }
                prop_assert_eq!(n, nests(f, e, &ord).unwrap());
                prop_assert_eq!(n, nests(e, f, &rev).unwrap());
            }
        }
    }

    #[test]
    fn greedy_layering_matches_rainbow((g, ord) in graph_and_order(9)) {
        let r = min_queues_for_order(&g, &ord);
        let (size, witness) = max_rainbow(&g, &ord);
        prop_assert_eq!(r.value as usize, size);
        prop_assert_eq!(validate_layout(&g, &r.witness, None).unwrap(), Validation::Ok);
        if size >= 2 {
            prop_assert!(witness.verify(&ord, None));
        }
        prop_assert!(queue_edge_bound_check(&g, &r.witness).unwrap().is_empty());
    }

    #[test]
    fn validity_survives_restriction((g, ord) in graph_and_order(9), keep in prop::collection::vec(any::<bool>(), 36)) {
        let l = min_queues_for_order(&g, &ord).witness;
        let mut i = 0;
        let sub = g.filter_edges(|_| { i += 1; keep[(i - 1) % keep.len()] });
        let restricted = l.restrict(&sub);
        prop_assert_eq!(validate_layout(&sub, &restricted, Some(layout_locality(&l))).unwrap(), Validation::Ok);
    }

    #[test]
    fn canonical_form_is_idempotent((g, ord) in graph_and_order(8)) {
        let l = min_queues_for_order(&g, &ord).witness;
        let shifted = QueueLayout::new(ord.clone(), l.assign.iter().map(|(&e, &q)| (e, 7 - q)).collect());
        let c = shifted.canonicalize();
        prop_assert_eq!(c.canonicalize(), c.clone());
        prop_assert_eq!(c, l.canonicalize());
    }

    #[test]
    fn expansion_edge_count(k in 1usize..5, extra in 0usize..40, seed in any::<u64>()) {
        let seq = random_ktree(k, k + 1 + extra, seed).unwrap();
        let g = seq.expand().unwrap();
        prop_assert_eq!(g.edge_count(), k * (k + 1) / 2 + k * seq.steps.len());
        prop_assert_eq!(random_ktree(k, k + 1 + extra, seed).unwrap(), seq);
    }

    #[test]
    fn star_layout_is_local_on_every_spine(k in 1usize..5, extra in 0usize..15, seed in any::<u64>(), shuffle in any::<u64>()) {
        let seq = random_ktree(k, k + 1 + extra, seed).unwrap();
        let g = seq.expand().unwrap();
        let mut perm: Vec<u32> = (0..g.n() as u32).collect();
        // deterministic shuffle driven by the proptest input
        let mut x = shuffle | 1;
        for i in (1..perm.len()).rev() {
            x ^= x << 13; x ^= x >> 7; x ^= x << 17;
            perm.swap(i, (x % (i as u64 + 1)) as usize);
        }
        let ord = LinearOrder::new(perm).unwrap();
        let l = star_queue_layout(&seq, Some(&ord)).unwrap();
        prop_assert_eq!(validate_layout(&g, &l, Some(k as u32 + 1)).unwrap(), Validation::Ok);
        prop_assert!(queue_edge_bound_check(&g, &l).unwrap().is_empty());
        let sp = construction_star_partition(&seq).unwrap();
        let inc = sp.incidence(g.n());
        let queues = l.incident_queues();
        for v in 0..g.n() {
            prop_assert_eq!(inc[v], queues[v].len());
        }
    }

    #[test]
    fn degeneracy_partition_composition((g, ord) in graph_and_order(12)) {
        let sp = degeneracy_star_partition(&g);
        let l = stars_to_queues(&g, &sp, &ord).unwrap();
        prop_assert_eq!(validate_layout(&g, &l, None).unwrap(), Validation::Ok);
        let d = degeneracy(&g);
        prop_assert!(layout_locality(&l) <= d + 1);
        let m = mad(&g).unwrap();
        prop_assert!((d as i64) < m.floor().to_integer() + 1);
        // the densest subgraph has minimum degree at least mad/2
        prop_assert!(Rational::from_integer(d as i64) >= m / 2);
    }

    #[test]
    fn density_oracles_agree(g in graph_strategy(12)) {
        prop_assert_eq!(mad_flow(&g).unwrap(), mad_brute_force(&g).unwrap());
        if g.n() >= 2 {
            let arb = nash_williams_arboricity(&g).unwrap();
            prop_assert_eq!(arb, arboricity_brute_force(&g));
            if g.edge_count() > 0 {
                let half = mad(&g).unwrap() / 2;
                prop_assert!(Rational::from_integer(arb as i64) > half);
                // ceil(|E|/(|V|-1)) <= ceil((mad + 1) / 2); see the K5 minus an edge test
                prop_assert!(Rational::from_integer(arb as i64) <= (half + Rational::new(1, 2)).ceil());
            }
        }
    }

    #[test]
    fn mad_is_monotone(g in graph_strategy(10), keep in prop::collection::vec(any::<bool>(), 45)) {
        let mut i = 0;
        let sub = g.filter_edges(|_| { i += 1; keep[i - 1] });
        prop_assert!(mad(&sub).unwrap() <= mad(&g).unwrap());
    }

    #[test]
    fn solvers_respect_density_sandwich(g in graph_strategy(6)) {
        let opts = SolveOptions::default();
        let lqn = exact_lqn(&g, &opts).unwrap();
        let qn = exact_qn(&g, &opts).unwrap();
        prop_assert!(lqn.exact && qn.exact);
        prop_assert!(lqn.value <= qn.value);
        prop_assert_eq!(validate_layout(&g, &lqn.witness, Some(lqn.value)).unwrap(), Validation::Ok);
        prop_assert_eq!(layout_locality(&lqn.witness), lqn.value);
        prop_assert_eq!(validate_layout(&g, &qn.witness, None).unwrap(), Validation::Ok);
        prop_assert_eq!(qn.witness.queue_count() as u32, qn.value);
        let m = mad(&g).unwrap();
        if g.edge_count() > 0 {
            prop_assert!(Rational::from_integer(lqn.value as i64) >= (m / 4).ceil());
            prop_assert!(Rational::from_integer(lqn.value as i64) <= (m / 2 + 2).floor());
        }
    }

    #[test]
    fn graph_text_round_trips(g in graph_strategy(15)) {
        let text = emit_graph(&g);
        prop_assert_eq!(parse_graph(&text).unwrap(), g);
    }

    #[test]
    fn layout_json_round_trips((g, ord) in graph_and_order(14)) {
        let l = min_queues_for_order(&g, &ord).witness;
        let text = to_text(&layout_to_json(&l));
        let back = layout_from_json(&text).unwrap();
        prop_assert_eq!(to_text(&layout_to_json(&back)), text);
        prop_assert_eq!(back, l);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn solver_is_deterministic(g in graph_strategy(7)) {
        let opts = SolveOptions::default();
        let a = exact_lqn(&g, &opts).unwrap();
        let b = exact_lqn(&g, &opts).unwrap();
        prop_assert_eq!((a.value, a.witness, a.stats.nodes), (b.value, b.witness, b.stats.nodes));
    }

    #[test]
    fn random_spines_give_valid_star_layouts(ord in order_strategy(31)) {
        let seq = random_ktree(3, 31, 5).unwrap();
        let l = star_queue_layout(&seq, Some(&ord)).unwrap();
        let g = seq.expand().unwrap();
        prop_assert!(validate_layout(&g, &l, Some(4)).unwrap().is_ok());
    }
}

#[test]
fn mary_children_follow_depths() {
    for (m, t) in [(1, 1), (2, 3), (3, 2)] {
        let (seq, depths) = mary_ktree(m, t).unwrap();
        let g = seq.expand().unwrap();
        let adj = g.adjacency();
        for (e, d) in depths.iter() {
            // later common neighbours joined by depth d+1 edges
            let kids = adj[e.lo() as usize]
                .iter()
                .filter(|&&x| {
                    x > e.hi()
                        && g.has_edge(x, e.hi())
                        && depths.get(Edge::new(x, e.lo())) == Some(d + 1)
                        && depths.get(Edge::new(x, e.hi())) == Some(d + 1)
                })
                .count();
            let expected = if d < t { m } else { 0 };
            assert_eq!(kids, expected, "edge {e} at depth {d}");
        }
        let hist = depths.histogram();
        for i in 1..hist.len() {
            assert_eq!(hist[i], 2 * m as u64 * hist[i - 1]);
        }
    }
}

#[test]
fn arboricity_can_exceed_half_mad_plus_one() {
    let g = Graph::complete(5).filter_edges(|e| e != Edge::new(2, 3));
    let m = mad(&g).unwrap();
    assert_eq!(m, Rational::new(18, 5));
    let arb = nash_williams_arboricity(&g).unwrap();
    assert_eq!(arb, 3);
    assert!(Rational::from_integer(arb as i64) > m / 2 + 1);
}

#[test]
fn bound_check_counts_queue_vertices() {
    let g = Graph::new(2, [(0, 1)]).unwrap();
    let l = QueueLayout::new(LinearOrder::identity(2), BTreeMap::from([(Edge::new(0, 1), 0)]));
    assert!(queue_edge_bound_check(&g, &l).unwrap().is_empty());
}
