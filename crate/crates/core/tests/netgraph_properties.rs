use blockzoo::netgraph::io::{format_graph, parse_graph};
use blockzoo::netgraph::{
    build_learning_graph, cluster_non_adjacent, min_cluster_trials, reachable_set, validate_clustering, ClusterMode,
    Clustering, DirectedGraph,
};
use blockzoo::rng::{stream, Purpose};
use proptest::prelude::*;

fn graph_strategy(max_n: usize, self_loops: bool) -> impl Strategy<Value = DirectedGraph> {
    (1..=max_n).prop_flat_map(move |n| {
        prop::collection::vec((0..n, 0..n), 0..=(n * n)).prop_map(move |edges| {
            DirectedGraph::from_edges(n, self_loops, &edges).unwrap()
        })
    })
}

fn pair_strategy(max_n: usize) -> impl Strategy<Value = (DirectedGraph, DirectedGraph)> {
    (1..=max_n).prop_flat_map(|n| {
        let edges = || prop::collection::vec((0..n, 0..n), 0..=(2 * n));
        (edges(), edges()).prop_map(move |(c, s)| {
            (
                DirectedGraph::from_undirected_edges(n, true, &c).unwrap(),
                DirectedGraph::from_edges(n, true, &s).unwrap(),
            )
        })
    })
}

/// Smallest number of independent sets covering the symmetrized graph.
fn brute_force_min_clusters(g: &DirectedGraph) -> usize {
    let n = g.n_vertices();
    let adj = |a: usize, b: usize| a != b && g.adjacent(a, b);
    for k in 1..=n {
        let mut colors = vec![0usize; n];
        loop {
            let ok = (0..n).all(|a| (a + 1..n).all(|b| colors[a] != colors[b] || !adj(a, b)));
            if ok {
                return k;
            }
            let mut i = 0;
            while i < n {
                colors[i] += 1;
                if colors[i] < k {
                    break;
                }
                colors[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
        }
    }
    n
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn greedy_clusterings_are_valid(g in graph_strategy(12, true), seed in any::<u64>()) {
        let mut rng = stream(seed, Purpose::Clustering, 0, 0);
        for mode in [ClusterMode::Random, ClusterMode::LowestIndex] {
            let c = cluster_non_adjacent(&g, &mut rng, mode);
            prop_assert!(validate_clustering(&g, &c).is_valid());
        }
        let best = min_cluster_trials(&g, 10, &mut rng);
        prop_assert!(validate_clustering(&g, &best).is_valid());
        let max_deg = (0..g.n_vertices()).map(|v| g.symmetric_neighbors(v).len()).max().unwrap_or(1);
        prop_assert!(best.len() <= max_deg.max(1));
    }

    #[test]
    fn trials_never_beat_the_exact_minimum(g in graph_strategy(6, false), seed in any::<u64>()) {
        let mut rng = stream(seed, Purpose::Clustering, 0, 0);
        let best = min_cluster_trials(&g, 20, &mut rng);
        prop_assert!(best.len() >= brute_force_min_clusters(&g));
    }

    #[test]
    fn learning_graph_contains_cost_graph((cost, sensing) in pair_strategy(9)) {
        let learning = build_learning_graph(&cost, &sensing).unwrap();
        for (a, b) in cost.edges() {
            prop_assert!(learning.has_edge(a, b) || learning.has_edge(b, a));
        }
        // neighborhoods follow the union over reach sets
        for i in 0..cost.n_vertices() {
            let reach = reachable_set(&sensing, i).unwrap();
            for &j in &reach.members {
                for k in cost.symmetric_neighbors(j) {
                    prop_assert!(learning.adjacent(i, k) || i == k);
                }
            }
        }
    }

    #[test]
    fn format_parse_round_trip(g in graph_strategy(8, true)) {
        let text = format_graph(&g);
        let back = parse_graph(&text, "mem").unwrap();
        prop_assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
    }
}

#[test]
fn strongly_connected_sensing_gives_complete_learning_graphs() {
    for n in 3..=8 {
        for seed in 0..20u64 {
            let mut rng = stream(seed, Purpose::Diagnostics, n as u64, 0);
            // a directed cycle plus random chords is strongly connected
            let mut s = DirectedGraph::directed_cycle(n, true).unwrap();
            for _ in 0..n {
                use rand::Rng;
                let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
                s.add_edge(a, b).unwrap();
            }
            assert!(s.is_strongly_connected());
            let cost = DirectedGraph::undirected_chain(n, true).unwrap();
            let l = build_learning_graph(&cost, &s).unwrap();
            for a in 0..n {
                for b in 0..n {
                    assert!(l.has_edge(a, b), "n={n} seed={seed} missing ({a},{b})");
                }
            }
        }
    }
}

#[test]
fn chain_named_clustering_is_reachable() {
    let g = DirectedGraph::undirected_chain(4, true).unwrap();
    let target = Clustering::new(vec![vec![0, 2], vec![1, 3]]).canonical();
    let hit = (0..100u64).any(|seed| {
        let mut rng = stream(seed, Purpose::Clustering, 0, 0);
        cluster_non_adjacent(&g, &mut rng, ClusterMode::Random).canonical() == target
    });
    assert!(hit);
}
