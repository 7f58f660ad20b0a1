use std::collections::BTreeSet;

use distpoison_core::graph::{
    generate_sbm, normalize_adjacency, partition_nodes, sample_1hop, Graph, PartitionStrategy, SbmParams, Splits,
};
use ndarray::Array2;
use proptest::prelude::*;

/// Node count plus a raw edge list with duplicates, both orientations and loops.
fn graph_input(max_n: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (1..=max_n).prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..n), 0..3 * n)))
}

fn build(n: usize, edges: &[(usize, usize)]) -> Graph {
    Graph::build(edges, Array2::zeros((n, 2)), vec![0; n], Splits::default()).unwrap()
}

/// Dense Â from the definition, independent of the CSR code.
fn dense_normalized(n: usize, edges: &[(usize, usize)]) -> Array2<f64> {
    let mut a = Array2::<f64>::eye(n);
    for &(i, j) in edges {
        if i != j {
            a[[i, j]] = 1.0;
            a[[j, i]] = 1.0;
        }
    }
    let d: Vec<f64> = a.rows().into_iter().map(|r| r.sum()).collect();
    Array2::from_shape_fn((n, n), |(i, j)| a[[i, j]] / (d[i] * d[j]).sqrt())
}

fn neighbor_scan(g: &Graph, t: usize) -> BTreeSet<usize> {
    (0..g.num_nodes()).filter(|&u| u == t || g.has_edge(t, u)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn normalized_matches_dense_oracle((n, edges) in graph_input(32)) {
        let g = build(n, &edges);
        let adj = normalize_adjacency(&g);
        let dense = dense_normalized(n, &edges);
        for i in 0..n {
            prop_assert!(adj.get(i, i) > 0.0);
            for j in 0..n {
                prop_assert_eq!(adj.get(i, j) > 0.0, i == j || g.has_edge(i, j));
                prop_assert!((adj.get(i, j) - dense[[i, j]]).abs() < 1e-15);
                prop_assert_eq!(adj.get(i, j), adj.get(j, i));
            }
        }
    }

    #[test]
    fn build_symmetrizes_and_strips_loops((n, edges) in graph_input(24)) {
        let g = build(n, &edges);
        let expected: BTreeSet<(usize, usize)> =
            edges.iter().filter(|(i, j)| i != j).map(|&(i, j)| (i.min(j), i.max(j))).collect();
        let got: BTreeSet<(usize, usize)> = g.edges().into_iter().collect();
        prop_assert_eq!(&got, &expected);
        prop_assert_eq!(g.num_edges(), expected.len());
        prop_assert_eq!(g.dropped_self_loops(), edges.iter().filter(|(i, j)| i == j).count());
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(g.has_edge(i, j), g.has_edge(j, i));
            }
        }
    }

    #[test]
    fn sample_1hop_is_closed_neighborhood((n, edges) in graph_input(24)) {
        let g = build(n, &edges);
        for t in 0..n {
            let sub = sample_1hop(&g, t).unwrap();
            prop_assert_eq!(sub.node_ids[0], t);
            let ids: BTreeSet<usize> = sub.node_ids.iter().copied().collect();
            prop_assert_eq!(ids.len(), sub.node_ids.len());
            prop_assert_eq!(&ids, &neighbor_scan(&g, t));
            // induced restriction
            let got: BTreeSet<(usize, usize)> = sub.global_edges().into_iter().map(|(i, j)| (i.min(j), i.max(j))).collect();
            let want: BTreeSet<(usize, usize)> = g
                .edges()
                .into_iter()
                .filter(|(i, j)| ids.contains(i) && ids.contains(j))
                .collect();
            prop_assert_eq!(got, want);
        }
    }

    #[test]
    fn sampling_reads_the_perturbed_graph((n, edges) in graph_input(24), pick in any::<prop::sample::Index>()) {
        let mut g = build(n, &edges);
        let all = g.edges();
        prop_assume!(!all.is_empty());
        let (i, j) = all[pick.index(all.len())];
        g.remove_edge(i, j).unwrap();
        let sub = sample_1hop(&g, i).unwrap();
        prop_assert!(!sub.node_ids.contains(&j));
        prop_assert_eq!(sub.node_ids.iter().copied().collect::<BTreeSet<_>>(), neighbor_scan(&g, i));
        g.compact();
        prop_assert_eq!(sample_1hop(&g, j).unwrap().node_ids.contains(&i), false);
    }

    #[test]
    fn partition_is_total(n in 1usize..200, workers in 1usize..9, seed in any::<u64>()) {
        let g = build(n, &[]);
        for strategy in [PartitionStrategy::RoundRobin, PartitionStrategy::Hash, PartitionStrategy::Random { seed }] {
            let p = partition_nodes(&g, workers, strategy).unwrap();
            prop_assert_eq!(p.len(), n);
            prop_assert!(p.assignment().iter().all(|&w| w < workers));
            let mut seen = vec![0usize; n];
            for w in 0..workers {
                for u in p.nodes_of(w) {
                    seen[u] += 1;
                }
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
            if strategy == PartitionStrategy::RoundRobin {
                prop_assert!((0..n).all(|i| p.worker_of(i).unwrap() == i % workers));
            }
        }
    }

    #[test]
    fn sbm_is_deterministic_and_labelled(seed in any::<u64>()) {
        let params = SbmParams { seed, block_sizes: vec![5, 7, 6], feature_dim: 4, ..SbmParams::default() };
        let a = generate_sbm(&params).unwrap();
        let b = generate_sbm(&params).unwrap();
        prop_assert_eq!(a.edges(), b.edges());
        prop_assert_eq!(a.features(), b.features());
        let labels: Vec<usize> = [(0, 5), (1, 7), (2, 6)].iter().flat_map(|&(l, k)| vec![l; k]).collect();
        prop_assert_eq!(a.labels(), &labels[..]);
    }
}

#[test]
fn path_has_three_cross_edges() {
    let g = build(4, &[(0, 1), (1, 2), (2, 3)]);
    let p = partition_nodes(&g, 2, PartitionStrategy::RoundRobin).unwrap();
    assert_eq!(p.cross_edges(&g), 3);
}

#[test]
fn two_node_edge_halves() {
    let adj = normalize_adjacency(&build(2, &[(0, 1)]));
    assert_eq!(adj.to_dense(), ndarray::array![[0.5, 0.5], [0.5, 0.5]]);
}
