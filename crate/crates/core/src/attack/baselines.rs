use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{EdgeAddition, EdgeRemoval, FeatureFlip, PerturbationSet};
use crate::error::Result;
use crate::graph::{Graph, Partition};

fn key(i: usize, j: usize) -> (usize, usize) {
    (i.min(j), i.max(j))
}

struct EdgeState {
    removed: HashSet<(usize, usize)>,
    added: HashSet<(usize, usize)>,
}

impl EdgeState {
    /// Additions only target pairs absent from the original graph, so a
    /// removed edge is never put back.
    fn addable(&self, g: &Graph, i: usize, j: usize) -> bool {
        i != j && !g.has_edge(i, j) && !self.added.contains(&key(i, j))
    }
}

/// Random edge removals or additions touching `worker`'s nodes (a fair coin
/// per unit of budget) plus random sign flips of its nodes' features.
pub fn baseline_random(
    g: &Graph,
    part: &Partition,
    worker: usize,
    edge_budget: usize,
    feature_budget: usize,
    seed: u64,
) -> Result<PerturbationSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let share = part.nodes_of(worker);
    let mut set = PerturbationSet {
        config: json!({ "method": "random", "worker": worker, "edge_budget": edge_budget,
                        "feature_budget": feature_budget, "seed": seed }),
        ..Default::default()
    };
    if share.is_empty() {
        return Ok(set);
    }
    let owned: Vec<(usize, usize)> = g
        .edges()
        .into_iter()
        .filter(|&(i, j)| part.assignment()[i] == worker || part.assignment()[j] == worker)
        .collect();
    let mut st = EdgeState {
        removed: HashSet::new(),
        added: HashSet::new(),
    };
    let n = g.num_nodes();
    for _ in 0..edge_budget {
        if rng.random_bool(0.5) {
            let live: Vec<_> = owned.iter().copied().filter(|e| !st.removed.contains(e)).collect();
            if let Some(&(i, j)) = live.choose(&mut rng) {
                st.removed.insert((i, j));
                set.edges_removed.push(EdgeRemoval {
                    i,
                    j,
                    score: 0.0,
                    iter: 0,
                    penalty: 0.0,
                });
            }
        } else if n > 1 {
            // rejection sampling; dense shares may exhaust the attempts
            for _ in 0..64 {
                let u = *share.choose(&mut rng).expect("nonempty share");
                let v = rng.random_range(0..n);
                if st.addable(g, u, v) {
                    let (i, j) = key(u, v);
                    st.added.insert((i, j));
                    set.edges_added.push(EdgeAddition { i, j, iter: 0 });
                    break;
                }
            }
        }
    }
    let dim = g.feature_dim();
    let mut used = HashSet::new();
    let cap = (share.len() * dim).min(feature_budget);
    while used.len() < cap {
        let u = *share.choose(&mut rng).expect("nonempty share");
        let d = rng.random_range(0..dim);
        if used.insert((u, d)) {
            let old = g.features()[[u, d]];
            set.features_flipped.push(FeatureFlip {
                node: u,
                dim: d,
                old,
                new: -old,
                sign: 0,
                iter: 0,
                penalty: 0.0,
            });
        }
    }
    Ok(set)
}

/// Per unit of budget, a fair coin chooses between removing a random
/// same-label edge and adding a random different-label non-edge, both
/// touching `worker`'s nodes. A unit with no eligible candidate is skipped.
pub fn baseline_dice(g: &Graph, part: &Partition, worker: usize, edge_budget: usize, seed: u64) -> Result<PerturbationSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = g.labels();
    let mine = |i: usize| part.assignment()[i] == worker;
    let mut set = PerturbationSet {
        config: json!({ "method": "dice", "worker": worker, "edge_budget": edge_budget, "seed": seed }),
        ..Default::default()
    };
    let mut same: Vec<(usize, usize)> = g
        .edges()
        .into_iter()
        .filter(|&(i, j)| (mine(i) || mine(j)) && labels[i] == labels[j])
        .collect();
    let n = g.num_nodes();
    let mut cross: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if (mine(i) || mine(j)) && labels[i] != labels[j] && !g.has_edge(i, j) {
                cross.push((i, j));
            }
        }
    }
    for _ in 0..edge_budget {
        let pool = if rng.random_bool(0.5) { &mut same } else { &mut cross };
        if pool.is_empty() {
            continue;
        }
        let idx = rng.random_range(0..pool.len());
        let (i, j) = pool.swap_remove(idx);
        if g.has_edge(i, j) {
            set.edges_removed.push(EdgeRemoval {
                i,
                j,
                score: 0.0,
                iter: 0,
                penalty: 0.0,
            });
        } else {
            set.edges_added.push(EdgeAddition { i, j, iter: 0 });
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{partition_nodes, PartitionStrategy, Splits};
    use ndarray::Array2;

    fn labeled(n: usize, edges: &[(usize, usize)], labels: Vec<usize>) -> Graph {
        Graph::build(edges, Array2::ones((n, 2)), labels, Splits::default()).unwrap()
    }

    #[test]
    fn dice_single_label_only_removes() {
        let g = labeled(5, &[(0, 1), (1, 2), (2, 3), (3, 4)], vec![0; 5]);
        let p = partition_nodes(&g, 1, PartitionStrategy::RoundRobin).unwrap();
        let s = baseline_dice(&g, &p, 0, 3, 9).unwrap();
        assert!(s.edges_added.is_empty());
        assert!(s.edge_count() <= 3);
    }

    #[test]
    fn dice_complete_bipartite_is_empty() {
        let g = labeled(4, &[(0, 2), (0, 3), (1, 2), (1, 3)], vec![0, 0, 1, 1]);
        let p = partition_nodes(&g, 1, PartitionStrategy::RoundRobin).unwrap();
        for seed in 0..10 {
            assert!(baseline_dice(&g, &p, 0, 5, seed).unwrap().is_empty());
        }
    }

    #[test]
    fn random_zero_budget() {
        let g = labeled(4, &[(0, 1)], vec![0; 4]);
        let p = partition_nodes(&g, 2, PartitionStrategy::RoundRobin).unwrap();
        assert!(baseline_random(&g, &p, 0, 0, 0, 1).unwrap().is_empty());
    }
}
