use std::collections::{BTreeSet, HashMap};

use ndarray::Array2;

use super::Graph;
use crate::error::Result;

/// A node-induced view of the graph around one or more centers.
#[derive(Debug, Clone, PartialEq)]
pub struct Subgraph {
    /// Global ids; centers first, then the remaining nodes ascending.
    pub node_ids: Vec<usize>,
    /// Induced edges in local ids, `(a, b)` with `a < b`.
    pub local_edges: Vec<(usize, usize)>,
    /// Feature rows of `node_ids`, in the same order.
    pub features: Array2<f64>,
    global_to_local: HashMap<usize, usize>,
}

impl Subgraph {
    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    pub fn local(&self, global: usize) -> Option<usize> {
        self.global_to_local.get(&global).copied()
    }

    pub fn global(&self, local: usize) -> usize {
        self.node_ids[local]
    }

    /// Induced edges in global ids, `(i, j)` with `i < j`, sorted.
    pub fn global_edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = self
            .local_edges
            .iter()
            .map(|&(a, b)| {
                let (i, j) = (self.node_ids[a], self.node_ids[b]);
                (i.min(j), i.max(j))
            })
            .collect();
        e.sort_unstable();
        e
    }

    pub fn contains_edge(&self, i: usize, j: usize) -> bool {
        match (self.local(i), self.local(j)) {
            (Some(a), Some(b)) => {
                let key = (a.min(b), a.max(b));
                self.local_edges.binary_search(&key).is_ok()
            }
            _ => false,
        }
    }
}

/// Target plus its current neighbors, with the induced adjacency.
pub fn sample_1hop(g: &Graph, target: usize) -> Result<Subgraph> {
    sample_union(g, &[target])
}

/// Union of the 1-hop subgraphs of `targets`: each target's node set
/// contributes its own induced edges.
pub fn sample_union(g: &Graph, targets: &[usize]) -> Result<Subgraph> {
    for &t in targets {
        g.check_node(t)?;
    }
    let mut node_ids: Vec<usize> = Vec::new();
    let mut seen = BTreeSet::new();
    for &t in targets {
        if seen.insert(t) {
            node_ids.push(t);
        }
    }
    let mut rest = BTreeSet::new();
    let mut edges = BTreeSet::new();
    for &t in targets {
        let hood: Vec<usize> = std::iter::once(t).chain(g.neighbors(t)).collect();
        for &u in &hood[1..] {
            if !seen.contains(&u) {
                rest.insert(u);
            }
        }
        for (k, &u) in hood.iter().enumerate() {
            for &v in &hood[k + 1..] {
                if g.has_edge(u, v) {
                    edges.insert((u.min(v), u.max(v)));
                }
            }
        }
    }
    node_ids.extend(rest);
    let global_to_local: HashMap<usize, usize> =
        node_ids.iter().enumerate().map(|(l, &gid)| (gid, l)).collect();
    let mut local_edges: Vec<(usize, usize)> = edges
        .into_iter()
        .map(|(i, j)| {
            let (a, b) = (global_to_local[&i], global_to_local[&j]);
            (a.min(b), a.max(b))
        })
        .collect();
    local_edges.sort_unstable();

    let dim = g.feature_dim();
    let mut features = Array2::zeros((node_ids.len(), dim));
    for (l, &gid) in node_ids.iter().enumerate() {
        features.row_mut(l).assign(&g.features().row(gid));
    }
    Ok(Subgraph {
        node_ids,
        local_edges,
        features,
        global_to_local,
    })
}
