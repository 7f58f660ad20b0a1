//! Undirected graphs in compressed sparse row form, plus the operations the
//! attack and training loops need on them: normalization, partitioning,
//! 1-hop sampling and synthetic generation.

mod io;
mod normalize;
mod partition;
mod sbm;
mod subgraph;

pub use io::{load_edge_list, load_features_csv, load_graph, load_splits, write_edge_list};
pub use normalize::{normalize_adjacency, normalize_weighted, NormalizedAdjacency};
pub use partition::{partition_nodes, Partition, PartitionStrategy};
pub use sbm::{generate_sbm, SbmParams};
pub use subgraph::{sample_1hop, sample_union, Subgraph};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Compaction is triggered once this fraction of the stored entries are
/// tombstones.
const COMPACT_RATIO: f64 = 0.25;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Sparse undirected graph with dense node features and class labels.
///
/// Both orientations of every edge are stored. Removed edges are masked out
/// with a tombstone until the next compaction, so removal never shifts the
/// layout of other rows.
#[derive(Debug, Clone)]
pub struct Graph {
    num_nodes: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    alive: Vec<bool>,
    tombstones: usize,
    degree: Vec<usize>,
    features: Array2<f64>,
    labels: Vec<usize>,
    num_classes: usize,
    splits: Splits,
    split_of: Vec<Option<Split>>,
    dropped_self_loops: usize,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.num_nodes == other.num_nodes
            && self.edges() == other.edges()
            && self.features == other.features
            && self.labels == other.labels
            && self.splits == other.splits
    }
}

impl Graph {
    /// Builds a graph from an edge list. Edges are symmetrized and
    /// deduplicated; self-loops are dropped and counted.
    pub fn build(
        edges: &[(usize, usize)],
        features: Array2<f64>,
        labels: Vec<usize>,
        splits: Splits,
    ) -> Result<Graph> {
        let num_nodes = features.nrows();
        if num_nodes == 0 {
            return Err(Error::EmptyGraph);
        }
        if labels.len() != num_nodes {
            return Err(Error::LabelCount {
                len: labels.len(),
                num_nodes,
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("features".into()));
        }
        let check = |id: usize| {
            if id >= num_nodes {
                Err(Error::NodeOutOfRange { id, num_nodes })
            } else {
                Ok(())
            }
        };

        let mut split_of = vec![None; num_nodes];
        for (list, tag) in [
            (&splits.train, Split::Train),
            (&splits.val, Split::Val),
            (&splits.test, Split::Test),
        ] {
            for &id in list {
                check(id)?;
                if split_of[id].is_some() {
                    return Err(Error::DuplicateSplit(id));
                }
                split_of[id] = Some(tag);
            }
        }

        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
        let mut dropped_self_loops = 0;
        for &(i, j) in edges {
            check(i)?;
            check(j)?;
            if i == j {
                dropped_self_loops += 1;
                continue;
            }
            adj[i].push(j);
            adj[j].push(i);
        }
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
        }

        let num_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut g = Graph {
            num_nodes,
            row_ptr: Vec::new(),
            col_idx: Vec::new(),
            alive: Vec::new(),
            tombstones: 0,
            degree: Vec::new(),
            features,
            labels,
            num_classes,
            splits,
            split_of,
            dropped_self_loops,
        };
        g.set_rows(adj);
        Ok(g)
    }

    fn set_rows(&mut self, adj: Vec<Vec<usize>>) {
        let mut row_ptr = Vec::with_capacity(self.num_nodes + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut degree = Vec::with_capacity(self.num_nodes);
        for row in adj {
            degree.push(row.len());
            col_idx.extend(row);
            row_ptr.push(col_idx.len());
        }
        self.alive = vec![true; col_idx.len()];
        self.row_ptr = row_ptr;
        self.col_idx = col_idx;
        self.degree = degree;
        self.tombstones = 0;
    }

    fn adjacency_lists(&self) -> Vec<Vec<usize>> {
        (0..self.num_nodes)
            .map(|i| self.neighbors(i).collect())
            .collect()
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.degree.iter().sum::<usize>() / 2
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Overrides the class count inferred from the labels (used when a split
    /// does not contain every class).
    pub fn set_num_classes(&mut self, num_classes: usize) -> Result<()> {
        if self.labels.iter().any(|&y| y >= num_classes) {
            return Err(Error::InvalidArgument(format!(
                "num_classes {num_classes} smaller than max label"
            )));
        }
        self.num_classes = num_classes;
        Ok(())
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn features_mut(&mut self) -> &mut Array2<f64> {
        &mut self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn splits(&self) -> &Splits {
        &self.splits
    }

    pub fn split_of(&self, node: usize) -> Option<Split> {
        self.split_of[node]
    }

    pub fn dropped_self_loops(&self) -> usize {
        self.dropped_self_loops
    }

    pub fn degree(&self, node: usize) -> usize {
        self.degree[node]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degree
    }

    pub fn avg_degree(&self) -> f64 {
        2.0 * self.num_edges() as f64 / self.num_nodes as f64
    }

    pub fn check_node(&self, id: usize) -> Result<()> {
        if id < self.num_nodes {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                id,
                num_nodes: self.num_nodes,
            })
        }
    }

    /// Current neighbors of `node` in ascending order.
    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        let range = self.row_ptr[node]..self.row_ptr[node + 1];
        range
            .filter(move |&k| self.alive[k])
            .map(move |k| self.col_idx[k])
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.row_ptr[i];
        let row = &self.col_idx[lo..self.row_ptr[i + 1]];
        row.binary_search(&j).ok().map(|k| lo + k)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        if i >= self.num_nodes || j >= self.num_nodes {
            return false;
        }
        self.slot(i, j).is_some_and(|k| self.alive[k])
    }

    /// All undirected edges as `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.num_edges());
        for i in 0..self.num_nodes {
            for j in self.neighbors(i) {
                if i < j {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) -> Result<()> {
        self.check_node(i)?;
        self.check_node(j)?;
        let (a, b) = match (self.slot(i, j), self.slot(j, i)) {
            (Some(a), Some(b)) if self.alive[a] && self.alive[b] => (a, b),
            _ => return Err(Error::MissingEdge(i, j)),
        };
        self.alive[a] = false;
        self.alive[b] = false;
        self.tombstones += 2;
        self.degree[i] -= 1;
        self.degree[j] -= 1;
        if self.tombstones as f64 > COMPACT_RATIO * self.col_idx.len() as f64 {
            self.compact();
        }
        Ok(())
    }

    /// Adds an edge. This rebuilds the row storage, so bulk insertion should
    /// go through [`Graph::add_edges`].
    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        self.add_edges(&[(i, j)])
    }

    pub fn add_edges(&mut self, edges: &[(usize, usize)]) -> Result<()> {
        let mut adj = self.adjacency_lists();
        for &(i, j) in edges {
            self.check_node(i)?;
            self.check_node(j)?;
            if i == j {
                return Err(Error::InvalidArgument(format!("self-loop ({i}, {i})")));
            }
            if adj[i].binary_search(&j).is_ok() {
                return Err(Error::EdgeExists(i, j));
            }
            let pos = adj[i].binary_search(&j).unwrap_err();
            adj[i].insert(pos, j);
            let pos = adj[j].binary_search(&i).unwrap_err();
            adj[j].insert(pos, i);
        }
        self.set_rows(adj);
        Ok(())
    }

    /// Drops tombstoned entries from the row storage.
    pub fn compact(&mut self) {
        if self.tombstones == 0 {
            return;
        }
        let adj = self.adjacency_lists();
        self.set_rows(adj);
    }

    pub fn tombstones(&self) -> usize {
        self.tombstones
    }

    /// Returns a copy with nodes relabeled so that old node `i` becomes
    /// `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.num_nodes {
            return Err(Error::ShapeMismatch("permutation length".into()));
        }
        let mut features = Array2::zeros(self.features.raw_dim());
        let mut labels = vec![0; self.num_nodes];
        for i in 0..self.num_nodes {
            features.row_mut(perm[i]).assign(&self.features.row(i));
            labels[perm[i]] = self.labels[i];
        }
        let edges: Vec<_> = self
            .edges()
            .into_iter()
            .map(|(i, j)| (perm[i], perm[j]))
            .collect();
        let map = |v: &Vec<usize>| v.iter().map(|&i| perm[i]).collect::<Vec<_>>();
        let splits = Splits {
            train: map(&self.splits.train),
            val: map(&self.splits.val),
            test: map(&self.splits.test),
        };
        let mut g = Graph::build(&edges, features, labels, splits)?;
        g.num_classes = self.num_classes;
        Ok(g)
    }
}

/// Convenience wrapper matching the loader contract: builds a graph from an
/// edge list, features, labels and the three split lists.
pub fn build_graph(
    edges: &[(usize, usize)],
    features: Array2<f64>,
    labels: Vec<usize>,
    splits: Splits,
) -> Result<Graph> {
    Graph::build(edges, features, labels, splits)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use ndarray::Array2;

    pub(crate) fn plain(n: usize, edges: &[(usize, usize)]) -> Graph {
        Graph::build(edges, Array2::zeros((n, 2)), vec![0; n], Splits::default()).unwrap()
    }

    #[test]
    fn symmetrizes_single_edge() {
        let g = plain(2, &[(0, 1)]);
        assert!(g.has_edge(0, 1));
        assert!(g.has_edge(1, 0));
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.row_ptr, vec![0, 1, 2]);
        assert_eq!(g.col_idx, vec![1, 0]);
    }

    #[test]
    fn dedups_and_drops_self_loops() {
        let g = plain(3, &[(0, 1), (1, 0), (2, 2)]);
        assert_eq!(g.edges(), vec![(0, 1)]);
        assert_eq!(g.dropped_self_loops(), 1);
        assert!(!g.has_edge(2, 2));
    }

    #[test]
    fn rejects_out_of_range() {
        let err = Graph::build(
            &[(0, 5)],
            Array2::zeros((3, 1)),
            vec![0; 3],
            Splits::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NodeOutOfRange { id: 5, .. }));
    }

    #[test]
    fn rejects_duplicate_split_and_empty() {
        let splits = Splits {
            train: vec![0],
            val: vec![],
            test: vec![0],
        };
        let err = Graph::build(&[], Array2::zeros((2, 1)), vec![0; 2], splits).unwrap_err();
        assert!(matches!(err, Error::DuplicateSplit(0)));
        let err = Graph::build(&[], Array2::zeros((0, 1)), vec![], Splits::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyGraph));
    }

    #[test]
    fn removal_tombstones_then_compacts() {
        let edges: Vec<_> = (0..9).map(|i| (i, i + 1)).collect();
        let mut g = plain(10, &edges);
        g.remove_edge(3, 4).unwrap();
        assert!(!g.has_edge(4, 3));
        assert_eq!(g.num_edges(), 8);
        assert_eq!(g.tombstones(), 2);
        assert!(matches!(g.remove_edge(3, 4), Err(Error::MissingEdge(3, 4))));
        for i in 0..4 {
            if i != 3 {
                g.remove_edge(i, i + 1).unwrap();
            }
        }
        // 8 of 18 entries dead exceeds the ratio, so storage was rebuilt.
        assert!(g.tombstones() < 8);
        assert_eq!(g.num_edges(), 5);
        assert_eq!(g.neighbors(5).collect::<Vec<_>>(), vec![4, 6]);
        assert_eq!(g.neighbors(2).count(), 0);
    }

    #[test]
    fn add_edges_rejects_existing() {
        let mut g = plain(3, &[(0, 1)]);
        g.add_edge(1, 2).unwrap();
        assert_eq!(g.edges(), vec![(0, 1), (1, 2)]);
        assert!(matches!(g.add_edge(2, 1), Err(Error::EdgeExists(2, 1))));
    }
}
