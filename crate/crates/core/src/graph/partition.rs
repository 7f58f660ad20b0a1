use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PartitionStrategy {
    /// Node `i` goes to worker `i mod n`.
    #[default]
    RoundRobin,
    /// Worker chosen by a fixed integer hash of the node id.
    Hash,
    /// Seeded shuffle, then dealt out in equal shares.
    Random { seed: u64 },
}

/// Assignment of every graph node to one of `n` workers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    assignment: Vec<usize>,
    workers: usize,
}

impl Partition {
    pub fn from_assignment(assignment: Vec<usize>, workers: usize) -> Result<Partition> {
        if workers == 0 {
            return Err(Error::InvalidArgument("worker count must be >= 1".into()));
        }
        if let Some(&w) = assignment.iter().find(|&&w| w >= workers) {
            return Err(Error::InvalidArgument(format!(
                "worker id {w} out of range for {workers} workers"
            )));
        }
        Ok(Partition {
            assignment,
            workers,
        })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn worker_of(&self, node: usize) -> Result<usize> {
        self.assignment
            .get(node)
            .copied()
            .ok_or(Error::MissingAssignment(node))
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// All nodes owned by `worker`, ascending.
    pub fn nodes_of(&self, worker: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == worker)
            .collect()
    }

    /// The worker's share of `g`'s training nodes, ascending.
    pub fn train_pool(&self, g: &Graph, worker: usize) -> Vec<usize> {
        let mut pool: Vec<usize> = g
            .splits()
            .train
            .iter()
            .copied()
            .filter(|&i| self.assignment.get(i) == Some(&worker))
            .collect();
        pool.sort_unstable();
        pool
    }

    pub fn is_cross(&self, i: usize, j: usize) -> Result<bool> {
        Ok(self.worker_of(i)? != self.worker_of(j)?)
    }

    pub fn cross_edges(&self, g: &Graph) -> usize {
        g.edges()
            .into_iter()
            .filter(|&(i, j)| self.assignment[i] != self.assignment[j])
            .count()
    }
}

fn mix64(mut x: u64) -> u64 {
    // splitmix64 finalizer
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub fn partition_nodes(g: &Graph, n: usize, strategy: PartitionStrategy) -> Result<Partition> {
    if n == 0 {
        return Err(Error::InvalidArgument("worker count must be >= 1".into()));
    }
    let num = g.num_nodes();
    let assignment = match strategy {
        PartitionStrategy::RoundRobin => (0..num).map(|i| i % n).collect(),
        PartitionStrategy::Hash => (0..num).map(|i| (mix64(i as u64) % n as u64) as usize).collect(),
        PartitionStrategy::Random { seed } => {
            let mut order: Vec<usize> = (0..num).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let mut a = vec![0; num];
            for (rank, node) in order.into_iter().enumerate() {
                a[node] = rank % n;
            }
            a
        }
    };
    Partition::from_assignment(assignment, n)
}
