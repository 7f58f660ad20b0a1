//! Simulation of poisoning attacks against synchronized multi-worker GNN
//! training.
//!
//! The crate is organized bottom-up:
//!
//! * [`graph`]: CSR graphs, normalization, partitioning, sampling, SBM data
//! * [`gnn`]: GCN/SGC forward and backward passes and a finite-difference oracle
//! * [`dist`]: bulk-synchronous multi-worker training with gradient telemetry
//! * [`stealth`]: node homophily and distribution distances
//! * [`attack`]: the gradient-scored perturbation attack and RA/DICE baselines
//! * [`experiment`]: configuration, paired clean/poisoned runs, benchmarks, output

pub mod attack;
pub mod dist;
pub mod error;
pub mod experiment;
pub mod gnn;
pub mod graph;
pub mod stealth;

pub use error::{Error, Result};
