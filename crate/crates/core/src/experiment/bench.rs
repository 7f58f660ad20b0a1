use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{DatasetSpec, ExperimentConfig};
use super::run::resolved_attack;
use crate::attack::{run_disttack, select_targets, AttackConfig};
use crate::error::{Error, Result};
use crate::graph::{generate_sbm, partition_nodes, sample_union, SbmParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub multiplier: usize,
    pub graph_nodes: usize,
    pub graph_edges: usize,
    /// Nodes of the attacked subgraph.
    pub nodes: usize,
    /// Edges of the attacked subgraph.
    pub edges: usize,
    pub avg_degree: f64,
    pub feature_dim: usize,
    /// `nodes · (edges · avg_degree + feature_dim)`
    pub cost: f64,
    /// Fastest of the repeats, one attack iteration.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Least squares of `seconds` against `cost`.
    pub fit: LinearFit,
}

/// Ordinary least squares `y ≈ intercept + slope · x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument("fit needs at least two paired points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("fit needs distinct x values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(LinearFit { slope, intercept, r2 })
}

/// Times one attack iteration on SBM graphs whose blocks are scaled by each
/// multiplier, then fits time against the cost model.
pub fn scaling_benchmark(base: &ExperimentConfig, multipliers: &[usize], repeats: usize) -> Result<BenchReport> {
    if multipliers.len() < 3 {
        return Err(Error::config("multipliers", "at least 3 sizes are required"));
    }
    if multipliers.contains(&0) {
        return Err(Error::config("multipliers", "must be >= 1"));
    }
    let DatasetSpec::Sbm(sbm) = &base.dataset else {
        return Err(Error::config("dataset", "benchmark needs an sbm dataset"));
    };
    base.validate()?;
    let seed = base.seeds[0];
    let mut rows = Vec::with_capacity(multipliers.len());
    for &m in multipliers {
        let g = generate_sbm(&SbmParams {
            block_sizes: sbm.block_sizes.iter().map(|b| b * m).collect(),
            seed: sbm.seed.wrapping_add(seed),
            ..sbm.clone()
        })?;
        let part = partition_nodes(&g, base.workers, base.partition)?;
        let attack = AttackConfig {
            iterations: 1,
            ..resolved_attack(base, &g, seed)
        };
        let targets = select_targets(&g, &part, attack.poisoned_worker, attack.num_targets)?;
        let sub = sample_union(&g, &targets)?;
        let mut best = f64::INFINITY;
        for _ in 0..repeats.max(1) {
            let t = Instant::now();
            run_disttack(&g, &part, &attack, &targets)?;
            best = best.min(t.elapsed().as_secs_f64());
        }
        let (nodes, edges, d, dim) = (sub.len(), sub.local_edges.len(), g.avg_degree(), g.feature_dim());
        rows.push(BenchRow {
            multiplier: m,
            graph_nodes: g.num_nodes(),
            graph_edges: g.num_edges(),
            nodes,
            edges,
            avg_degree: d,
            feature_dim: dim,
            cost: nodes as f64 * (edges as f64 * d + dim as f64),
            seconds: best,
        });
    }
    let x: Vec<f64> = rows.iter().map(|r| r.cost).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.seconds).collect();
    let fit = linear_fit(&x, &y)?;
    Ok(BenchReport { rows, fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let f = linear_fit(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn known_r2() {
        // hand-worked: slope 0.8, intercept 0.3, ss_res 0.8, ss_tot 4
        let f = linear_fit(&[0.0, 1.0, 2.0, 3.0], &[0.5, 0.5, 2.5, 2.5]).unwrap();
        assert!((f.slope - 0.8).abs() < 1e-12);
        assert!((f.intercept - 0.3).abs() < 1e-12);
        assert!((f.r2 - 0.8).abs() < 1e-12);
    }

    #[test]
    fn too_few_sizes() {
        let e = scaling_benchmark(&ExperimentConfig::default(), &[1, 2], 1).unwrap_err();
        assert!(e.is_config());
    }
}
