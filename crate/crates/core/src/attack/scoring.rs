use ndarray::Array2;

use super::AttackConfig;
use crate::error::{Error, Result};
use crate::gnn::{backward_objective, EdgeGradient, Objective, ParamSet};
use crate::graph::{normalize_adjacency, Graph, Partition, Subgraph};

/// Weighted attack-loss gradients on a subgraph.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgraphGradient {
    /// `w_A · ∂L_atk/∂w_ij` on the subgraph's edges, global ids.
    pub edges: EdgeGradient,
    /// `w_X · ∂L_atk/∂X`, rows in the subgraph's local order.
    pub features: Array2<f64>,
}

/// Attack-loss gradients of the surrogate over `targets`, evaluated on the
/// full graph so the targets keep their true receptive field, then restricted
/// to `sub` and weighted.
pub fn combined_subgraph_gradient(
    theta: &ParamSet,
    g: &Graph,
    sub: &Subgraph,
    targets: &[usize],
    cfg: &AttackConfig,
) -> Result<SubgraphGradient> {
    if sub.is_empty() {
        return Err(Error::EmptyNodeSet);
    }
    let adj = normalize_adjacency(g);
    let b = backward_objective(
        theta,
        &adj,
        g.features(),
        g.labels(),
        &Objective::Attack(targets.to_vec()),
        true,
        true,
    )?;
    let da = b.da.unwrap_or_default();
    let dx = b.dx.unwrap_or_else(|| Array2::zeros(g.features().raw_dim()));
    let edges = da.restrict(|i, j| sub.contains_edge(i, j)).scaled(cfg.w_a);
    let mut features = Array2::zeros((sub.len(), g.feature_dim()));
    for (l, &gid) in sub.node_ids.iter().enumerate() {
        features.row_mut(l).assign(&dx.row(gid));
    }
    features.mapv_inplace(|v| v * cfg.w_x);
    Ok(SubgraphGradient { edges, features })
}

/// `+1` on edges whose endpoints live on different workers, `−1` otherwise.
pub fn communication_matrix(sub: &Subgraph, part: &Partition) -> Result<Vec<((usize, usize), f64)>> {
    sub.global_edges()
        .into_iter()
        .map(|(i, j)| {
            let c = if part.is_cross(i, j)? { 1.0 } else { -1.0 };
            Ok(((i, j), c))
        })
        .collect()
}

/// Symmetric sparse score matrix supported on the subgraph's edges.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreMatrix {
    entries: Vec<((usize, usize), f64)>,
}

impl ScoreMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let key = (i.min(j), i.max(j));
        self.entries
            .binary_search_by_key(&key, |&(k, _)| k)
            .map_or(0.0, |idx| self.entries[idx].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `S = A ⊙ (G + lambda_comm · C)` over the subgraph's edges.
pub fn edge_scores(edge_grad: &EdgeGradient, sub: &Subgraph, part: &Partition, lambda_comm: f64) -> Result<ScoreMatrix> {
    if let Some(((i, j), _)) = edge_grad.iter().find(|&((i, j), _)| !sub.contains_edge(i, j)) {
        return Err(Error::ShapeMismatch(format!("gradient entry ({i}, {j}) is not a subgraph edge")));
    }
    let entries = communication_matrix(sub, part)?
        .into_iter()
        .map(|((i, j), c)| ((i, j), edge_grad.get(i, j).unwrap_or(0.0) + lambda_comm * c))
        .collect();
    Ok(ScoreMatrix { entries })
}

/// Top-`k` positive scores, highest first; ties go to the lexicographically
/// smaller `(min, max)` endpoint pair.
pub fn select_edge_removals(scores: &ScoreMatrix, k: usize) -> Vec<(usize, usize)> {
    let mut eligible: Vec<((usize, usize), f64)> = scores.iter().filter(|&(_, s)| s > 0.0).collect();
    eligible.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    eligible.into_iter().take(k).map(|(e, _)| e).collect()
}
