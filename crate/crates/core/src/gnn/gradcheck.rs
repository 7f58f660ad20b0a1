use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::backward::backward_objective;
use super::forward::forward;
use super::loss::Objective;
use super::{Architecture, ParamSet};
use crate::error::{Error, Result};
use crate::graph::{normalize_adjacency, normalize_weighted, Graph, NormalizedAdjacency};

/// Relative errors are taken against `max(|analytic|, |numeric|, REL_FLOOR)`
/// so coordinates with a vanishing gradient are compared absolutely.
pub const REL_FLOOR: f64 = 1e-4;

const MAX_NODES: usize = 64;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GradCheckReport {
    pub epsilon: f64,
    /// Max relative error per weight tensor, in `ParamSet::weights` order.
    pub weights: Vec<f64>,
    pub features: f64,
    pub edges: f64,
    pub max_rel_error: f64,
    pub coordinates: usize,
    /// Smallest `|pre-activation|` of the hidden ReLU (GCN only). Central
    /// differences are unreliable when this is comparable to epsilon.
    pub relu_margin: Option<f64>,
}

pub fn relu_margin(params: &ParamSet, adj: &NormalizedAdjacency, x: &Array2<f64>) -> Option<f64> {
    match params.arch {
        Architecture::Gcn => {
            let pre = adj.spmm(x.dot(&params.weights[0]).view());
            Some(pre.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min))
        }
        Architecture::Sgc { .. } => None,
    }
}

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Compares analytic gradients of the mean training loss over `nodes`
/// against central differences.
pub fn check_gradients(params: &ParamSet, g: &Graph, nodes: &[usize], epsilon: f64) -> Result<GradCheckReport> {
    check_gradients_objective(params, g, &Objective::MeanCe(nodes.to_vec()), epsilon)
}

/// Central-difference check of every weight, every feature entry and every
/// existing edge weight. Edge perturbations renormalize the adjacency, so the
/// degree dependence is part of what gets checked.
pub fn check_gradients_objective(
    params: &ParamSet,
    g: &Graph,
    objective: &Objective,
    epsilon: f64,
) -> Result<GradCheckReport> {
    if g.num_nodes() > MAX_NODES {
        return Err(Error::InvalidArgument(format!(
            "gradient check limited to {MAX_NODES} nodes"
        )));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let adj = normalize_adjacency(g);
    let x = g.features();
    let labels = g.labels();
    let analytic = backward_objective(params, &adj, x, labels, objective, true, true)?;
    let loss_at = |p: &ParamSet, a: &NormalizedAdjacency, x: &Array2<f64>| -> Result<f64> {
        objective.evaluate(&forward(p, a, x)?, labels)
    };
    let central = |plus: f64, minus: f64| (plus - minus) / (2.0 * epsilon);
    let mut coordinates = 0;

    let mut weight_errs = Vec::with_capacity(params.weights.len());
    for (t, grad) in analytic.weights.iter().enumerate() {
        let mut worst: f64 = 0.0;
        for idx in ndarray::indices(grad.raw_dim()) {
            let mut p = params.clone();
            p.weights[t][idx] += epsilon;
            let plus = loss_at(&p, &adj, x)?;
            p.weights[t][idx] -= 2.0 * epsilon;
            let minus = loss_at(&p, &adj, x)?;
            worst = worst.max(rel_err(grad[idx], central(plus, minus)));
            coordinates += 1;
        }
        weight_errs.push(worst);
    }

    let dx = analytic.dx.as_ref().expect("requested");
    let mut features: f64 = 0.0;
    let mut xp = x.clone();
    for idx in ndarray::indices(x.raw_dim()) {
        let orig = xp[idx];
        xp[idx] = orig + epsilon;
        let plus = loss_at(params, &adj, &xp)?;
        xp[idx] = orig - epsilon;
        let minus = loss_at(params, &adj, &xp)?;
        xp[idx] = orig;
        features = features.max(rel_err(dx[idx], central(plus, minus)));
        coordinates += 1;
    }

    let da = analytic.da.as_ref().expect("requested");
    let edges = g.edges();
    let mut edge_err: f64 = 0.0;
    let mut weighted: Vec<(usize, usize, f64)> = edges.iter().map(|&(i, j)| (i, j, 1.0)).collect();
    for (k, &(i, j)) in edges.iter().enumerate() {
        weighted[k].2 = 1.0 + epsilon;
        let plus = loss_at(params, &normalize_weighted(g.num_nodes(), &weighted), x)?;
        weighted[k].2 = 1.0 - epsilon;
        let minus = loss_at(params, &normalize_weighted(g.num_nodes(), &weighted), x)?;
        weighted[k].2 = 1.0;
        let a = da.get(i, j).ok_or(Error::MissingEdge(i, j))?;
        edge_err = edge_err.max(rel_err(a, central(plus, minus)));
        coordinates += 1;
    }

    let max_rel_error = weight_errs
        .iter()
        .copied()
        .chain([features, edge_err])
        .fold(0.0, f64::max);
    Ok(GradCheckReport {
        epsilon,
        weights: weight_errs,
        features,
        edges: edge_err,
        max_rel_error,
        coordinates,
        relu_margin: relu_margin(params, &adj, x),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Splits;

    #[test]
    fn flat_region_has_zero_feature_gradient() {
        let g = Graph::build(
            &[(0, 1), (1, 2)],
            Array2::zeros((3, 2)),
            vec![0, 1, 0],
            Splits::default(),
        )
        .unwrap();
        let p = ParamSet::from_weights(
            super::super::Architecture::Gcn,
            vec![Array2::zeros((2, 3)), Array2::zeros((3, 2))],
            0.1,
        )
        .unwrap();
        let adj = normalize_adjacency(&g);
        let b = backward_objective(&p, &adj, g.features(), g.labels(), &Objective::MeanCe(vec![0, 1]), true, true)
            .unwrap();
        assert!(b.dx.unwrap().iter().all(|&v| v == 0.0));
        let r = check_gradients(&p, &g, &[0, 1], 1e-4).unwrap();
        assert!(r.features < 1e-9);
    }

    #[test]
    fn rejects_large_graphs() {
        let g = Graph::build(&[], Array2::zeros((65, 1)), vec![0; 65], Splits::default()).unwrap();
        let p = ParamSet::init_sgc(1, 1, 1, 0.1, 0);
        assert!(check_gradients(&p, &g, &[0], 1e-4).is_err());
    }
}
