use ndarray::{Array2, ArrayView2};

use super::forward::{forward_trace, Trace};
use super::loss::{softmax_residual, Objective};
use super::ParamSet;
use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;

/// Gradient with respect to the weight of each undirected edge `{i, j}` of
/// the unnormalized adjacency. Moving an edge weight moves both `A_ij` and
/// `A_ji`, and the degree normalization is differentiated through.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EdgeGradient {
    /// `((i, j), ∂L/∂w_ij)` with `i < j`, sorted by key.
    entries: Vec<((usize, usize), f64)>,
}

impl EdgeGradient {
    pub fn from_entries(mut entries: Vec<((usize, usize), f64)>) -> EdgeGradient {
        for ((i, j), _) in entries.iter_mut() {
            if *i > *j {
                std::mem::swap(i, j);
            }
        }
        entries.sort_by_key(|&(k, _)| k);
        EdgeGradient { entries }
    }

    /// Symmetric lookup; `None` when the pair is not an edge.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let key = (i.min(j), i.max(j));
        self.entries
            .binary_search_by_key(&key, |&(k, _)| k)
            .ok()
            .map(|idx| self.entries[idx].1)
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

    pub fn scaled(&self, c: f64) -> EdgeGradient {
        EdgeGradient {
            entries: self.entries.iter().map(|&(k, v)| (k, c * v)).collect(),
        }
    }

    /// Keeps only the edges accepted by `keep`.
    pub fn restrict(&self, mut keep: impl FnMut(usize, usize) -> bool) -> EdgeGradient {
        EdgeGradient {
            entries: self
                .entries
                .iter()
                .copied()
                .filter(|&((i, j), _)| keep(i, j))
                .collect(),
        }
    }
}

/// Gradients of one objective evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    /// Same order and shapes as `ParamSet::weights`.
    pub weights: Vec<Array2<f64>>,
    pub da: Option<EdgeGradient>,
    pub dx: Option<Array2<f64>>,
    /// Euclidean norm of all weight gradients concatenated.
    pub l2_norm: f64,
    pub loss: f64,
}

impl GradientBundle {
    pub fn from_weights(weights: Vec<Array2<f64>>, loss: f64) -> GradientBundle {
        let l2_norm = weights
            .iter()
            .flat_map(|w| w.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        GradientBundle {
            weights,
            da: None,
            dx: None,
            l2_norm,
            loss,
        }
    }

    pub fn flat_weights(&self) -> Vec<f64> {
        self.weights.iter().flat_map(|w| w.iter().copied()).collect()
    }
}

/// Gradients of the mean cross-entropy over `nodes`.
pub fn backward(
    params: &ParamSet,
    adj: &NormalizedAdjacency,
    x: &Array2<f64>,
    labels: &[usize],
    nodes: &[usize],
    want_da: bool,
    want_dx: bool,
) -> Result<GradientBundle> {
    backward_objective(
        params,
        adj,
        x,
        labels,
        &Objective::MeanCe(nodes.to_vec()),
        want_da,
        want_dx,
    )
}

/// Row-wise dot products `Σ_k left[u,k]·right[v,k]` for every stored entry
/// `(u, v)` of `adj`, accumulated into `acc` in CSR order.
fn accumulate_support(
    adj: &NormalizedAdjacency,
    left: ArrayView2<'_, f64>,
    right: ArrayView2<'_, f64>,
    acc: &mut [f64],
) {
    let mut k = 0;
    for u in 0..adj.num_nodes() {
        let lu = left.row(u);
        for (v, _) in adj.row(u) {
            acc[k] += lu.dot(&right.row(v));
            k += 1;
        }
    }
}

/// Chains `∂L/∂Â` (on the stored support) through
/// `Â_uv = w_uv / √(d_u d_v)`, `d_u = 1 + Σ_v w_uv`.
fn edge_gradient(adj: &NormalizedAdjacency, g_hat: &[f64]) -> EdgeGradient {
    let n = adj.num_nodes();
    let deg = adj.degrees();
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    for u in 0..n {
        offsets.push(offsets[u] + adj.row(u).count());
    }
    let cols: Vec<Vec<usize>> = (0..n).map(|u| adj.row(u).map(|(v, _)| v).collect()).collect();
    let index_of = |u: usize, v: usize| offsets[u] + cols[u].binary_search(&v).expect("symmetric support");

    // ∂L/∂d_u = −1/(2 d_u) · Σ_v (G_uv + G_vu) Â_uv
    let mut d_deg = vec![0.0; n];
    for u in 0..n {
        let mut s = 0.0;
        for (pos, (v, a)) in adj.row(u).enumerate() {
            s += (g_hat[offsets[u] + pos] + g_hat[index_of(v, u)]) * a;
        }
        d_deg[u] = -s / (2.0 * deg[u]);
    }

    let mut entries = Vec::new();
    for i in 0..n {
        for (pos, (j, _)) in adj.row(i).enumerate() {
            if j <= i {
                continue;
            }
            let direct = (g_hat[offsets[i] + pos] + g_hat[index_of(j, i)]) / (deg[i] * deg[j]).sqrt();
            entries.push(((i, j), direct + d_deg[i] + d_deg[j]));
        }
    }
    EdgeGradient { entries }
}

pub fn backward_objective(
    params: &ParamSet,
    adj: &NormalizedAdjacency,
    x: &Array2<f64>,
    labels: &[usize],
    objective: &Objective,
    want_da: bool,
    want_dx: bool,
) -> Result<GradientBundle> {
    let (z, trace) = forward_trace(params, adj, x)?;
    objective.validate(&z, labels)?;
    let loss = objective.evaluate(&z, labels)?;

    let c = objective.coefficient();
    let mut dz = Array2::zeros(z.raw_dim());
    for &i in objective.nodes() {
        for (k, r) in softmax_residual(&z, labels, i).into_iter().enumerate() {
            dz[[i, k]] += c * r;
        }
    }

    let mut g_hat = if want_da { vec![0.0; adj.nnz()] } else { Vec::new() };
    let (weights, dx) = match trace {
        Trace::Gcn { xw, pre, hidden, hw } => {
            let (w0, w1) = (&params.weights[0], &params.weights[1]);
            if want_da {
                accumulate_support(adj, dz.view(), hw.view(), &mut g_hat);
            }
            let d_hw = adj.spmm(dz.view());
            let dw1 = hidden.t().dot(&d_hw);
            let mut d_pre = d_hw.dot(&w1.t());
            d_pre.zip_mut_with(&pre, |d, &p| {
                if p <= 0.0 {
                    *d = 0.0;
                }
            });
            if want_da {
                accumulate_support(adj, d_pre.view(), xw.view(), &mut g_hat);
            }
            let d_xw = adj.spmm(d_pre.view());
            let dw0 = x.t().dot(&d_xw);
            let dx = want_dx.then(|| d_xw.dot(&w0.t()));
            (vec![dw0, dw1], dx)
        }
        Trace::Sgc { powers } => {
            let w = &params.weights[0];
            let mut d_cur = dz;
            for t in (1..powers.len()).rev() {
                if want_da {
                    accumulate_support(adj, d_cur.view(), powers[t - 1].view(), &mut g_hat);
                }
                d_cur = adj.spmm(d_cur.view());
            }
            let dw = x.t().dot(&d_cur);
            let dx = want_dx.then(|| d_cur.dot(&w.t()));
            (vec![dw], dx)
        }
    };

    let mut bundle = GradientBundle::from_weights(weights, loss);
    if !bundle.l2_norm.is_finite() || !loss.is_finite() {
        return Err(Error::NonFinite("weight gradients".into()));
    }
    if let Some(dx) = &dx {
        if dx.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature gradients".into()));
        }
    }
    bundle.dx = dx;
    if want_da {
        let da = edge_gradient(adj, &g_hat);
        if da.iter().any(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite("edge gradients".into()));
        }
        bundle.da = Some(da);
    }
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::Architecture;
    use crate::graph::{normalize_adjacency, tests::plain};

    #[test]
    fn zero_weight_network_has_zero_weight_grads() {
        let g = plain(4, &[(0, 1), (1, 2), (2, 3)]);
        let adj = normalize_adjacency(&g);
        let p = ParamSet::from_weights(
            Architecture::Gcn,
            vec![Array2::zeros((2, 3)), Array2::zeros((3, 2))],
            0.1,
        )
        .unwrap();
        let x = Array2::from_elem((4, 2), 0.7);
        let b = backward(&p, &adj, &x, &[0, 1, 0, 1], &[0, 1, 2], true, true).unwrap();
        assert!(b.weights.iter().all(|w| w.iter().all(|&v| v == 0.0)));
        assert_eq!(b.l2_norm, 0.0);
        assert!((b.loss - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn l2_norm_matches_flat_weights() {
        let g = plain(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        let adj = normalize_adjacency(&g);
        let p = ParamSet::init_gcn(3, 4, 2, 0.1, 3);
        let x = Array2::from_shape_fn((5, 3), |(i, j)| (i as f64 - j as f64) * 0.3);
        let b = backward(&p, &adj, &x, &[0, 1, 0, 1, 1], &[0, 2, 4], false, false).unwrap();
        let flat = b.flat_weights();
        let norm = flat.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - b.l2_norm).abs() <= 1e-12 * norm);
        assert!(b.da.is_none() && b.dx.is_none());
    }

    #[test]
    fn edge_gradient_symmetric_lookup() {
        let eg = EdgeGradient::from_entries(vec![((3, 1), 0.5), ((0, 2), -1.0)]);
        assert_eq!(eg.get(1, 3), Some(0.5));
        assert_eq!(eg.get(3, 1), Some(0.5));
        assert_eq!(eg.get(2, 0), Some(-1.0));
        assert_eq!(eg.get(0, 1), None);
        assert_eq!(eg.scaled(2.0).get(1, 3), Some(1.0));
    }
}
