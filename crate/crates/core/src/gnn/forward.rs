use ndarray::Array2;

use super::{Architecture, ParamSet};
use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;

/// Intermediate activations kept for the backward pass.
pub(crate) enum Trace {
    Gcn {
        /// `X · W0`
        xw: Array2<f64>,
        /// `Â · X · W0` (pre-activation)
        pre: Array2<f64>,
        /// `ReLU(pre)`
        hidden: Array2<f64>,
        /// `hidden · W1`
        hw: Array2<f64>,
    },
    Sgc {
        /// `Â^t · X · W` for `t = 0..=k`
        powers: Vec<Array2<f64>>,
    },
}

pub(crate) fn check_inputs(params: &ParamSet, adj: &NormalizedAdjacency, x: &Array2<f64>) -> Result<()> {
    if x.nrows() != adj.num_nodes() {
        return Err(Error::ShapeMismatch(format!(
            "feature rows {} != adjacency size {}",
            x.nrows(),
            adj.num_nodes()
        )));
    }
    if x.ncols() != params.feature_dim() {
        return Err(Error::ShapeMismatch(format!(
            "feature dim {} != weight rows {}",
            x.ncols(),
            params.feature_dim()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("input features".into()));
    }
    if params.weights.iter().any(|w| w.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite("weights".into()));
    }
    Ok(())
}

pub(crate) fn forward_trace(
    params: &ParamSet,
    adj: &NormalizedAdjacency,
    x: &Array2<f64>,
) -> Result<(Array2<f64>, Trace)> {
    check_inputs(params, adj, x)?;
    match params.arch {
        Architecture::Gcn => {
            let (w0, w1) = (&params.weights[0], &params.weights[1]);
            if w0.ncols() != w1.nrows() {
                return Err(Error::ShapeMismatch("W0 columns != W1 rows".into()));
            }
            let xw = x.dot(w0);
            let pre = adj.spmm(xw.view());
            let hidden = pre.mapv(|v| v.max(0.0));
            let hw = hidden.dot(w1);
            let z = adj.spmm(hw.view());
            Ok((z, Trace::Gcn { xw, pre, hidden, hw }))
        }
        Architecture::Sgc { k } => {
            if k == 0 {
                return Err(Error::InvalidArgument("SGC depth k must be >= 1".into()));
            }
            let mut powers = Vec::with_capacity(k + 1);
            powers.push(x.dot(&params.weights[0]));
            for t in 0..k {
                let next = adj.spmm(powers[t].view());
                powers.push(next);
            }
            let z = powers[k].clone();
            Ok((z, Trace::Sgc { powers }))
        }
    }
}

/// Logits for whichever architecture `params` carries.
pub fn forward(params: &ParamSet, adj: &NormalizedAdjacency, x: &Array2<f64>) -> Result<Array2<f64>> {
    forward_trace(params, adj, x).map(|(z, _)| z)
}

pub fn gcn_forward(params: &ParamSet, adj: &NormalizedAdjacency, x: &Array2<f64>) -> Result<Array2<f64>> {
    if params.arch != Architecture::Gcn {
        return Err(Error::InvalidArgument("parameters are not a GCN".into()));
    }
    forward(params, adj, x)
}

/// `Â^k · X · W`. The propagation depth overrides the one stored in `params`.
pub fn sgc_forward(
    params: &ParamSet,
    adj: &NormalizedAdjacency,
    x: &Array2<f64>,
    k: usize,
) -> Result<Array2<f64>> {
    if params.weights.len() != 1 {
        return Err(Error::InvalidArgument("parameters are not an SGC".into()));
    }
    let p = ParamSet {
        arch: Architecture::Sgc { k },
        ..params.clone()
    };
    forward(&p, adj, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{normalize_adjacency, tests::plain};
    use ndarray::{arr2, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
    }

    fn six_node() -> crate::graph::Graph {
        plain(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (2, 3)])
    }

    #[test]
    fn zero_weights_zero_logits() {
        let g = six_node();
        let adj = normalize_adjacency(&g);
        let p = ParamSet::from_weights(
            Architecture::Gcn,
            vec![Array2::zeros((3, 4)), Array2::zeros((4, 2))],
            0.1,
        )
        .unwrap();
        let x = Array2::from_elem((6, 3), 1.5);
        assert!(gcn_forward(&p, &adj, &x).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_chain_single_node() {
        let adj = normalize_adjacency(&plain(1, &[]));
        let eye = Array2::<f64>::eye(2);
        let p = ParamSet::from_weights(Architecture::Gcn, vec![eye.clone(), eye], 0.1).unwrap();
        let z = gcn_forward(&p, &adj, &arr2(&[[1.0, 0.0]])).unwrap();
        assert_eq!(z, arr2(&[[1.0, 0.0]]));
    }

    #[test]
    fn gcn_matches_dense_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = six_node();
        let adj = normalize_adjacency(&g);
        let a = adj.to_dense();
        let x = random(6, 3, &mut rng);
        let p = ParamSet::from_weights(Architecture::Gcn, vec![random(3, 4, &mut rng), random(4, 2, &mut rng)], 0.1)
            .unwrap();
        let dense = a.dot(&a.dot(&x).dot(&p.weights[0]).mapv(|v| v.max(0.0))).dot(&p.weights[1]);
        let z = gcn_forward(&p, &adj, &x).unwrap();
        assert!((&z - &dense).iter().all(|d| d.abs() < 1e-10));
    }

    #[test]
    fn sgc_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = random(6, 3, &mut rng);
        let w = random(3, 2, &mut rng);
        let p = ParamSet::from_weights(Architecture::Sgc { k: 1 }, vec![w.clone()], 0.1).unwrap();

        // Â = I when the graph has no edges
        let isolated = normalize_adjacency(&plain(6, &[]));
        let z = sgc_forward(&p, &isolated, &x, 1).unwrap();
        assert!((&z - &x.dot(&w)).iter().all(|d| d.abs() < 1e-14));

        let adj = normalize_adjacency(&six_node());
        let a = adj.to_dense();
        let z2 = sgc_forward(&p, &adj, &x, 2).unwrap();
        let twice = a.dot(&a.dot(&x)).dot(&w);
        assert!((&z2 - &twice).iter().all(|d| d.abs() < 1e-10));
    }

    #[test]
    fn shape_and_finiteness_errors() {
        let adj = normalize_adjacency(&six_node());
        let p = ParamSet::init_gcn(3, 4, 2, 0.1, 0);
        assert!(matches!(
            gcn_forward(&p, &adj, &Array2::zeros((5, 3))),
            Err(Error::ShapeMismatch(_))
        ));
        let mut x = Array2::zeros((6, 3));
        x[[0, 0]] = f64::NAN;
        assert!(matches!(gcn_forward(&p, &adj, &x), Err(Error::NonFinite(_))));
        assert!(sgc_forward(&p, &adj, &Array2::zeros((6, 3)), 1).is_err());
    }
}
