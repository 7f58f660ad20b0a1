//! Two-layer GCN and SGC models with exact reverse-mode gradients with
//! respect to weights, node features, and edge weights of the unnormalized
//! adjacency.

mod backward;
mod checkpoint;
mod forward;
mod gradcheck;
mod loss;

pub use backward::{backward, backward_objective, EdgeGradient, GradientBundle};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use forward::{forward, gcn_forward, sgc_forward};
pub use gradcheck::{check_gradients, check_gradients_objective, relu_margin, GradCheckReport, REL_FLOOR};
pub use loss::{attack_loss, cross_entropy_rows, masked_ce_loss, Objective};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Architecture {
    /// `Â · ReLU(Â · X · W0) · W1`
    Gcn,
    /// `Â^k · X · W0`
    Sgc { k: usize },
}

/// Model weights plus the (stateless) plain-SGD optimizer settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub arch: Architecture,
    pub weights: Vec<Array2<f64>>,
    pub learning_rate: f64,
    /// Number of updates applied so far.
    pub steps: u64,
}

fn glorot(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-bound..bound))
}

impl ParamSet {
    pub fn init_gcn(
        feature_dim: usize,
        hidden_dim: usize,
        num_classes: usize,
        learning_rate: f64,
        seed: u64,
    ) -> ParamSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w0 = glorot(feature_dim, hidden_dim, &mut rng);
        let w1 = glorot(hidden_dim, num_classes, &mut rng);
        ParamSet {
            arch: Architecture::Gcn,
            weights: vec![w0, w1],
            learning_rate,
            steps: 0,
        }
    }

    pub fn init_sgc(
        feature_dim: usize,
        num_classes: usize,
        k: usize,
        learning_rate: f64,
        seed: u64,
    ) -> ParamSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ParamSet {
            arch: Architecture::Sgc { k },
            weights: vec![glorot(feature_dim, num_classes, &mut rng)],
            learning_rate,
            steps: 0,
        }
    }

    pub fn from_weights(arch: Architecture, weights: Vec<Array2<f64>>, learning_rate: f64) -> Result<ParamSet> {
        let p = ParamSet {
            arch,
            weights,
            learning_rate,
            steps: 0,
        };
        p.check_structure()?;
        Ok(p)
    }

    fn check_structure(&self) -> Result<()> {
        match (self.arch, self.weights.len()) {
            (Architecture::Gcn, 2) => {
                if self.weights[0].ncols() != self.weights[1].nrows() {
                    return Err(Error::ShapeMismatch("W0 columns != W1 rows".into()));
                }
            }
            (Architecture::Sgc { k }, 1) => {
                if k == 0 {
                    return Err(Error::InvalidArgument("SGC depth k must be >= 1".into()));
                }
            }
            _ => return Err(Error::ShapeMismatch("weight count does not match architecture".into())),
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        if self.weights.iter().any(|w| w.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("weights".into()));
        }
        Ok(())
    }

    pub fn feature_dim(&self) -> usize {
        self.weights[0].nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.weights.last().map_or(0, |w| w.ncols())
    }

    pub fn tensor_names(&self) -> Vec<String> {
        (0..self.weights.len()).map(|i| format!("W{i}")).collect()
    }

    /// In-place plain SGD update `W ← W − lr · dW`.
    pub fn apply_gradient(&mut self, grads: &[Array2<f64>]) -> Result<()> {
        if grads.len() != self.weights.len()
            || grads.iter().zip(&self.weights).any(|(g, w)| g.dim() != w.dim())
        {
            return Err(Error::ShapeMismatch("gradient shapes differ from weights".into()));
        }
        for (w, g) in self.weights.iter_mut().zip(grads) {
            w.scaled_add(-self.learning_rate, g);
        }
        self.steps += 1;
        Ok(())
    }

    pub fn flat_len(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum()
    }

    pub fn max_abs_diff(&self, other: &ParamSet) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// Returns the updated parameters after one plain SGD step.
pub fn sgd_step(params: &ParamSet, grad: &GradientBundle) -> Result<ParamSet> {
    let mut next = params.clone();
    next.apply_gradient(&grad.weights)?;
    Ok(next)
}

/// Fraction of `nodes` whose argmax logit equals the label.
pub fn accuracy(logits: &Array2<f64>, labels: &[usize], nodes: &[usize]) -> f64 {
    if nodes.is_empty() {
        return 0.0;
    }
    let correct = nodes
        .iter()
        .filter(|&&i| {
            let row = logits.row(i);
            let mut best = 0;
            for k in 1..row.len() {
                if row[k] > row[best] {
                    best = k;
                }
            }
            best == labels[i]
        })
        .count();
    correct as f64 / nodes.len() as f64
}
