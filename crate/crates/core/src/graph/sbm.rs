use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Graph, Splits};
use crate::error::{Error, Result};

/// Stochastic block model parameters. Node labels are block ids and features
/// are `one_hot(label) + N(0, noise²)` padded to `feature_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SbmParams {
    pub seed: u64,
    pub block_sizes: Vec<usize>,
    pub p_intra: f64,
    pub p_inter: f64,
    pub feature_dim: usize,
    pub noise: f64,
    pub train_frac: f64,
    pub val_frac: f64,
}

impl Default for SbmParams {
    fn default() -> Self {
        SbmParams {
            seed: 0,
            block_sizes: vec![50; 4],
            p_intra: 0.1,
            p_inter: 0.01,
            feature_dim: 16,
            noise: 1.0,
            train_frac: 0.2,
            val_frac: 0.2,
        }
    }
}

impl SbmParams {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_intra", self.p_intra), ("p_inter", self.p_inter)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidProbability { name, value: p });
            }
        }
        if self.block_sizes.is_empty() || self.block_sizes.iter().sum::<usize>() == 0 {
            return Err(Error::InvalidArgument("block_sizes must be nonempty".into()));
        }
        if self.feature_dim < self.block_sizes.len() {
            return Err(Error::InvalidArgument(format!(
                "feature_dim {} smaller than block count {}",
                self.feature_dim,
                self.block_sizes.len()
            )));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::InvalidArgument("noise must be finite and >= 0".into()));
        }
        let fr = [self.train_frac, self.val_frac];
        if fr.iter().any(|f| !(0.0..=1.0).contains(f)) || fr.iter().sum::<f64>() > 1.0 {
            return Err(Error::InvalidArgument(
                "split fractions must lie in [0,1] and sum to <= 1".into(),
            ));
        }
        Ok(())
    }
}

pub fn generate_sbm(params: &SbmParams) -> Result<Graph> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let labels: Vec<usize> = params
        .block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
        .collect();
    let n = labels.len();

    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if labels[i] == labels[j] {
                params.p_intra
            } else {
                params.p_inter
            };
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }

    let normal = Normal::new(0.0, params.noise).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut features = Array2::from_shape_fn((n, params.feature_dim), |_| normal.sample(&mut rng));
    for (i, &y) in labels.iter().enumerate() {
        features[[i, y]] += 1.0;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_train = (params.train_frac * n as f64).round() as usize;
    let n_val = ((params.val_frac * n as f64).round() as usize).min(n - n_train);
    let mut take = |k: usize| {
        let mut v: Vec<usize> = order.drain(..k).collect();
        v.sort_unstable();
        v
    };
    let train = take(n_train);
    let val = take(n_val);
    let test = take(n - n_train - n_val);

    let mut g = Graph::build(&edges, features, labels, Splits { train, val, test })?;
    g.set_num_classes(params.block_sizes.len())?;
    Ok(g)
}
