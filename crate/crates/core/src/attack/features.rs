use ndarray::{Array1, ArrayView1};

use super::FeatureFlip;
use crate::error::{Error, Result};

/// `1 − 2·sgn(g)`. With `strict = false` the negative-gradient branch negates
/// instead of tripling.
pub fn flip_multiplier(sign: i8, strict: bool) -> f64 {
    match sign {
        0 => 1.0,
        s if s > 0 => -1.0,
        _ if strict => 3.0,
        _ => -1.0,
    }
}

pub(crate) fn sgn(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Applies the sign-flip rule to the `m` dimensions of `x_row` with the
/// largest nonzero `|grad|`. Zero-gradient dimensions are never selected.
pub fn flip_features(
    node: usize,
    x_row: ArrayView1<'_, f64>,
    grad_row: ArrayView1<'_, f64>,
    m: usize,
    strict: bool,
) -> Result<(Array1<f64>, Vec<FeatureFlip>)> {
    if x_row.len() != grad_row.len() {
        return Err(Error::ShapeMismatch(format!(
            "feature row has {} dims, gradient {}",
            x_row.len(),
            grad_row.len()
        )));
    }
    let mut dims: Vec<usize> = (0..grad_row.len()).filter(|&d| grad_row[d] != 0.0).collect();
    dims.sort_by(|&a, &b| grad_row[b].abs().total_cmp(&grad_row[a].abs()).then(a.cmp(&b)));
    let mut out = x_row.to_owned();
    let mut flips = Vec::new();
    for d in dims.into_iter().take(m) {
        let sign = sgn(grad_row[d]);
        let old = out[d];
        let new = old * flip_multiplier(sign, strict);
        out[d] = new;
        flips.push(FeatureFlip {
            node,
            dim: d,
            old,
            new,
            sign,
            iter: 0,
            penalty: 0.0,
        });
    }
    Ok((out, flips))
}
