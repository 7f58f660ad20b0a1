use ndarray::Array2;

use crate::error::{Error, Result};

/// A scalar objective over node logits, written as `Σ_i c_i · ce_i`.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// Mean cross-entropy over the node set (training loss).
    MeanCe(Vec<usize>),
    /// Negated sum of cross-entropy over the target set.
    Attack(Vec<usize>),
}

impl Objective {
    pub fn nodes(&self) -> &[usize] {
        match self {
            Objective::MeanCe(n) | Objective::Attack(n) => n,
        }
    }

    pub(crate) fn coefficient(&self) -> f64 {
        match self {
            Objective::MeanCe(n) => 1.0 / n.len() as f64,
            Objective::Attack(_) => -1.0,
        }
    }

    pub(crate) fn validate(&self, logits: &Array2<f64>, labels: &[usize]) -> Result<()> {
        let nodes = self.nodes();
        if nodes.is_empty() {
            return Err(Error::EmptyNodeSet);
        }
        for &i in nodes {
            if i >= logits.nrows() {
                return Err(Error::NodeOutOfRange {
                    id: i,
                    num_nodes: logits.nrows(),
                });
            }
            if labels[i] >= logits.ncols() {
                return Err(Error::ShapeMismatch(format!(
                    "label {} of node {i} exceeds class count {}",
                    labels[i],
                    logits.ncols()
                )));
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, logits: &Array2<f64>, labels: &[usize]) -> Result<f64> {
        self.validate(logits, labels)?;
        let ce: f64 = cross_entropy_rows(logits, labels, self.nodes()).iter().sum();
        Ok(self.coefficient() * ce)
    }
}

/// Per-node `−log softmax(z_i)[y_i]`, computed with the max-shift.
pub fn cross_entropy_rows(logits: &Array2<f64>, labels: &[usize], nodes: &[usize]) -> Vec<f64> {
    nodes
        .iter()
        .map(|&i| {
            let row = logits.row(i);
            let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let lse = m + row.iter().map(|&v| (v - m).exp()).sum::<f64>().ln();
            lse - row[labels[i]]
        })
        .collect()
}

/// Softmax of row `i` minus the one-hot label.
pub(crate) fn softmax_residual(logits: &Array2<f64>, labels: &[usize], i: usize) -> Vec<f64> {
    let row = logits.row(i);
    let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let exps: Vec<f64> = row.iter().map(|&v| (v - m).exp()).collect();
    let total: f64 = exps.iter().sum();
    let mut r: Vec<f64> = exps.into_iter().map(|e| e / total).collect();
    r[labels[i]] -= 1.0;
    r
}

pub fn masked_ce_loss(logits: &Array2<f64>, labels: &[usize], nodes: &[usize]) -> Result<f64> {
    Objective::MeanCe(nodes.to_vec()).evaluate(logits, labels)
}

pub fn attack_loss(logits: &Array2<f64>, labels: &[usize], targets: &[usize]) -> Result<f64> {
    Objective::Attack(targets.to_vec()).evaluate(logits, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr2, Array2};

    #[test]
    fn uniform_logits_give_log_c() {
        let z = Array2::zeros((2, 5));
        let l = masked_ce_loss(&z, &[0, 3], &[0, 1]).unwrap();
        assert!((l - 5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn saturated_logits_give_zero() {
        let z = arr2(&[[1e6, 0.0, 0.0]]);
        assert!(masked_ce_loss(&z, &[0], &[0]).unwrap().abs() < 1e-12);
        assert_eq!(attack_loss(&z, &[0], &[0]).unwrap(), 0.0);
    }

    #[test]
    fn three_node_hand_case() {
        let z = arr2(&[[1.0, 2.0], [0.5, -0.5], [0.0, 3.0]]);
        let labels = [0, 0, 1];
        let ce = |a: f64, b: f64, y: usize| {
            let p = [a.exp(), b.exp()];
            -(p[y] / (p[0] + p[1])).ln()
        };
        let expect = (ce(1.0, 2.0, 0) + ce(0.5, -0.5, 0) + ce(0.0, 3.0, 1)) / 3.0;
        let got = masked_ce_loss(&z, &labels, &[0, 1, 2]).unwrap();
        assert!((got - expect).abs() < 1e-14);
    }

    #[test]
    fn attack_loss_negated_sum() {
        // ce values 0.5 and 1.5: logits [0, t] with label 0 give ce = ln(1+e^t)
        let t1 = (0.5f64.exp() - 1.0).ln();
        let t2 = (1.5f64.exp() - 1.0).ln();
        let z = arr2(&[[0.0, t1], [0.0, t2]]);
        let l = attack_loss(&z, &[0, 0], &[0, 1]).unwrap();
        assert!((l + 2.0).abs() < 1e-12);
        let mean = masked_ce_loss(&z, &[0, 0], &[0, 1]).unwrap();
        assert_eq!(l, -2.0 * mean);
    }

    #[test]
    fn empty_sets_rejected() {
        let z = Array2::zeros((1, 2));
        assert!(matches!(masked_ce_loss(&z, &[0], &[]), Err(Error::EmptyNodeSet)));
        assert!(matches!(attack_loss(&z, &[0], &[]), Err(Error::EmptyNodeSet)));
    }
}
