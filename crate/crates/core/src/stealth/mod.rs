//! Feature-based node homophily and the distance between homophily
//! distributions used as the stealth signal.

mod tracker;

pub use tracker::HomophilyTracker;

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Neighbor weighting inside the aggregate `a_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HomophilyForm {
    /// `sqrt(d_j) / sqrt(d_i)`
    #[default]
    DegreeRatio,
    /// `1 / sqrt(d_i d_j)`
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMeasure {
    #[default]
    Wasserstein1,
    Ks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomophilyDistribution {
    pub values: Vec<f64>,
}

impl HomophilyDistribution {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }
}

#[inline]
fn weight(form: HomophilyForm, di: f64, dj: f64) -> f64 {
    match form {
        HomophilyForm::DegreeRatio => dj.sqrt() / di.sqrt(),
        HomophilyForm::Symmetric => 1.0 / (di * dj).sqrt(),
    }
}

/// Hypothetical edits for evaluating `h_u` without touching the graph.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Edit {
    pub removed: Option<(usize, usize)>,
    pub feature: Option<(usize, usize, f64)>,
}

impl Edit {
    fn degree(&self, g: &Graph, v: usize) -> usize {
        let d = g.degree(v);
        match self.removed {
            Some((i, j)) if v == i || v == j => d - 1,
            _ => d,
        }
    }

    fn skips(&self, u: usize, v: usize) -> bool {
        matches!(self.removed, Some((i, j)) if (u == i && v == j) || (u == j && v == i))
    }

    fn x(&self, x: &Array2<f64>, v: usize, k: usize) -> f64 {
        match self.feature {
            Some((n, d, val)) if n == v && d == k => val,
            _ => x[[v, k]],
        }
    }
}

pub(crate) fn homophily_at(g: &Graph, u: usize, form: HomophilyForm, edit: &Edit) -> f64 {
    let x = g.features();
    let dim = x.ncols();
    let du = edit.degree(g, u) as f64;
    let mut a = vec![0.0; dim];
    for v in g.neighbors(u) {
        if edit.skips(u, v) {
            continue;
        }
        let w = weight(form, du, edit.degree(g, v) as f64);
        for (k, ak) in a.iter_mut().enumerate() {
            *ak += w * edit.x(x, v, k);
        }
    }
    let own: f64 = (0..dim).map(|k| edit.x(x, u, k).powi(2)).sum();
    (a.iter().map(|v| v * v).sum::<f64>() + own).sqrt()
}

/// `h_i = ||(a_i, X_i)||_2`. An isolated node has an empty aggregate.
pub fn node_homophily(g: &Graph, i: usize) -> Result<f64> {
    node_homophily_with(g, i, HomophilyForm::DegreeRatio)
}

pub fn node_homophily_with(g: &Graph, i: usize, form: HomophilyForm) -> Result<f64> {
    g.check_node(i)?;
    Ok(homophily_at(g, i, form, &Edit::default()))
}

pub fn homophily_distribution(g: &Graph) -> HomophilyDistribution {
    homophily_distribution_with(g, HomophilyForm::DegreeRatio)
}

pub fn homophily_distribution_with(g: &Graph, form: HomophilyForm) -> HomophilyDistribution {
    let edit = Edit::default();
    HomophilyDistribution {
        values: (0..g.num_nodes()).map(|u| homophily_at(g, u, form, &edit)).collect(),
    }
}

/// Distance between two already sorted samples.
pub(crate) fn sorted_distance(p: &[f64], q: &[f64], measure: DistanceMeasure) -> f64 {
    match measure {
        DistanceMeasure::Wasserstein1 if p.len() == q.len() => {
            p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>() / p.len() as f64
        }
        DistanceMeasure::Wasserstein1 => cdf_walk(p, q, |acc, gap, width| acc + gap * width),
        DistanceMeasure::Ks => cdf_walk(p, q, |acc, gap, _| acc.max(gap)),
    }
}

/// Walks the merged support, folding `|F_p − F_q|` on each interval.
fn cdf_walk(p: &[f64], q: &[f64], mut fold: impl FnMut(f64, f64, f64) -> f64) -> f64 {
    let (np, nq) = (p.len() as f64, q.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut acc = 0.0;
    while i < p.len() || j < q.len() {
        let x = match (p.get(i), q.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        while i < p.len() && p[i] <= x {
            i += 1;
        }
        while j < q.len() && q[j] <= x {
            j += 1;
        }
        let gap = (i as f64 / np - j as f64 / nq).abs();
        let next = match (p.get(i), q.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => x,
        };
        acc = fold(acc, gap, next - x);
    }
    acc
}

pub fn distribution_distance(
    p: &HomophilyDistribution,
    q: &HomophilyDistribution,
    measure: DistanceMeasure,
) -> Result<f64> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    Ok(sorted_distance(&p.sorted(), &q.sorted(), measure))
}

/// `lambda_homo · M(H(g), H(g'))`
pub fn stealth_penalty(g: &Graph, perturbed: &Graph, lambda_homo: f64, measure: DistanceMeasure) -> Result<f64> {
    if g.num_nodes() != perturbed.num_nodes() {
        return Err(Error::ShapeMismatch(format!(
            "graphs have {} and {} nodes",
            g.num_nodes(),
            perturbed.num_nodes()
        )));
    }
    if !(lambda_homo >= 0.0 && lambda_homo.is_finite()) {
        return Err(Error::InvalidArgument("lambda_homo must be finite and >= 0".into()));
    }
    if lambda_homo == 0.0 {
        return Ok(0.0);
    }
    let d = distribution_distance(&homophily_distribution(g), &homophily_distribution(perturbed), measure)?;
    Ok(lambda_homo * d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramRow {
    pub lo: f64,
    pub hi: f64,
    pub clean: usize,
    pub perturbed: usize,
}

/// Counts both samples over `bins` equal-width bins spanning the pooled range.
pub fn histogram(clean: &HomophilyDistribution, perturbed: &HomophilyDistribution, bins: usize) -> Result<Vec<HistogramRow>> {
    if bins == 0 {
        return Err(Error::InvalidArgument("bins must be >= 1".into()));
    }
    let all = clean.values.iter().chain(&perturbed.values);
    let lo = all.clone().copied().fold(f64::INFINITY, f64::min);
    let hi = all.copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        return Err(Error::EmptyDistribution);
    }
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut rows: Vec<HistogramRow> = (0..bins)
        .map(|b| HistogramRow {
            lo: lo + b as f64 * width,
            hi: if b + 1 == bins { hi.max(lo + width) } else { lo + (b + 1) as f64 * width },
            clean: 0,
            perturbed: 0,
        })
        .collect();
    let bin_of = |v: f64| (((v - lo) / width) as usize).min(bins - 1);
    for &v in &clean.values {
        rows[bin_of(v)].clean += 1;
    }
    for &v in &perturbed.values {
        rows[bin_of(v)].perturbed += 1;
    }
    Ok(rows)
}

pub fn write_histogram_csv(path: &Path, rows: &[HistogramRow]) -> Result<()> {
    let err = |e: csv::Error| Error::parse(path.display().to_string(), e);
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(["bin_lo", "bin_hi", "count_clean", "count_perturbed"])
        .map_err(err)?;
    for r in rows {
        w.write_record([
            format!("{:e}", r.lo),
            format!("{:e}", r.hi),
            r.clean.to_string(),
            r.perturbed.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Splits;
    use ndarray::arr2;

    fn dist(v: &[f64]) -> HomophilyDistribution {
        HomophilyDistribution { values: v.to_vec() }
    }

    #[test]
    fn isolated_node_is_feature_norm() {
        let g = Graph::build(&[], arr2(&[[3.0, 4.0]]), vec![0], Splits::default()).unwrap();
        assert_eq!(node_homophily(&g, 0).unwrap(), 5.0);
    }

    #[test]
    fn single_neighbor() {
        let g = Graph::build(&[(0, 1)], arr2(&[[0.0, 0.0], [1.0, 0.0]]), vec![0, 0], Splits::default()).unwrap();
        assert_eq!(node_homophily(&g, 0).unwrap(), 1.0);
    }

    #[test]
    fn degree_ratio_vs_symmetric() {
        // star: center 0 (d=3), leaves d=1, leaf features 1
        let x = arr2(&[[0.0], [1.0], [1.0], [1.0]]);
        let g = Graph::build(&[(0, 1), (0, 2), (0, 3)], x, vec![0; 4], Splits::default()).unwrap();
        let ratio = node_homophily_with(&g, 0, HomophilyForm::DegreeRatio).unwrap();
        let sym = node_homophily_with(&g, 0, HomophilyForm::Symmetric).unwrap();
        assert!((ratio - 3.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((sym - 3.0 / 3f64.sqrt()).abs() < 1e-15);
        // leaf: a = sqrt(3)/1 * 0 = 0
        assert_eq!(node_homophily(&g, 1).unwrap(), 1.0);
    }

    #[test]
    fn two_point_samples() {
        let (p, q) = (dist(&[0.0, 0.0]), dist(&[1.0, 1.0]));
        assert_eq!(distribution_distance(&p, &q, DistanceMeasure::Wasserstein1).unwrap(), 1.0);
        assert_eq!(distribution_distance(&p, &q, DistanceMeasure::Ks).unwrap(), 1.0);
        assert_eq!(distribution_distance(&p, &p, DistanceMeasure::Ks).unwrap(), 0.0);
    }

    #[test]
    fn unequal_sizes_w1() {
        // F_p jumps to 1 at 0; F_q is 1/2 on [0,2) → area 1
        let w = distribution_distance(&dist(&[0.0]), &dist(&[0.0, 2.0]), DistanceMeasure::Wasserstein1).unwrap();
        assert!((w - 1.0).abs() < 1e-15);
        let ks = distribution_distance(&dist(&[0.0]), &dist(&[0.0, 2.0]), DistanceMeasure::Ks).unwrap();
        assert_eq!(ks, 0.5);
    }

    #[test]
    fn empty_rejected() {
        assert!(matches!(
            distribution_distance(&dist(&[]), &dist(&[1.0]), DistanceMeasure::Ks),
            Err(Error::EmptyDistribution)
        ));
    }

    #[test]
    fn histogram_counts_everything() {
        let rows = histogram(&dist(&[0.0, 1.0, 2.0]), &dist(&[2.0, 2.0]), 4).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows.iter().map(|r| r.clean).sum::<usize>(), 3);
        assert_eq!(rows[3].perturbed, 2);
        assert_eq!(rows[0].lo, 0.0);
        assert_eq!(rows[3].hi, 2.0);
    }
}
