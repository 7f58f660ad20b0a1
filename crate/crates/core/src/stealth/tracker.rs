use ndarray::Array2;

use super::{sorted_distance, DistanceMeasure, HomophilyForm};
use crate::graph::Graph;

/// Running distance between the clean homophily distribution and that of a
/// graph being perturbed, with cheap what-if queries for single edits.
///
/// Both forms factor as `a_u = d_u^{-1/2} · s_u` with
/// `s_u = Σ_{v∈N(u)} β(d_v) X_v`, so `s` is cached and patched locally.
#[derive(Debug, Clone)]
pub struct HomophilyTracker {
    form: HomophilyForm,
    measure: DistanceMeasure,
    reference: Vec<f64>,
    current: Vec<f64>,
    current_sorted: Vec<f64>,
    sums: Array2<f64>,
    own: Vec<f64>,
    /// `Σ_k |reference_k − current_sorted_k|`, kept for the equal-size W1.
    gap_sum: f64,
}

impl HomophilyTracker {
    pub fn new(clean: &Graph, form: HomophilyForm, measure: DistanceMeasure) -> Self {
        let mut t = HomophilyTracker {
            form,
            measure,
            reference: Vec::new(),
            current: Vec::new(),
            current_sorted: Vec::new(),
            sums: Array2::zeros((0, 0)),
            own: Vec::new(),
            gap_sum: 0.0,
        };
        t.reset(clean);
        // same arithmetic as the running values, so the clean state is exactly 0
        t.reference = t.current_sorted.clone();
        t.refresh_gap_sum();
        t
    }

    fn beta(&self, d: usize) -> f64 {
        let d = d as f64;
        match self.form {
            HomophilyForm::DegreeRatio => d.sqrt(),
            HomophilyForm::Symmetric => 1.0 / d.sqrt(),
        }
    }

    /// Squared norm with one fixed summation order, so an untouched row
    /// reproduces its cached value bit for bit.
    fn sq(row: &[f64]) -> f64 {
        row.iter().map(|v| v * v).sum()
    }

    fn h(sum_sq: f64, degree: usize, own: f64) -> f64 {
        if degree == 0 {
            own.sqrt()
        } else {
            (sum_sq / degree as f64 + own).sqrt()
        }
    }

    /// Recomputes all cached state from `g`.
    pub fn reset(&mut self, g: &Graph) {
        let x = g.features();
        let (n, dim) = x.dim();
        let mut sums = Array2::zeros((n, dim));
        for u in 0..n {
            let mut row = sums.row_mut(u);
            for v in g.neighbors(u) {
                row.scaled_add(self.beta(g.degree(v)), &x.row(v));
            }
        }
        self.own = (0..n).map(|u| x.row(u).iter().map(|v| v * v).sum()).collect();
        self.sums = sums;
        self.current = (0..n)
            .map(|u| Self::h(Self::sq(self.sums.row(u).as_slice().expect("standard layout")), g.degree(u), self.own[u]))
            .collect();
        self.current_sorted = self.current.clone();
        self.current_sorted.sort_by(f64::total_cmp);
        self.refresh_gap_sum();
    }

    fn refresh_gap_sum(&mut self) {
        self.gap_sum = self.reference.iter().zip(&self.current_sorted).map(|(r, c)| (r - c).abs()).sum();
    }

    fn incremental(&self) -> bool {
        self.measure == DistanceMeasure::Wasserstein1 && self.reference.len() == self.current_sorted.len()
    }

    pub fn distance(&self) -> f64 {
        if self.incremental() {
            self.gap_sum / self.reference.len() as f64
        } else {
            sorted_distance(&self.reference, &self.current_sorted, self.measure)
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.current
    }

    /// Nodes whose homophily moves when `(i, j)` is removed, flagged by
    /// adjacency to `i` and to `j`.
    fn edge_support(g: &Graph, i: usize, j: usize) -> Vec<(usize, bool, bool)> {
        let mut tagged: Vec<(usize, u8)> = vec![(i, 0), (j, 0)];
        tagged.extend(g.neighbors(i).map(|u| (u, 1)));
        tagged.extend(g.neighbors(j).map(|u| (u, 2)));
        tagged.sort_unstable();
        let mut out: Vec<(usize, bool, bool)> = Vec::with_capacity(tagged.len());
        for (u, tag) in tagged {
            match out.last_mut() {
                Some(last) if last.0 == u => {
                    last.1 |= tag == 1;
                    last.2 |= tag == 2;
                }
                _ => out.push((u, tag == 1, tag == 2)),
            }
        }
        out
    }

    /// Writes `u`'s aggregate after removing `(i, j)` into `s` and returns
    /// the new homophily value.
    fn patched_row(&self, g: &Graph, (i, j): (usize, usize), (u, adj_i, adj_j): (usize, bool, bool), s: &mut [f64]) -> f64 {
        let x = g.features();
        let (di, dj) = (g.degree(i), g.degree(j));
        s.copy_from_slice(self.sums.row(u).as_slice().expect("standard layout"));
        let mut patch = |v: usize, c: f64| {
            for (sk, xk) in s.iter_mut().zip(x.row(v)) {
                *sk += c * xk;
            }
        };
        let mut du = g.degree(u);
        if u == i {
            patch(j, -self.beta(dj));
            du -= 1;
        } else if u == j {
            patch(i, -self.beta(di));
            du -= 1;
        }
        if adj_i && u != j {
            patch(i, self.beta(di - 1) - self.beta(di));
        }
        if adj_j && u != i {
            patch(j, self.beta(dj - 1) - self.beta(dj));
        }
        Self::h(Self::sq(s), du, self.own[u])
    }

    /// Distance with the listed nodes moved to new values.
    fn distance_with(&self, changes: impl Iterator<Item = (usize, f64)>) -> f64 {
        let (mut olds, mut news): (Vec<f64>, Vec<f64>) = changes.map(|(u, h)| (self.current[u], h)).unzip();
        olds.sort_unstable_by(f64::total_cmp);
        news.sort_unstable_by(f64::total_cmp);
        if self.incremental() {
            return (self.gap_sum + self.gap_delta(&olds, &news)) / self.reference.len() as f64;
        }
        let mut merged = Vec::with_capacity(self.current_sorted.len());
        let (mut oi, mut ni) = (0, 0);
        for &v in &self.current_sorted {
            if oi < olds.len() && olds[oi].total_cmp(&v).is_eq() {
                oi += 1;
                continue;
            }
            while ni < news.len() && news[ni].total_cmp(&v).is_lt() {
                merged.push(news[ni]);
                ni += 1;
            }
            merged.push(v);
        }
        merged.extend_from_slice(&news[ni..]);
        sorted_distance(&self.reference, &merged, self.measure)
    }

    /// Change in `gap_sum` when the sorted `olds` are replaced by the sorted
    /// `news`. Only merged slots whose content shifted are visited.
    fn gap_delta(&self, olds: &[f64], news: &[f64]) -> f64 {
        let (cur, r) = (&self.current_sorted, &self.reference);
        let n = cur.len();
        let mut opos = Vec::with_capacity(olds.len());
        for (k, o) in olds.iter().enumerate() {
            let p = match opos.last() {
                Some(&prev) if olds[k - 1].total_cmp(o).is_eq() => prev + 1,
                _ => cur.partition_point(|v: &f64| v.total_cmp(o).is_lt()),
            };
            opos.push(p);
        }
        let npos: Vec<usize> = news
            .iter()
            .map(|h| cur.partition_point(|v: &f64| v.total_cmp(h).is_le()))
            .collect();
        let slot = |q: usize, v: f64| (r[q] - v).abs() - (r[q] - cur[q]).abs();
        let (mut p, mut q, mut oi, mut ni) = (0, 0, 0, 0);
        let mut delta = 0.0;
        loop {
            let next = opos.get(oi).copied().unwrap_or(n).min(npos.get(ni).copied().unwrap_or(n));
            if q != p {
                for k in p..next {
                    delta += slot(q + k - p, cur[k]);
                }
            }
            q += next - p;
            p = next;
            if ni < news.len() && npos[ni] == p && opos.get(oi).is_none_or(|&o| p <= o) {
                delta += slot(q, news[ni]);
                q += 1;
                ni += 1;
            } else if oi < olds.len() && opos[oi] == p {
                p += 1;
                oi += 1;
            } else {
                break;
            }
        }
        delta
    }

    fn set_value(&mut self, u: usize, new: f64) {
        relocate(&mut self.current_sorted, self.current[u], new);
        self.current[u] = new;
    }

    /// Distance after removing edge `(i, j)` from `g`. `g` must be the graph
    /// the tracker currently reflects.
    pub fn distance_after_removal(&self, g: &Graph, i: usize, j: usize) -> f64 {
        let mut s = vec![0.0; self.sums.ncols()];
        let support = Self::edge_support(g, i, j);
        self.distance_with(support.into_iter().map(|node| (node.0, self.patched_row(g, (i, j), node, &mut s))))
    }

    fn feature_changes(&self, g: &Graph, u: usize, dim: usize, value: f64) -> Vec<(usize, f64)> {
        let old = g.features()[[u, dim]];
        let own = self.own[u] - old * old + value * value;
        let row = |v: usize| self.sums.row(v).to_slice().expect("standard layout");
        let mut out = vec![(u, Self::h(Self::sq(row(u)), g.degree(u), own))];
        let delta = self.beta(g.degree(u)) * (value - old);
        for v in g.neighbors(u) {
            let mut r = row(v).to_vec();
            r[dim] += delta;
            let sq = Self::sq(&r);
            out.push((v, Self::h(sq, g.degree(v), self.own[v])));
        }
        out
    }

    pub fn distance_after_feature(&self, g: &Graph, u: usize, dim: usize, value: f64) -> f64 {
        self.distance_with(self.feature_changes(g, u, dim, value).into_iter())
    }

    /// Records a removal; call before mutating `g`.
    pub fn apply_removal(&mut self, g: &Graph, i: usize, j: usize) {
        let mut updates = Vec::new();
        let mut s = vec![0.0; self.sums.ncols()];
        for node in Self::edge_support(g, i, j) {
            let h = self.patched_row(g, (i, j), node, &mut s);
            updates.push((node.0, s.clone(), h));
        }
        for (u, row, h) in updates {
            self.sums.row_mut(u).assign(&ndarray::ArrayView1::from(&row));
            self.set_value(u, h);
        }
        self.refresh_gap_sum();
    }

    /// Records a feature write; call before mutating `g`.
    pub fn apply_feature(&mut self, g: &Graph, u: usize, dim: usize, value: f64) {
        let changes = self.feature_changes(g, u, dim, value);
        let old = g.features()[[u, dim]];
        self.own[u] += value * value - old * old;
        let delta = self.beta(g.degree(u)) * (value - old);
        for v in g.neighbors(u) {
            self.sums[[v, dim]] += delta;
        }
        for (v, h) in changes {
            self.set_value(v, h);
        }
        self.refresh_gap_sum();
    }
}

/// Moves one occurrence of `old` in the sorted vector to `new`'s position.
fn relocate(sorted: &mut [f64], old: f64, new: f64) {
    let from = sorted.partition_point(|v| v.total_cmp(&old).is_lt());
    let to = sorted.partition_point(|v| v.total_cmp(&new).is_lt());
    if to > from {
        // slots shift left across (from, to)
        sorted.copy_within(from + 1..to, from);
        sorted[to - 1] = new;
    } else {
        sorted.copy_within(to..from, to + 1);
        sorted[to] = new;
    }
}
