use ndarray::{Array2, ArrayView2};

use super::Graph;

/// Symmetrically normalized adjacency with self-loops,
/// `D̃^{-1/2} (A + I) D̃^{-1/2}`, in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    deg: Vec<f64>,
}

pub fn normalize_adjacency(g: &Graph) -> NormalizedAdjacency {
    let n = g.num_nodes();
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| g.neighbors(i).map(|j| (j, 1.0)).collect())
        .collect();
    from_rows(n, rows)
}

/// Normalization for a symmetric weighted adjacency given as `(i, j, w)`
/// with `i != j`, one entry per undirected pair. Used by the
/// finite-difference oracle, which needs fractional edge weights.
pub fn normalize_weighted(n: usize, edges: &[(usize, usize, f64)]) -> NormalizedAdjacency {
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(i, j, w) in edges {
        rows[i].push((j, w));
        rows[j].push((i, w));
    }
    for row in &mut rows {
        row.sort_by_key(|&(j, _)| j);
    }
    from_rows(n, rows)
}

fn from_rows(n: usize, rows: Vec<Vec<(usize, f64)>>) -> NormalizedAdjacency {
    let deg: Vec<f64> = rows
        .iter()
        .map(|r| 1.0 + r.iter().map(|&(_, w)| w).sum::<f64>())
        .collect();

    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    row_ptr.push(0);
    for (i, row) in rows.into_iter().enumerate() {
        // Merge the diagonal into the sorted neighbor list.
        let mut diag_done = false;
        for (j, w) in row {
            if !diag_done && j > i {
                col_idx.push(i);
                values.push(1.0 / deg[i]);
                diag_done = true;
            }
            col_idx.push(j);
            values.push(w / (deg[i] * deg[j]).sqrt());
        }
        if !diag_done {
            col_idx.push(i);
            values.push(1.0 / deg[i]);
        }
        row_ptr.push(col_idx.len());
    }
    NormalizedAdjacency {
        n,
        row_ptr,
        col_idx,
        values,
        deg,
    }
}

impl NormalizedAdjacency {
    pub fn num_nodes(&self) -> usize {
        self.n
    }

    /// Degrees of `A + I`.
    pub fn degrees(&self) -> &[f64] {
        &self.deg
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored `(column, value)` pairs of row `i`, including the diagonal.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    /// Sparse-dense product `Â · m`.
    pub fn spmm(&self, m: ArrayView2<'_, f64>) -> Array2<f64> {
        assert_eq!(m.nrows(), self.n, "spmm row mismatch");
        let mut out = Array2::zeros((self.n, m.ncols()));
        for i in 0..self.n {
            let mut out_row = out.row_mut(i);
            for (j, v) in self.row(i) {
                out_row.scaled_add(v, &m.row(j));
            }
        }
        out
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut d = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d[[i, j]] = v;
            }
        }
        d
    }
}
