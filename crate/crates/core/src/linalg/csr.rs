//! Symmetric sparse matrices: one shared upper-triangle pattern, many value
//! arrays. The affine stiffness family stores one value array per expansion
//! term on a single pattern, so parameter evaluations are flat vector sums.

use nalgebra::DMatrix;
use std::sync::Arc;

/// Upper-triangle (column >= row) sparsity pattern in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricPattern {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
}

impl SymmetricPattern {
    /// Build from unordered index pairs; entries are mirrored to the upper
    /// triangle and deduplicated.
    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut upper: Vec<(u32, u32)> = pairs
            .into_iter()
            .map(|(i, j)| if i <= j { (i, j) } else { (j, i) })
            .collect();
        upper.sort_unstable();
        upper.dedup();
        let mut row_ptr = vec![0usize; n + 1];
        for &(i, _) in &upper {
            row_ptr[i as usize + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let cols = upper.into_iter().map(|(_, j)| j).collect();
        SymmetricPattern { n, row_ptr, cols }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Columns of the stored (upper) part of row `i`.
    pub fn row_cols(&self, i: usize) -> &[u32] {
        &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    /// Storage slot of entry `(i, j)` (order-insensitive), if present.
    pub fn slot(&self, i: u32, j: u32) -> Option<usize> {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        let range = self.row_range(r as usize);
        let cols = &self.cols[range.clone()];
        cols.binary_search(&c).ok().map(|k| range.start + k)
    }
}

/// Symmetric matrix: shared pattern plus a value array over its slots.
#[derive(Debug, Clone)]
pub struct SymMatrix {
    pattern: Arc<SymmetricPattern>,
    vals: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(pattern: Arc<SymmetricPattern>) -> Self {
        let vals = vec![0.0; pattern.nnz()];
        SymMatrix { pattern, vals }
    }

    pub fn from_values(pattern: Arc<SymmetricPattern>, vals: Vec<f64>) -> Self {
        assert_eq!(vals.len(), pattern.nnz());
        SymMatrix { pattern, vals }
    }

    pub fn pattern(&self) -> &Arc<SymmetricPattern> {
        &self.pattern
    }

    pub fn dim(&self) -> usize {
        self.pattern.n
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.vals
    }

    /// Linear combination `sum_k coeffs[k] * terms[k]` over one shared pattern.
    pub fn combination(terms: &[&SymMatrix], coeffs: &[f64]) -> SymMatrix {
        assert_eq!(terms.len(), coeffs.len());
        assert!(!terms.is_empty());
        let pattern = terms[0].pattern.clone();
        let mut vals = vec![0.0; pattern.nnz()];
        for (t, &c) in terms.iter().zip(coeffs) {
            assert!(Arc::ptr_eq(&t.pattern, &pattern), "patterns must be shared");
            if c == 0.0 {
                continue;
            }
            for (v, &tv) in vals.iter_mut().zip(&t.vals) {
                *v += c * tv;
            }
        }
        SymMatrix { pattern, vals }
    }

    /// `y = A x` with symmetric expansion of the stored upper triangle.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let n = self.pattern.n;
        assert_eq!(x.len(), n);
        assert_eq!(y.len(), n);
        y.fill(0.0);
        for i in 0..n {
            let xi = x[i];
            let mut acc = 0.0;
            for k in self.pattern.row_range(i) {
                let j = self.pattern.cols[k] as usize;
                let v = self.vals[k];
                acc += v * x[j];
                if j != i {
                    y[j] += v * xi;
                }
            }
            y[i] += acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.matvec(x, &mut y);
        y
    }

    /// Inner product `x . (A y)` without allocating.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.pattern.n;
        let mut acc = 0.0;
        for i in 0..n {
            for k in self.pattern.row_range(i) {
                let j = self.pattern.cols[k] as usize;
                let v = self.vals[k];
                acc += v * x[i] * y[j];
                if j != i {
                    acc += v * x[j] * y[i];
                }
            }
        }
        acc
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.pattern.n;
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            for k in self.pattern.row_range(i) {
                let j = self.pattern.cols[k] as usize;
                out[(i, j)] = self.vals[k];
                out[(j, i)] = self.vals[k];
            }
        }
        out
    }

    /// Adjacency lists of the symmetric pattern (neighbours of each node,
    /// excluding the diagonal).
    pub fn adjacency(pattern: &SymmetricPattern) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); pattern.n];
        for i in 0..pattern.n {
            for k in pattern.row_range(i) {
                let j = pattern.cols[k] as usize;
                if j != i {
                    adj[i].push(j as u32);
                    adj[j].push(i as u32);
                }
            }
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SymMatrix {
        // [[4, 1, 0], [1, 3, 2], [0, 2, 5]]
        let pattern = Arc::new(SymmetricPattern::from_pairs(
            3,
            vec![(0, 0), (0, 1), (1, 1), (2, 1), (2, 2)],
        ));
        let mut m = SymMatrix::zeros(pattern);
        let p = m.pattern().clone();
        m.values_mut()[p.slot(0, 0).unwrap()] = 4.0;
        m.values_mut()[p.slot(0, 1).unwrap()] = 1.0;
        m.values_mut()[p.slot(1, 1).unwrap()] = 3.0;
        m.values_mut()[p.slot(1, 2).unwrap()] = 2.0;
        m.values_mut()[p.slot(2, 2).unwrap()] = 5.0;
        m
    }

    #[test]
    fn matvec_matches_dense() {
        let m = sample();
        let x = vec![1.0, -2.0, 0.5];
        let y = m.apply(&x);
        let dense = m.to_dense();
        let yd = dense * nalgebra::DVector::from_column_slice(&x);
        for i in 0..3 {
            assert!((y[i] - yd[i]).abs() < 1e-14);
        }
        assert!((m.bilinear(&x, &x) - x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>()).abs() < 1e-14);
    }

    #[test]
    fn combination_sums_value_arrays() {
        let a = sample();
        let mut b = SymMatrix::zeros(a.pattern().clone());
        b.values_mut().fill(1.0);
        let c = SymMatrix::combination(&[&a, &b], &[2.0, -1.0]);
        let expect = a.to_dense() * 2.0 - b.to_dense();
        assert!((c.to_dense() - expect).abs().max() < 1e-14);
    }
}
