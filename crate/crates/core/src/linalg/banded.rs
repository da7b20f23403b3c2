//! Bandwidth reduction and banded Cholesky factorization.
//!
//! The assembled shell matrices come in a component-major numbering whose
//! bandwidth is poor; a reverse Cuthill-McKee pass brings them to a narrow
//! band so a dense-band Cholesky factors them quickly.

use super::csr::{SymMatrix, SymmetricPattern};
use super::LinalgError;

/// Reverse Cuthill-McKee ordering of a symmetric pattern.
///
/// Returns `perm` with `perm[new] = old`. Disconnected components are handled
/// by restarting from the unvisited node of minimum degree.
pub fn reverse_cuthill_mckee(pattern: &SymmetricPattern) -> Vec<usize> {
    let n = pattern.dim();
    let adj = SymMatrix::adjacency(pattern);
    let degree: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let mut visited = vec![false; n];
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut queue: std::collections::VecDeque<usize> = std::collections::VecDeque::new();

    loop {
        let start = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| degree[i]);
        let Some(start) = start else { break };
        visited[start] = true;
        queue.push_back(start);
        while let Some(node) = queue.pop_front() {
            order.push(node);
            let mut nbrs: Vec<usize> = adj[node]
                .iter()
                .map(|&j| j as usize)
                .filter(|&j| !visited[j])
                .collect();
            nbrs.sort_unstable_by_key(|&j| degree[j]);
            for j in nbrs {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

/// Half bandwidth of a pattern under a permutation (`perm[new] = old`).
fn bandwidth(pattern: &SymmetricPattern, inv: &[usize]) -> usize {
    let mut bw = 0usize;
    for i in 0..pattern.dim() {
        for k in pattern.row_range(i) {
            let j = pattern.row_cols(i)[k - pattern.row_range(i).start] as usize;
            let d = inv[i].abs_diff(inv[j]);
            bw = bw.max(d);
        }
    }
    bw
}

/// Cholesky factor of a symmetric positive definite matrix stored as a dense
/// lower band, after an internal reverse Cuthill-McKee reordering.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    /// Row-major band: entry `(i, j)` with `i - bw <= j <= i` lives at
    /// `i * (bw + 1) + (bw - (i - j))`; the diagonal sits at offset `bw`.
    band: Vec<f64>,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    /// `inv[old] = new`.
    inv: Vec<usize>,
}

impl BandedCholesky {
    /// Factor `a`; fails if a pivot is not strictly positive.
    pub fn factor(a: &SymMatrix) -> Result<Self, LinalgError> {
        let n = a.dim();
        let perm = reverse_cuthill_mckee(a.pattern());
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let bw = bandwidth(a.pattern(), &inv);

        let width = bw + 1;
        let mut band = vec![0.0; n * width];
        // Scatter the permuted matrix into the lower band.
        for i in 0..a.dim() {
            for k in a.pattern().row_range(i) {
                let j = a.pattern().row_cols(i)[k - a.pattern().row_range(i).start] as usize;
                let v = a.values()[k];
                let (pi, pj) = (inv[i], inv[j]);
                let (r, c) = if pi >= pj { (pi, pj) } else { (pj, pi) };
                band[r * width + (bw - (r - c))] = v;
            }
        }

        // In-place banded Cholesky, row by row.
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..i {
                // l_ij = (a_ij - sum_k l_ik l_jk) / l_jj over the band overlap.
                let kmin = lo.max(j.saturating_sub(bw));
                let mut s = band[i * width + (bw - (i - j))];
                for k in kmin..j {
                    s -= band[i * width + (bw - (i - k))] * band[j * width + (bw - (j - k))];
                }
                band[i * width + (bw - (i - j))] = s / band[j * width + bw];
            }
            let mut d = band[i * width + bw];
            for k in lo..i {
                let l = band[i * width + (bw - (i - k))];
                d -= l * l;
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(LinalgError::NotPositiveDefinite { pivot_index: i });
            }
            band[i * width + bw] = d.sqrt();
        }

        Ok(BandedCholesky {
            n,
            bw,
            band,
            perm,
            inv,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.bw
    }

    /// Solve `A x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        let width = self.bw + 1;
        let mut y = vec![0.0; self.n];
        for new in 0..self.n {
            y[new] = x[self.perm[new]];
        }
        // Forward substitution L z = y.
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let mut s = y[i];
            for k in lo..i {
                s -= self.band[i * width + (self.bw - (i - k))] * y[k];
            }
            y[i] = s / self.band[i * width + self.bw];
        }
        // Back substitution L^T x = z.
        for i in (0..self.n).rev() {
            let hi = (i + self.bw).min(self.n - 1);
            let mut s = y[i];
            for k in (i + 1)..=hi {
                s -= self.band[k * width + (self.bw - (k - i))] * y[k];
            }
            y[i] = s / self.band[i * width + self.bw];
        }
        for new in 0..self.n {
            x[self.perm[new]] = y[new];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn ordering(&self) -> &[usize] {
        &self.perm
    }

    pub fn inverse_ordering(&self) -> &[usize] {
        &self.inv
    }
}
