//! Normalized Legendre polynomials, Gauss-Legendre rules, Lagrange cardinal
//! values and the moment matrices coupling a polynomial chaos basis.
//!
//! Everything here is taken with respect to the uniform *probability* measure
//! on `[-1, 1]`: weights sum to one and `E[L_n^2] = 1` for the normalized
//! polynomials.

use crate::multiindex::{MultiIndex, MultiIndexSet};
use nalgebra::DMatrix;

/// Newton tolerance for Legendre root finding.
const NODE_TOL: f64 = 1e-15;

/// Raw (unnormalized) Legendre polynomial `L_n(x)` by three-term recurrence.
pub fn legendre_raw(n: usize, x: f64) -> f64 {
    legendre_raw_with_derivative(n, x).0
}

/// `(L_n(x), L_n'(x))`.
fn legendre_raw_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut prev = 1.0;
    let mut cur = x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    let nf = n as f64;
    let deriv = if (x.abs() - 1.0).abs() < 1e-14 {
        // Limit value at the endpoints.
        let sign = if x > 0.0 { 1.0 } else { (-1.0f64).powi(n as i32 + 1) };
        sign * nf * (nf + 1.0) / 2.0
    } else {
        nf * (prev - x * cur) / (1.0 - x * x)
    };
    (cur, deriv)
}

/// Legendre polynomial normalized to unit mean square under the uniform
/// probability measure: `E[legendre_value(n, .)^2] = 1`.
pub fn legendre_value(n: usize, x: f64) -> f64 {
    ((2 * n + 1) as f64).sqrt() * legendre_raw(n, x)
}

/// Multivariate normalized Legendre polynomial for a multi-index, evaluated at
/// `xi` (`xi[m-1]` is the coordinate of dimension `m`).
///
/// Panics if `xi` is shorter than the largest active dimension of `alpha`.
pub fn lambda_value(alpha: &MultiIndex, xi: &[f64]) -> f64 {
    let mut prod = 1.0;
    for &(dim, exp) in alpha.entries() {
        let m = dim as usize;
        assert!(
            m <= xi.len(),
            "point has {} coordinates but the index is active in dimension {m}",
            xi.len()
        );
        prod *= legendre_value(exp as usize, xi[m - 1]);
    }
    prod
}

/// Gauss-Legendre rule normalized for the uniform probability measure.
///
/// A rule of `p + 1` points (`gauss_nodes(p)`) integrates polynomials of
/// degree `2p + 1` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate `f` against the uniform probability measure on `[-1, 1]`.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Nodes and probability weights of the `(p + 1)`-point Gauss-Legendre rule:
/// the zeros of the Legendre polynomial of degree `p + 1`.
///
/// Roots are found by Newton iteration on the recurrence with asymptotic
/// initial guesses; symmetry is enforced exactly so equal nodes of different
/// rules (the origin) share one bit pattern.
pub fn gauss_nodes(p: usize) -> QuadratureRule {
    let n = p + 1;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n / 2;
    for i in 0..half {
        // Descending root enumeration; this targets the positive half.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..200 {
            let (l, dl) = legendre_raw_with_derivative(n, x);
            let dx = l / dl;
            x -= dx;
            if dx.abs() <= NODE_TOL {
                break;
            }
        }
        let (_, dl) = legendre_raw_with_derivative(n, x);
        // Standard weight 2 / ((1 - x^2) L'^2), halved for the probability
        // measure.
        let w = 1.0 / ((1.0 - x * x) * dl * dl);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        let (_, dl) = legendre_raw_with_derivative(n, 0.0);
        nodes[half] = 0.0;
        weights[half] = 1.0 / (dl * dl);
    }
    QuadratureRule { nodes, weights }
}

/// Lagrange cardinal polynomial of node `k` of `rule`, evaluated at `x`.
///
/// Satisfies `lagrange_value(rule, k, node_j) = delta_kj`. Panics if `k` is
/// out of range.
pub fn lagrange_value(rule: &QuadratureRule, k: usize, x: f64) -> f64 {
    assert!(k < rule.len(), "node index {k} out of range ({})", rule.len());
    let xk = rule.nodes[k];
    let mut prod = 1.0;
    for (j, &xj) in rule.nodes.iter().enumerate() {
        if j != k {
            prod *= (x - xj) / (xk - xj);
        }
    }
    prod
}

/// Univariate moment `E[L_a L_b L_c]` of normalized Legendre polynomials,
/// by Gauss quadrature of sufficient degree (exact: the integrand is a
/// polynomial of degree `a + b + c`).
fn univariate_triple(a: usize, b: usize, c: usize) -> f64 {
    // Parity and triangle conditions give exact zeros.
    if (a + b + c) % 2 == 1 {
        return 0.0;
    }
    let (lo, hi) = (a.min(b).min(c), a.max(b).max(c));
    let mid = a + b + c - lo - hi;
    if hi > lo + mid {
        return 0.0;
    }
    let rule = gauss_nodes((a + b + c) / 2);
    rule.integrate(|x| legendre_value(a, x) * legendre_value(b, x) * legendre_value(c, x))
}

/// Univariate moment `E[x L_n L_{n+1}]` of normalized Legendre polynomials.
fn univariate_first(n: usize) -> f64 {
    let rule = gauss_nodes((2 * n + 2) / 2);
    rule.integrate(|x| x * legendre_value(n, x) * legendre_value(n + 1, x))
}

/// Triple product `E[Lambda_a Lambda_b Lambda_c]` of multivariate normalized
/// Legendre polynomials: the product of univariate moments over the active
/// dimensions.
pub fn triple_product(a: &MultiIndex, b: &MultiIndex, c: &MultiIndex) -> f64 {
    let mut prod = 1.0;
    let mut dims: Vec<usize> = a.support().chain(b.support()).chain(c.support()).collect();
    dims.sort_unstable();
    dims.dedup();
    for m in dims {
        let v = univariate_triple(a.get(m) as usize, b.get(m) as usize, c.get(m) as usize);
        if v == 0.0 {
            return 0.0;
        }
        prod *= v;
    }
    prod
}

/// First-order moment `E[xi_m Lambda_a Lambda_b]`: zero unless the indices
/// differ by exactly one in dimension `m` and agree elsewhere.
pub fn first_moment(m: usize, a: &MultiIndex, b: &MultiIndex) -> f64 {
    assert!(m >= 1, "dimensions are 1-based");
    let (am, bm) = (a.get(m), b.get(m));
    if am.abs_diff(bm) != 1 {
        return 0.0;
    }
    // All other dimensions must match exactly.
    let others_match = a
        .support()
        .chain(b.support())
        .filter(|&d| d != m)
        .all(|d| a.get(d) == b.get(d));
    if !others_match {
        return 0.0;
    }
    univariate_first(am.min(bm) as usize)
}

/// Mean and variance of a function given by coefficients in an orthonormal
/// basis whose first member is the constant: mean is the leading coefficient,
/// variance the sum of squares of the rest.
pub fn pc_mean_var(coeffs: &[f64]) -> (f64, f64) {
    assert!(!coeffs.is_empty(), "empty coefficient vector");
    let mean = coeffs[0];
    let var = coeffs[1..].iter().map(|v| v * v).sum();
    (mean, var)
}

/// Sparse symmetric matrix stored as full rows of `(column, value)` pairs.
#[derive(Debug, Clone, Default)]
pub struct SparseRows {
    rows: Vec<Vec<(u32, f64)>>,
}

impl SparseRows {
    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.rows.len();
        let mut out = DMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                out[(i, j as usize)] = v;
            }
        }
        out
    }
}

/// Upper-triangle coordinate list (`row <= col`) of a symmetric matrix.
#[derive(Debug, Clone, Default)]
pub struct SparseUpper {
    entries: Vec<(u32, u32, f64)>,
}

impl SparseUpper {
    pub fn entries(&self) -> &[(u32, u32, f64)] {
        &self.entries
    }

    pub fn to_dense(&self, n: usize) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(n, n);
        for &(i, j, v) in &self.entries {
            out[(i as usize, j as usize)] = v;
            out[(j as usize, i as usize)] = v;
        }
        out
    }
}

/// Moment matrices of a polynomial chaos basis indexed by a monotone set `A`
/// with `P` members:
///
/// * `G^(m)`, `m = 0..=M_A`: entries `E[xi_m Lambda_a Lambda_b]` (with
///   `G^(0)` the identity), nonzero only between indices differing by one in
///   dimension `m`;
/// * `G^(a)`, `a` in `A`: entries `E[Lambda_a Lambda_b Lambda_c]`.
#[derive(Debug, Clone)]
pub struct MomentMatrices {
    set: MultiIndexSet,
    g_m: Vec<SparseRows>,
    g_alpha: Vec<SparseUpper>,
}

impl MomentMatrices {
    /// Assemble all moment matrices for a monotone index set.
    pub fn build(set: &MultiIndexSet) -> Self {
        assert!(set.is_monotone(), "index set must be monotone");
        let p = set.len();
        let m_max = set.max_active_dim();

        // G^(0) is the identity; G^(m) couples neighbours in dimension m.
        let mut g_m = Vec::with_capacity(m_max + 1);
        let mut identity = SparseRows {
            rows: vec![Vec::new(); p],
        };
        for i in 0..p {
            identity.rows[i].push((i as u32, 1.0));
        }
        g_m.push(identity);
        for m in 1..=m_max {
            let mut rows = vec![Vec::new(); p];
            for (i, alpha) in set.members().iter().enumerate() {
                let up = alpha.plus_unit(m);
                if let Some(j) = set.position(&up) {
                    let v = univariate_first(alpha.get(m) as usize);
                    rows[i].push((j as u32, v));
                    rows[j].push((i as u32, v));
                }
            }
            for row in &mut rows {
                row.sort_unstable_by_key(|&(j, _)| j);
            }
            g_m.push(SparseRows { rows });
        }

        // Memoized univariate triples up to the largest degree in the set.
        let dmax = set
            .members()
            .iter()
            .flat_map(|a| a.entries().iter().map(|&(_, e)| e as usize))
            .max()
            .unwrap_or(0);
        let tab = TripleTable::new(dmax);

        let mut g_alpha = Vec::with_capacity(p);
        for alpha in set.members() {
            let mut entries = Vec::new();
            for bi in 0..p {
                let beta = &set.members()[bi];
                for ci in bi..p {
                    let gamma = &set.members()[ci];
                    if let Some(v) = tab.triple(alpha, beta, gamma) {
                        entries.push((bi as u32, ci as u32, v));
                    }
                }
            }
            g_alpha.push(SparseUpper { entries });
        }

        MomentMatrices {
            set: set.clone(),
            g_m,
            g_alpha,
        }
    }

    pub fn set(&self) -> &MultiIndexSet {
        &self.set
    }

    /// Basis size `P`.
    pub fn basis_len(&self) -> usize {
        self.set.len()
    }

    /// Largest active dimension `M_A`.
    pub fn max_dim(&self) -> usize {
        self.g_m.len() - 1
    }

    /// `G^(m)` as sparse rows, `0 <= m <= M_A`.
    pub fn g_m(&self, m: usize) -> &SparseRows {
        &self.g_m[m]
    }

    /// `G^(alpha)` for the `i`-th member of the set (canonical order).
    pub fn g_alpha(&self, i: usize) -> &SparseUpper {
        &self.g_alpha[i]
    }

    /// Dense `Delta(c) = sum_a c_a G^(a)`, the truncated multiplication
    /// operator by the function with coefficients `c`.
    pub fn delta(&self, coeffs: &[f64]) -> DMatrix<f64> {
        let p = self.basis_len();
        assert_eq!(coeffs.len(), p);
        let mut out = DMatrix::zeros(p, p);
        for (ai, g) in self.g_alpha.iter().enumerate() {
            let c = coeffs[ai];
            if c == 0.0 {
                continue;
            }
            for &(b, g2, v) in &g.entries {
                let (b, g2) = (b as usize, g2 as usize);
                out[(b, g2)] += c * v;
                if b != g2 {
                    out[(g2, b)] += c * v;
                }
            }
        }
        out
    }

    /// For a matrix of pairings `W[b, c]`, return the vector with components
    /// `sum_{b,c} E[Lambda_a Lambda_b Lambda_c] W[b, c]` over `a` in `A`.
    /// `W` need not be symmetric.
    pub fn project_bilinear(&self, w: &DMatrix<f64>) -> Vec<f64> {
        let p = self.basis_len();
        assert_eq!(w.nrows(), p);
        assert_eq!(w.ncols(), p);
        self.g_alpha
            .iter()
            .map(|g| {
                let mut acc = 0.0;
                for &(b, c, v) in &g.entries {
                    let (b, c) = (b as usize, c as usize);
                    if b == c {
                        acc += v * w[(b, c)];
                    } else {
                        acc += v * (w[(b, c)] + w[(c, b)]);
                    }
                }
                acc
            })
            .collect()
    }
}

/// Lazy table of univariate triples for degrees up to `dmax`.
struct TripleTable {
    dmax: usize,
    values: Vec<f64>,
}

impl TripleTable {
    fn new(dmax: usize) -> Self {
        let n = dmax + 1;
        let mut values = vec![0.0; n * n * n];
        for a in 0..=dmax {
            for b in 0..=dmax {
                for c in 0..=dmax {
                    values[(a * n + b) * n + c] = univariate_triple(a, b, c);
                }
            }
        }
        TripleTable { dmax, values }
    }

    fn uni(&self, a: usize, b: usize, c: usize) -> f64 {
        let n = self.dmax + 1;
        self.values[(a * n + b) * n + c]
    }

    /// Product over active dimensions; `None` when it vanishes.
    fn triple(&self, a: &MultiIndex, b: &MultiIndex, c: &MultiIndex) -> Option<f64> {
        let mut prod = 1.0;
        let mut ia = a.entries().iter().peekable();
        let mut ib = b.entries().iter().peekable();
        let mut ic = c.entries().iter().peekable();
        loop {
            let next_dim = [
                ia.peek().map(|&&(d, _)| d),
                ib.peek().map(|&&(d, _)| d),
                ic.peek().map(|&&(d, _)| d),
            ]
            .into_iter()
            .flatten()
            .min();
            let Some(d) = next_dim else { break };
            let take = |it: &mut std::iter::Peekable<std::slice::Iter<(u32, u32)>>| -> usize {
                match it.peek() {
                    Some(&&(dd, e)) if dd == d => {
                        it.next();
                        e as usize
                    }
                    _ => 0,
                }
            };
            let (ea, eb, ec) = (take(&mut ia), take(&mut ib), take(&mut ic));
            // Exact zero tests first: parity and triangle condition.
            if (ea + eb + ec) % 2 == 1 {
                return None;
            }
            let hi = ea.max(eb).max(ec);
            if 2 * hi > ea + eb + ec {
                return None;
            }
            prod *= self.uni(ea, eb, ec);
        }
        if prod == 0.0 {
            None
        } else {
            Some(prod)
        }
    }
}
