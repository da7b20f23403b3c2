//! Anisotropic sparse-grid collocation.
//!
//! For a monotone multi-index set `A` the collocation operator is a
//! telescoping combination of tensorized Lagrange interpolants at
//! Gauss-Legendre nodes. The grid, the combination terms with their signed
//! coefficients, interpolation and the induced quadrature all live in
//! [`SparseGrid`]; the two collocation algorithms (aligned simple eigenpairs
//! and projected subspaces) consume an ensemble of per-point eigensolves.

use crate::eigsolve::{self, EigenError, EigenPair};
use crate::multiindex::{MultiIndex, MultiIndexSet};
use crate::polychaos::{gauss_nodes, lagrange_value, QuadratureRule};
use crate::shellfem::AffinePencil;
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::collections::HashMap;
use std::fmt;

/// Collocation failures. Flagged points abort the run: a vanishing reference
/// alignment or a singular subspace projection signals that the assumed
/// spectral gap does not hold at that point.
#[derive(Debug)]
pub enum CollocationError {
    /// Eigensolve failed at a grid point.
    PointSolve { point: usize, source: EigenError },
    /// The alignment inner product with the reference vanished.
    SignUndefined { point: usize },
    /// The projection matrix onto the reference basis is singular.
    SingularProjection { point: usize },
    /// Point data of the wrong length was supplied.
    MissingPointData { expected: usize, got: usize },
}

impl fmt::Display for CollocationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CollocationError::PointSolve { point, source } => {
                write!(f, "eigensolve failed at grid point {point}: {source}")
            }
            CollocationError::SignUndefined { point } => write!(
                f,
                "sign alignment undefined at grid point {point}: reference inner product is zero"
            ),
            CollocationError::SingularProjection { point } => {
                write!(f, "subspace projection is singular at grid point {point}")
            }
            CollocationError::MissingPointData { expected, got } => {
                write!(f, "expected values at {expected} grid points, got {got}")
            }
        }
    }
}

impl std::error::Error for CollocationError {}

/// One combination term: a tensor Lagrange rule at level `gamma` entering the
/// operator with an integer coefficient.
#[derive(Debug, Clone)]
pub struct CombinationTerm {
    gamma: MultiIndex,
    coefficient: i64,
    /// Global point ids of the term's tensor nodes, odometer order over the
    /// support dimensions (last active dimension fastest).
    point_ids: Vec<usize>,
}

impl CombinationTerm {
    pub fn level(&self) -> &MultiIndex {
        &self.gamma
    }

    pub fn coefficient(&self) -> i64 {
        self.coefficient
    }
}

/// Sparse collocation grid of a monotone multi-index set.
#[derive(Debug, Clone)]
pub struct SparseGrid {
    dims: usize,
    points: Vec<Vec<f64>>,
    terms: Vec<CombinationTerm>,
    rules: Vec<QuadratureRule>,
    set_len: usize,
}

/// Visit the tensor digits of a support list (last dimension fastest).
fn odometer(support: &[(usize, usize)], mut visit: impl FnMut(&[usize])) {
    let mut digits = vec![0usize; support.len()];
    loop {
        visit(&digits);
        let mut slot = support.len();
        let mut carried = true;
        while carried {
            if slot == 0 {
                return;
            }
            slot -= 1;
            digits[slot] += 1;
            if digits[slot] <= support[slot].1 {
                carried = false;
            } else {
                digits[slot] = 0;
            }
        }
    }
}

impl SparseGrid {
    /// Build the grid and combination terms of a monotone set.
    ///
    /// Node values are generated once per univariate degree and shared, so
    /// equal nodes of different tensor rules are bit-identical and the point
    /// merge needs no tolerance.
    pub fn build(set: &MultiIndexSet) -> SparseGrid {
        assert!(set.is_monotone(), "collocation requires a monotone set");
        let dims = set.max_active_dim();

        // Net combination coefficients: sum over alpha of (-1)^|alpha-gamma|
        // for gamma in the backward-neighbour box of alpha. Monotonicity puts
        // every gamma inside the set.
        let mut coeffs: HashMap<MultiIndex, i64> = HashMap::new();
        for alpha in set.members() {
            let support: Vec<usize> = alpha.support().collect();
            let n_sub = 1usize << support.len();
            for mask in 0..n_sub {
                let mut gamma = alpha.clone();
                let mut drops = 0u32;
                for (bit, &m) in support.iter().enumerate() {
                    if mask & (1 << bit) != 0 {
                        gamma = gamma.minus_unit(m).expect("support entry");
                        drops += 1;
                    }
                }
                let sign = if drops % 2 == 0 { 1 } else { -1 };
                *coeffs.entry(gamma).or_insert(0) += sign;
            }
        }
        coeffs.retain(|_, c| *c != 0);

        let max_degree = set
            .members()
            .iter()
            .flat_map(|a| a.entries().iter().map(|&(_, e)| e as usize))
            .max()
            .unwrap_or(0);
        let rules: Vec<QuadratureRule> = (0..=max_degree).map(gauss_nodes).collect();

        // Deterministic term order.
        let mut levels: Vec<(MultiIndex, i64)> = coeffs.into_iter().collect();
        let level_set =
            MultiIndexSet::from_members(levels.iter().map(|(g, _)| g.clone()).collect());
        levels.sort_by_key(|(g, _)| level_set.position(g).expect("member"));

        // The complete point set is the union of the member tensor grids
        // (for monotone sets this covers every combination level). Points
        // whose net combination weight vanishes still belong to the grid.
        let mut points: Vec<Vec<f64>> = Vec::new();
        let mut lookup: HashMap<Vec<u64>, usize> = HashMap::new();
        for alpha in set.members() {
            let support: Vec<(usize, usize)> = alpha
                .entries()
                .iter()
                .map(|&(d, e)| (d as usize, e as usize))
                .collect();
            odometer(&support, |digits| {
                let mut coord = vec![0.0f64; dims];
                for (slot, &(dim, degree)) in support.iter().enumerate() {
                    coord[dim - 1] = rules[degree].nodes()[digits[slot]];
                }
                let key: Vec<u64> = coord.iter().map(|v| v.to_bits()).collect();
                lookup.entry(key).or_insert_with(|| {
                    points.push(coord);
                    points.len() - 1
                });
            });
        }

        let mut terms = Vec::with_capacity(levels.len());
        for (gamma, coefficient) in levels {
            let support: Vec<(usize, usize)> = gamma
                .entries()
                .iter()
                .map(|&(d, e)| (d as usize, e as usize))
                .collect();
            let count: usize = support.iter().map(|&(_, e)| e + 1).product();
            let mut point_ids = Vec::with_capacity(count);
            odometer(&support, |digits| {
                let mut coord = vec![0.0f64; dims];
                for (slot, &(dim, degree)) in support.iter().enumerate() {
                    coord[dim - 1] = rules[degree].nodes()[digits[slot]];
                }
                let key: Vec<u64> = coord.iter().map(|v| v.to_bits()).collect();
                point_ids.push(lookup[&key]);
            });
            terms.push(CombinationTerm {
                gamma,
                coefficient,
                point_ids,
            });
        }

        SparseGrid {
            dims,
            points,
            terms,
            rules,
            set_len: set.len(),
        }
    }

    /// Number of distinct collocation points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Active parameter dimensions (coordinates beyond them are zero).
    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn terms(&self) -> &[CombinationTerm] {
        &self.terms
    }

    /// Cardinality of the generating index set (the point count is bounded by
    /// its square).
    pub fn set_len(&self) -> usize {
        self.set_len
    }

    /// Weights of the interpolant at `xi`: the interpolated value of point
    /// data is the dot product of these weights with the values.
    /// Coordinates of `xi` beyond the active dimensions are ignored.
    pub fn interpolation_weights(&self, xi: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.points.len()];
        for term in &self.terms {
            let support: Vec<(usize, usize)> = term
                .gamma
                .entries()
                .iter()
                .map(|&(d, e)| (d as usize, e as usize))
                .collect();
            let mut pos = 0usize;
            odometer(&support, |digits| {
                let mut val = term.coefficient as f64;
                for (slot, &(dim, degree)) in support.iter().enumerate() {
                    let x = xi.get(dim - 1).copied().unwrap_or(0.0);
                    val *= lagrange_value(&self.rules[degree], digits[slot], x);
                }
                w[term.point_ids[pos]] += val;
                pos += 1;
            });
        }
        w
    }

    /// Evaluate the interpolant of scalar point data at `xi`.
    pub fn interpolate(&self, values: &[f64], xi: &[f64]) -> Result<f64, CollocationError> {
        if values.len() != self.points.len() {
            return Err(CollocationError::MissingPointData {
                expected: self.points.len(),
                got: values.len(),
            });
        }
        let w = self.interpolation_weights(xi);
        Ok(w.iter().zip(values).map(|(a, b)| a * b).sum())
    }

    /// Quadrature weights of the combination rule: the expected value of
    /// point data is the weighted sum over points. Individual weights can be
    /// negative.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.points.len()];
        for term in &self.terms {
            let support: Vec<(usize, usize)> = term
                .gamma
                .entries()
                .iter()
                .map(|&(d, e)| (d as usize, e as usize))
                .collect();
            let mut pos = 0usize;
            odometer(&support, |digits| {
                let mut val = term.coefficient as f64;
                for (slot, &(_dim, degree)) in support.iter().enumerate() {
                    val *= self.rules[degree].weights()[digits[slot]];
                }
                w[term.point_ids[pos]] += val;
                pos += 1;
            });
        }
        w
    }

    /// Mean and variance of scalar point data under the combination
    /// quadrature (variance as second moment minus squared mean).
    pub fn statistics(&self, values: &[f64]) -> Result<(f64, f64), CollocationError> {
        if values.len() != self.points.len() {
            return Err(CollocationError::MissingPointData {
                expected: self.points.len(),
                got: values.len(),
            });
        }
        let w = self.quadrature_weights();
        let mean: f64 = w.iter().zip(values).map(|(a, b)| a * b).sum();
        let second: f64 = w.iter().zip(values).map(|(a, b)| a * b * b).sum();
        Ok((mean, second - mean * mean))
    }
}

/// Eigenpairs of the pencil at every grid point (the shared ensemble of the
/// two collocation algorithms).
#[derive(Debug)]
pub struct PointSolutions {
    pairs: Vec<Vec<EigenPair>>,
}

impl PointSolutions {
    /// Wrap externally computed per-point eigenpairs (tests and tools).
    pub fn from_pairs(pairs: Vec<Vec<EigenPair>>) -> Self {
        PointSolutions { pairs }
    }

    pub fn pairs_at(&self, point: usize) -> &[EigenPair] {
        &self.pairs[point]
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Solve the pencil eigenproblem at every grid point for the `count`
/// smallest pairs; points run in parallel.
pub fn solve_at_points(
    pencil: &AffinePencil,
    grid: &SparseGrid,
    count: usize,
    tol: f64,
) -> Result<PointSolutions, CollocationError> {
    let results: Vec<Result<Vec<EigenPair>, CollocationError>> = grid
        .points()
        .par_iter()
        .enumerate()
        .map(|(idx, xi)| {
            let k = pencil.stiffness_at(xi);
            eigsolve::smallest_eigs(&k, pencil.mass(), count, tol)
                .map_err(|source| CollocationError::PointSolve { point: idx, source })
        })
        .collect();
    let mut pairs = Vec::with_capacity(results.len());
    for r in results {
        pairs.push(r?);
    }
    Ok(PointSolutions { pairs })
}

/// Surrogate of a simple (separated) smallest eigenpair: per-point values and
/// sign-aligned vectors, interpolated through the grid.
#[derive(Debug)]
pub struct CollocatedEigenpair {
    pub lambdas: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl CollocatedEigenpair {
    /// Evaluate the eigenvalue surrogate at a parameter point.
    pub fn lambda_at(&self, grid: &SparseGrid, xi: &[f64]) -> f64 {
        let w = grid.interpolation_weights(xi);
        w.iter().zip(&self.lambdas).map(|(a, b)| a * b).sum()
    }

    /// Evaluate the eigenvector surrogate at a parameter point.
    pub fn vector_at(&self, grid: &SparseGrid, xi: &[f64]) -> Vec<f64> {
        let w = grid.interpolation_weights(xi);
        let n = self.vectors[0].len();
        let mut out = vec![0.0; n];
        for (wi, v) in w.iter().zip(&self.vectors) {
            if *wi != 0.0 {
                for (o, x) in out.iter_mut().zip(v) {
                    *o += wi * x;
                }
            }
        }
        out
    }
}

/// Collocation of a simple smallest eigenpair: each per-point eigenvector has
/// its sign fixed against the reference vector in the mass inner product.
pub fn collocate_simple(
    pencil: &AffinePencil,
    solutions: &PointSolutions,
    reference: &[f64],
) -> Result<CollocatedEigenpair, CollocationError> {
    let mut lambdas = Vec::with_capacity(solutions.len());
    let mut vectors = Vec::with_capacity(solutions.len());
    for (idx, pairs) in solutions.pairs.iter().enumerate() {
        let pair = &pairs[0];
        let ip = pencil.m_inner(reference, &pair.vector);
        if ip.abs() <= 1e-12 {
            return Err(CollocationError::SignUndefined { point: idx });
        }
        lambdas.push(pair.value);
        let mut v = pair.vector.clone();
        if ip < 0.0 {
            for x in &mut v {
                *x = -*x;
            }
        }
        vectors.push(v);
    }
    Ok(CollocatedEigenpair { lambdas, vectors })
}

/// Collocated eigenspace: per-point eigenvalues and the basis vectors
/// projected against a fixed reference basis, so the representation depends
/// only on the subspace spanned at each point.
#[derive(Debug)]
pub struct CollocatedSubspace {
    /// Per point: the `S` smallest eigenvalues.
    pub lambdas: Vec<Vec<f64>>,
    /// Per point: the `S` projected basis vectors.
    pub basis: Vec<Vec<Vec<f64>>>,
}

/// Collocation of the `S`-dimensional smallest eigenspace with projections
/// `p_i = sum_j <ref_i, b_j>_M b_j` onto the reference basis.
pub fn collocate_subspace(
    pencil: &AffinePencil,
    solutions: &PointSolutions,
    references: &[Vec<f64>],
) -> Result<CollocatedSubspace, CollocationError> {
    let s = references.len();
    assert!(s >= 1);
    let mut lambdas = Vec::with_capacity(solutions.len());
    let mut basis = Vec::with_capacity(solutions.len());
    for (idx, pairs) in solutions.pairs.iter().enumerate() {
        assert!(pairs.len() >= s, "ensemble must hold at least S pairs");
        let mut proj = DMatrix::zeros(s, s);
        for i in 0..s {
            for j in 0..s {
                proj[(i, j)] = pencil.m_inner(&references[i], &pairs[j].vector);
            }
        }
        let svd = proj.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin <= 1e-12 * smax.max(f64::MIN_POSITIVE) {
            return Err(CollocationError::SingularProjection { point: idx });
        }
        let n = pairs[0].vector.len();
        let mut projected = Vec::with_capacity(s);
        for i in 0..s {
            let mut p = vec![0.0; n];
            for j in 0..s {
                let c = proj[(i, j)];
                for (o, x) in p.iter_mut().zip(&pairs[j].vector) {
                    *o += c * x;
                }
            }
            projected.push(p);
        }
        lambdas.push(pairs.iter().take(s).map(|p| p.value).collect());
        basis.push(projected);
    }
    Ok(CollocatedSubspace { lambdas, basis })
}
