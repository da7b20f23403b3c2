//! Stochastic Galerkin solvers: spectral inverse iteration for a simple
//! smallest eigenpair and spectral subspace iteration for an eigencluster.
//!
//! Solution coefficients live on the polynomial chaos basis of a monotone
//! index set `A` (size `P`) tensorized with the spatial dofs (size `N`). The
//! central operators are Kronecker-structured and never assembled:
//!
//! * `Khat = sum_m G^(m) (x) K^(m)` (stiffness),
//! * `Mhat = I_P (x) M` (mass),
//! * `T(s) = Delta(s) (x) I_N` with the small dense multiplication operator
//!   `Delta(s) = sum_a s_a G^(a)`.
//!
//! Linear systems in `Khat` are solved by conjugate gradients preconditioned
//! with mean-stiffness solves per chaos block (a dense reduction handles tiny
//! systems); the nonlinear normalization `F(s, z) = 0` goes through Newton
//! with the exact Jacobian `2 Delta(s)`.

use crate::linalg::{BandedCholesky, LinalgError, SymMatrix};
use crate::polychaos::MomentMatrices;
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::fmt;

/// Default tolerance of the inner (conjugate gradient) solver.
pub const DEFAULT_INNER_TOL: f64 = 1e-10;
/// Iteration cap of the inner solver.
const MAX_CG_ITERATIONS: usize = 1000;
/// Newton iteration cap for the normalization system.
const MAX_NEWTON_STEPS: usize = 50;
/// Newton increment tolerance.
const NEWTON_TOL: f64 = 1e-13;
/// Systems up to this total size are solved by dense Cholesky instead of
/// conjugate gradients.
const DENSE_CUTOFF: usize = 5000;

/// Spectral solver failures.
#[derive(Debug)]
pub enum SpectralError {
    DimensionMismatch { expected: usize, got: usize },
    /// The mean stiffness block failed to factorize.
    Factorization(LinalgError),
    /// Conjugate gradients did not reach the tolerance.
    InnerSolve { iterations: usize, residual: f64 },
    /// Newton failed on the normalization system.
    Normalization { steps: usize, residual: f64 },
    /// The multiplication operator of the normalization is singular.
    SingularDelta,
    /// Outer iteration budget exhausted.
    MaxIterations { steps: usize, last_delta: f64 },
}

impl fmt::Display for SpectralError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralError::DimensionMismatch { expected, got } => {
                write!(f, "coefficient length {got} does not match {expected}")
            }
            SpectralError::Factorization(e) => write!(f, "mean stiffness factorization: {e}"),
            SpectralError::InnerSolve {
                iterations,
                residual,
            } => write!(
                f,
                "inner solver stalled after {iterations} iterations at residual {residual:e}"
            ),
            SpectralError::Normalization { steps, residual } => write!(
                f,
                "normalization Newton failed after {steps} steps (residual {residual:e})"
            ),
            SpectralError::SingularDelta => {
                write!(f, "multiplication operator Delta(s) is singular")
            }
            SpectralError::MaxIterations { steps, last_delta } => write!(
                f,
                "no convergence within {steps} outer iterations (last increment {last_delta:e})"
            ),
        }
    }
}

impl std::error::Error for SpectralError {}

/// Coefficient block over (chaos index, spatial dof), stored row-major with
/// the chaos index slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVector {
    data: Vec<f64>,
    chaos_len: usize,
    spatial_len: usize,
}

impl SpectralVector {
    pub fn zeros(chaos_len: usize, spatial_len: usize) -> Self {
        SpectralVector {
            data: vec![0.0; chaos_len * spatial_len],
            chaos_len,
            spatial_len,
        }
    }

    /// A deterministic vector: `v` placed in the leading (mean) chaos block.
    pub fn from_deterministic(chaos_len: usize, v: &[f64]) -> Self {
        let mut out = Self::zeros(chaos_len, v.len());
        out.block_mut(0).copy_from_slice(v);
        out
    }

    pub fn from_data(data: Vec<f64>, chaos_len: usize, spatial_len: usize) -> Self {
        assert_eq!(data.len(), chaos_len * spatial_len);
        SpectralVector {
            data,
            chaos_len,
            spatial_len,
        }
    }

    pub fn chaos_len(&self) -> usize {
        self.chaos_len
    }

    pub fn spatial_len(&self) -> usize {
        self.spatial_len
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn block(&self, alpha: usize) -> &[f64] {
        &self.data[alpha * self.spatial_len..(alpha + 1) * self.spatial_len]
    }

    pub fn block_mut(&mut self, alpha: usize) -> &mut [f64] {
        &mut self.data[alpha * self.spatial_len..(alpha + 1) * self.spatial_len]
    }

    /// Pointwise evaluation `sum_a v_a Lambda_a(xi)` of the represented
    /// function at a parameter point.
    pub fn evaluate(&self, moments: &MomentMatrices, xi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.spatial_len];
        for (ai, alpha) in moments.set().members().iter().enumerate() {
            let w = crate::polychaos::lambda_value(alpha, xi);
            if w != 0.0 {
                for (o, v) in out.iter_mut().zip(self.block(ai)) {
                    *o += w * v;
                }
            }
        }
        out
    }

    fn as_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.chaos_len, self.spatial_len, &self.data)
    }

    fn from_matrix(m: &DMatrix<f64>) -> Self {
        let (p, n) = (m.nrows(), m.ncols());
        let mut data = vec![0.0; p * n];
        for a in 0..p {
            for i in 0..n {
                data[a * n + i] = m[(a, i)];
            }
        }
        SpectralVector {
            data,
            chaos_len: p,
            spatial_len: n,
        }
    }
}

/// Chaos coefficients of a scalar quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralScalar {
    data: Vec<f64>,
}

impl SpectralScalar {
    pub fn coefficients(&self) -> &[f64] {
        &self.data
    }

    /// Mean and variance of the represented scalar.
    pub fn mean_var(&self) -> (f64, f64) {
        crate::polychaos::pc_mean_var(&self.data)
    }

    /// Pointwise evaluation at a parameter point.
    pub fn evaluate(&self, moments: &MomentMatrices, xi: &[f64]) -> f64 {
        moments
            .set()
            .members()
            .iter()
            .zip(&self.data)
            .map(|(alpha, c)| c * crate::polychaos::lambda_value(alpha, xi))
            .sum()
    }
}

/// Progress record of an outer iteration.
#[derive(Debug, Clone, Default)]
pub struct IterationReport {
    /// Mass-norm increments per outer step.
    pub deltas: Vec<f64>,
    /// Inner solver iterations per outer step (zero on the dense path).
    pub inner_iterations: Vec<usize>,
    pub converged: bool,
    pub steps: usize,
    /// Residual of the normalization system at the final step.
    pub normalization_residual: f64,
}

/// The Kronecker-structured stiffness/mass pair over a chaos basis, with the
/// mean-stiffness preconditioner.
pub struct KhatOperator<'a> {
    k_terms: &'a [SymMatrix],
    mass: &'a SymMatrix,
    moments: &'a MomentMatrices,
    /// Per output chaos block: contributing `(term, source block, weight)`.
    adjacency: Vec<Vec<(u32, u32, f64)>>,
    precond: BandedCholesky,
    dense: Option<nalgebra::Cholesky<f64, nalgebra::Dyn>>,
    chaos_len: usize,
    spatial_len: usize,
}

impl<'a> KhatOperator<'a> {
    /// Couple a matrix family `K^(0..M)` and mass with the moment matrices of
    /// a chaos basis. Terms beyond the basis's active dimensions (or vice
    /// versa) are inactive.
    pub fn new(
        k_terms: &'a [SymMatrix],
        mass: &'a SymMatrix,
        moments: &'a MomentMatrices,
    ) -> Result<Self, SpectralError> {
        let p = moments.basis_len();
        let n = mass.dim();
        let m_active = moments.max_dim().min(k_terms.len() - 1);
        let mut adjacency: Vec<Vec<(u32, u32, f64)>> = vec![Vec::new(); p];
        for m in 0..=m_active {
            let g = moments.g_m(m);
            for (alpha, adj) in adjacency.iter_mut().enumerate() {
                for &(beta, w) in g.row(alpha) {
                    adj.push((m as u32, beta, w));
                }
            }
        }
        let precond = BandedCholesky::factor(&k_terms[0]).map_err(SpectralError::Factorization)?;
        let dense = if p * n <= DENSE_CUTOFF {
            let mut kd = DMatrix::zeros(p * n, p * n);
            for m in 0..=m_active {
                let gm = moments.g_m(m).to_dense();
                let km = k_terms[m].to_dense();
                for a in 0..p {
                    for b in 0..p {
                        let g = gm[(a, b)];
                        if g != 0.0 {
                            for i in 0..n {
                                for j in 0..n {
                                    kd[(a * n + i, b * n + j)] += g * km[(i, j)];
                                }
                            }
                        }
                    }
                }
            }
            kd.cholesky()
        } else {
            None
        };
        Ok(KhatOperator {
            k_terms,
            mass,
            moments,
            adjacency,
            precond,
            dense,
            chaos_len: p,
            spatial_len: n,
        })
    }

    pub fn chaos_len(&self) -> usize {
        self.chaos_len
    }

    pub fn spatial_len(&self) -> usize {
        self.spatial_len
    }

    pub fn moments(&self) -> &MomentMatrices {
        self.moments
    }

    pub fn mass(&self) -> &SymMatrix {
        self.mass
    }

    fn check(&self, v: &SpectralVector) -> Result<(), SpectralError> {
        let expected = self.chaos_len * self.spatial_len;
        if v.data.len() != expected {
            return Err(SpectralError::DimensionMismatch {
                expected,
                got: v.data.len(),
            });
        }
        Ok(())
    }

    /// Matrix-free application `sum_m (G^(m) (x) K^(m)) v`.
    pub fn apply(&self, v: &SpectralVector) -> Result<SpectralVector, SpectralError> {
        self.check(v)?;
        let n = self.spatial_len;
        let mut out = SpectralVector::zeros(self.chaos_len, n);
        out.data
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(alpha, out_block)| {
                let mut scratch = vec![0.0; n];
                for &(m, beta, w) in &self.adjacency[alpha] {
                    self.k_terms[m as usize].matvec(v.block(beta as usize), &mut scratch);
                    for (o, s) in out_block.iter_mut().zip(&scratch) {
                        *o += w * s;
                    }
                }
            });
        Ok(out)
    }

    /// Block-diagonal mass application `(I (x) M) v`.
    pub fn apply_mass(&self, v: &SpectralVector) -> Result<SpectralVector, SpectralError> {
        self.check(v)?;
        let n = self.spatial_len;
        let mut out = SpectralVector::zeros(self.chaos_len, n);
        for alpha in 0..self.chaos_len {
            self.mass.matvec(v.block(alpha), out.block_mut(alpha));
        }
        Ok(out)
    }

    /// Mass norm `sqrt(sum_a v_a . M v_a)` of a coefficient block.
    pub fn mass_norm(&self, v: &SpectralVector) -> f64 {
        (0..self.chaos_len)
            .map(|a| self.mass.bilinear(v.block(a), v.block(a)))
            .sum::<f64>()
            .max(0.0)
            .sqrt()
    }

    /// Solve `Khat x = rhs` to the relative residual `tol`; `x0` warm-starts
    /// the conjugate gradient iteration. Small systems go through the dense
    /// factorization (then the iteration count reports as zero).
    pub fn solve(
        &self,
        rhs: &SpectralVector,
        x0: Option<&SpectralVector>,
        tol: f64,
    ) -> Result<(SpectralVector, usize), SpectralError> {
        self.check(rhs)?;
        if let Some(chol) = &self.dense {
            let b = nalgebra::DVector::from_column_slice(&rhs.data);
            let x = chol.solve(&b);
            return Ok((
                SpectralVector::from_data(
                    x.iter().copied().collect(),
                    self.chaos_len,
                    self.spatial_len,
                ),
                0,
            ));
        }

        let b_norm = norm2(&rhs.data);
        if b_norm == 0.0 {
            return Ok((SpectralVector::zeros(self.chaos_len, self.spatial_len), 0));
        }
        let mut x = match x0 {
            Some(v) => {
                self.check(v)?;
                v.clone()
            }
            None => SpectralVector::zeros(self.chaos_len, self.spatial_len),
        };
        let ax = self.apply(&x)?;
        let mut r: Vec<f64> = rhs.data.iter().zip(&ax.data).map(|(b, a)| b - a).collect();
        let mut z = self.precondition(&r);
        let mut p = z.clone();
        let mut rz: f64 = dot(&r, &z);
        for it in 0..MAX_CG_ITERATIONS {
            if norm2(&r) <= tol * b_norm {
                return Ok((x, it));
            }
            let q = self
                .apply(&SpectralVector::from_data(
                    p.clone(),
                    self.chaos_len,
                    self.spatial_len,
                ))?
                .data;
            let pq = dot(&p, &q);
            let alpha = rz / pq;
            for i in 0..x.data.len() {
                x.data[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            z = self.precondition(&r);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..p.len() {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(SpectralError::InnerSolve {
            iterations: MAX_CG_ITERATIONS,
            residual: norm2(&r) / b_norm,
        })
    }

    /// Mean-stiffness block preconditioner `I (x) K^(0)`.
    fn precondition(&self, r: &[f64]) -> Vec<f64> {
        let n = self.spatial_len;
        let mut z = vec![0.0; r.len()];
        z.par_chunks_mut(n)
            .zip(r.par_chunks(n))
            .for_each(|(zb, rb)| {
                zb.copy_from_slice(rb);
                self.precond.solve_in_place(zb);
            });
        z
    }

    /// Pairing matrix `W[b, c] = v_b . M w_c` of two coefficient blocks.
    fn mass_pairing(&self, v: &SpectralVector, w: &SpectralVector) -> DMatrix<f64> {
        let p = self.chaos_len;
        let mw: Vec<Vec<f64>> = (0..p).map(|c| self.mass.apply(w.block(c))).collect();
        let mut out = DMatrix::zeros(p, p);
        for b in 0..p {
            for (c, mwc) in mw.iter().enumerate() {
                out[(b, c)] = dot(v.block(b), mwc);
            }
        }
        out
    }

    /// The bilinear vector `F^v(v, w)_a = v . (G^(a) (x) M) w`.
    pub fn bilinear_form(&self, v: &SpectralVector, w: &SpectralVector) -> Vec<f64> {
        let pairing = self.mass_pairing(v, w);
        self.moments.project_bilinear(&pairing)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solve the normalization system `F(s, z) = 0` where
/// `F_a(s, z) = s . G^(a) s - z . (G^(a) (x) M) z`, by Newton iteration with
/// the exact Jacobian `2 Delta(s)` from the initial guess
/// `s = |z|_M e_mean`.
pub fn solve_normalization(
    op: &KhatOperator,
    z: &SpectralVector,
) -> Result<SpectralScalar, SpectralError> {
    let p = op.chaos_len();
    let target = op.bilinear_form(z, z);
    let mut s = vec![0.0; p];
    s[0] = op.mass_norm(z);

    let mut residual = f64::INFINITY;
    for _step in 0..MAX_NEWTON_STEPS {
        // F(s) = projection of s^2 minus the target.
        let outer = DMatrix::from_fn(p, p, |i, j| s[i] * s[j]);
        let mut f = op.moments().project_bilinear(&outer);
        for (fi, ti) in f.iter_mut().zip(&target) {
            *fi -= ti;
        }
        residual = norm2(&f);
        let jac = op.moments().delta(&s) * 2.0;
        let lu = jac.lu();
        let rhs = nalgebra::DVector::from_column_slice(&f);
        let Some(d) = lu.solve(&rhs) else {
            return Err(SpectralError::SingularDelta);
        };
        let mut inc: f64 = 0.0;
        for i in 0..p {
            s[i] -= d[i];
            inc = inc.max(d[i].abs());
        }
        if inc <= NEWTON_TOL * s[0].abs().max(1.0) {
            return Ok(SpectralScalar { data: s });
        }
    }
    Err(SpectralError::Normalization {
        steps: MAX_NEWTON_STEPS,
        residual,
    })
}

/// Residual `|F(s, z)|_2` of the normalization system (diagnostics).
pub fn normalization_residual(op: &KhatOperator, s: &SpectralScalar, z: &SpectralVector) -> f64 {
    let p = op.chaos_len();
    let target = op.bilinear_form(z, z);
    let outer = DMatrix::from_fn(p, p, |i, j| s.data[i] * s.data[j]);
    let f = op.moments().project_bilinear(&outer);
    f.iter()
        .zip(&target)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Spectral inverse iteration for a separated smallest eigenpair.
///
/// Each step solves `Khat z = Mhat y`, renormalizes through `F(s, z) = 0` and
/// updates `y` from `T(s) y = z`; iteration stops when the mass-norm
/// increment drops below `tol`. The eigenvalue coefficients solve
/// `Delta(s) lambda = e_mean`.
pub fn inverse_iteration(
    op: &KhatOperator,
    y0: &SpectralVector,
    tol: f64,
    max_steps: usize,
    inner_tol: f64,
) -> Result<(SpectralScalar, SpectralVector, IterationReport), SpectralError> {
    let mut y = y0.clone();
    let mut z_prev: Option<SpectralVector> = None;
    let mut report = IterationReport::default();
    let mut s_last: Option<SpectralScalar> = None;

    for step in 0..max_steps {
        let rhs = op.apply_mass(&y)?;
        let (z, its) = op.solve(&rhs, z_prev.as_ref(), inner_tol)?;
        let s = solve_normalization(op, &z)?;
        let delta_mat = op.moments().delta(s.coefficients());
        let lu = delta_mat.lu();
        let z_mat = z.as_matrix();
        let Some(y_mat) = lu.solve(&z_mat) else {
            return Err(SpectralError::SingularDelta);
        };
        let y_new = SpectralVector::from_matrix(&y_mat);

        let mut diff = y_new.clone();
        for (d, o) in diff.data.iter_mut().zip(&y.data) {
            *d -= o;
        }
        let delta = op.mass_norm(&diff);
        report.deltas.push(delta);
        report.inner_iterations.push(its);
        report.steps = step + 1;

        y = y_new;
        z_prev = Some(z.clone());
        report.normalization_residual = normalization_residual(op, &s, &z);
        s_last = Some(s);
        if delta < tol {
            report.converged = true;
            break;
        }
    }
    let s = s_last.expect("at least one iteration");
    if !report.converged {
        return Err(SpectralError::MaxIterations {
            steps: report.steps,
            last_delta: *report.deltas.last().unwrap_or(&f64::NAN),
        });
    }

    // Eigenvalue from the final normalization: Delta(s) lambda = e_mean.
    let delta_mat = op.moments().delta(s.coefficients());
    let lu = delta_mat.lu();
    let mut e1 = nalgebra::DVector::zeros(op.chaos_len());
    e1[0] = 1.0;
    let Some(lambda) = lu.solve(&e1) else {
        return Err(SpectralError::SingularDelta);
    };
    Ok((
        SpectralScalar {
            data: lambda.iter().copied().collect(),
        },
        y,
        report,
    ))
}

/// Spectral subspace iteration for the eigencluster of the `S` smallest
/// eigenvalues, anchored to a deterministic reference basis.
///
/// Per outer step: block solves in `Khat`; on the first step the first solved
/// block is replaced by the block sum (the sum stays smooth across eigenvalue
/// crossings); Gram-Schmidt-style deflation through the bilinear form;
/// normalization and `T(s)` solves per block; projection of the iterate basis
/// onto the reference. The step increment is measured on the projected basis.
pub fn subspace_iteration(
    op: &KhatOperator,
    references: &[Vec<f64>],
    y0: &[SpectralVector],
    tol: f64,
    max_steps: usize,
    inner_tol: f64,
) -> Result<(Vec<SpectralVector>, IterationReport), SpectralError> {
    let s_dim = references.len();
    assert!(s_dim >= 1, "subspace dimension must be at least 1");
    assert_eq!(y0.len(), s_dim, "one initial block per reference vector");
    let p = op.chaos_len();
    let n = op.spatial_len();

    let mut y: Vec<SpectralVector> = y0.to_vec();
    let mut z_prev: Vec<Option<SpectralVector>> = vec![None; s_dim];
    let mut projected_prev: Option<Vec<SpectralVector>> = None;
    let mut report = IterationReport::default();

    for step in 0..max_steps {
        // (1) Block solves.
        let mut z: Vec<SpectralVector> = Vec::with_capacity(s_dim);
        let mut its_total = 0usize;
        for i in 0..s_dim {
            let rhs = op.apply_mass(&y[i])?;
            let (zi, its) = op.solve(&rhs, z_prev[i].as_ref(), inner_tol)?;
            its_total += its;
            z.push(zi);
        }
        z_prev = z.iter().cloned().map(Some).collect();

        // (2.0) Replace the first block by the sum of all solved blocks, once
        // at the start. The sum stays smooth across eigenvalue crossings and
        // anchors the first basis vector; repeating the substitution every
        // step keeps re-rotating the blocks by parameter-dependent mixtures
        // whenever the cluster eigenvalues differ, which leaves a truncation-
        // scale wobble in the projected basis and stalls the increments.
        if step == 0 {
            let mut z_sum = z[0].clone();
            for zi in z.iter().skip(1) {
                for (a, b) in z_sum.data.iter_mut().zip(&zi.data) {
                    *a += b;
                }
            }
            z[0] = z_sum;
        }

        // (2.1)-(2.3) Deflate, normalize, solve per block.
        let mut norm_residual = 0.0f64;
        for i in 0..s_dim {
            let mut w = z[i].clone();
            for yj in y.iter().take(i) {
                let coeffs = op.bilinear_form(&z[i], yj);
                let delta_c = op.moments().delta(&coeffs);
                let update = &delta_c * yj.as_matrix();
                for a in 0..p {
                    for idx in 0..n {
                        w.data[a * n + idx] -= update[(a, idx)];
                    }
                }
            }
            let s = solve_normalization(op, &w)?;
            norm_residual = norm_residual.max(normalization_residual(op, &s, &w));
            let delta_mat = op.moments().delta(s.coefficients());
            let lu = delta_mat.lu();
            let Some(y_mat) = lu.solve(&w.as_matrix()) else {
                return Err(SpectralError::SingularDelta);
            };
            y[i] = SpectralVector::from_matrix(&y_mat);
        }

        // (3) Projection of the iterate basis onto the reference basis.
        let projected = project_basis(op, references, &y);

        // (4) Aggregate increment of the projected basis.
        let delta = match &projected_prev {
            Some(prev) => {
                let mut acc = 0.0;
                for (pi, qi) in projected.iter().zip(prev) {
                    let mut diff = pi.clone();
                    for (d, o) in diff.data.iter_mut().zip(&qi.data) {
                        *d -= o;
                    }
                    let nrm = op.mass_norm(&diff);
                    acc += nrm * nrm;
                }
                acc.sqrt()
            }
            None => f64::INFINITY,
        };
        if projected_prev.is_some() {
            report.deltas.push(delta);
        }
        report.inner_iterations.push(its_total);
        report.steps = step + 1;
        report.normalization_residual = norm_residual;
        projected_prev = Some(projected);
        if delta < tol {
            report.converged = true;
            break;
        }
    }
    let projected = projected_prev.expect("at least one iteration");
    if !report.converged {
        return Err(SpectralError::MaxIterations {
            steps: report.steps,
            last_delta: *report.deltas.last().unwrap_or(&f64::NAN),
        });
    }
    Ok((projected, report))
}

/// Galerkin projection of an iterate basis onto deterministic reference
/// vectors: `p_i = sum_j Delta(c_ij) y_j` with
/// `c_ij[a] = <ref_i, (y_j)_a>_M`.
pub fn project_basis(
    op: &KhatOperator,
    references: &[Vec<f64>],
    basis: &[SpectralVector],
) -> Vec<SpectralVector> {
    let p = op.chaos_len();
    let n = op.spatial_len();
    let mref: Vec<Vec<f64>> = references.iter().map(|r| op.mass().apply(r)).collect();
    references
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let mut acc = DMatrix::zeros(p, n);
            for yj in basis {
                let mut coeffs = vec![0.0; p];
                for (a, c) in coeffs.iter_mut().enumerate() {
                    *c = dot(&mref[i], yj.block(a));
                }
                let delta_c = op.moments().delta(&coeffs);
                acc += &delta_c * yj.as_matrix();
            }
            SpectralVector::from_matrix(&acc)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymmetricPattern;
    use crate::multiindex::{MultiIndex, MultiIndexSet};
    use std::sync::Arc;

    fn diag_matrix(values: &[f64]) -> SymMatrix {
        let n = values.len();
        let pattern = Arc::new(SymmetricPattern::from_pairs(
            n,
            (0..n as u32).map(|i| (i, i)),
        ));
        let mut m = SymMatrix::zeros(pattern);
        m.values_mut().copy_from_slice(values);
        m
    }

    fn degree_set(dim: usize, degree: u32) -> MultiIndexSet {
        // All indices of total degree <= `degree` over the first `dim`
        // dimensions (monotone by construction).
        fn extend(
            out: &mut Vec<MultiIndex>,
            pairs: &mut Vec<(usize, u32)>,
            next_dim: usize,
            dim: usize,
            left: u32,
        ) {
            if next_dim > dim {
                out.push(MultiIndex::from_pairs(pairs));
                return;
            }
            for e in 0..=left {
                if e > 0 {
                    pairs.push((next_dim, e));
                }
                extend(out, pairs, next_dim + 1, dim, left - e);
                if e > 0 {
                    pairs.pop();
                }
            }
        }
        let mut members = Vec::new();
        extend(&mut members, &mut Vec::new(), 1, dim, degree);
        MultiIndexSet::from_members(members)
    }

    #[test]
    fn apply_matches_dense_kronecker() {
        // Two spatial dofs, basis of degree two in one dimension.
        let set = degree_set(1, 2);
        let moments = MomentMatrices::build(&set);
        let k = vec![diag_matrix(&[2.0, 3.0]), diag_matrix(&[0.4, -0.2])];
        let mass = diag_matrix(&[1.0, 1.0]);
        let op = KhatOperator::new(&k, &mass, &moments).unwrap();

        let p = set.len();
        let v =
            SpectralVector::from_data((0..p * 2).map(|i| 0.3 + 0.17 * i as f64).collect(), p, 2);
        let av = op.apply(&v).unwrap();

        // Dense oracle.
        let mut dense: DMatrix<f64> = DMatrix::zeros(p * 2, p * 2);
        for m in 0..=1usize {
            let gm = moments.g_m(m).to_dense();
            let km = k[m].to_dense();
            for a in 0..p {
                for b in 0..p {
                    for i in 0..2 {
                        for j in 0..2 {
                            dense[(a * 2 + i, b * 2 + j)] += gm[(a, b)] * km[(i, j)];
                        }
                    }
                }
            }
        }
        let expect = dense * nalgebra::DVector::from_column_slice(v.data());
        for i in 0..p * 2 {
            assert!((av.data()[i] - expect[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn mean_block_spreads_to_neighbours() {
        let set = degree_set(2, 1);
        let moments = MomentMatrices::build(&set);
        let k = vec![
            diag_matrix(&[1.0]),
            diag_matrix(&[0.5]),
            diag_matrix(&[0.25]),
        ];
        let mass = diag_matrix(&[1.0]);
        let op = KhatOperator::new(&k, &mass, &moments).unwrap();
        let v = SpectralVector::from_deterministic(set.len(), &[1.0]);
        let av = op.apply(&v).unwrap();
        // Output lives on the mean block and its first-order neighbours.
        let mean_pos = set.position(&MultiIndex::zero()).unwrap();
        for (ai, alpha) in set.members().iter().enumerate() {
            if ai == mean_pos {
                assert!((av.block(ai)[0] - 1.0).abs() < 1e-14);
            } else if alpha.degree() == 1 {
                assert!(av.block(ai)[0].abs() > 1e-3);
            } else {
                assert!(av.block(ai)[0].abs() < 1e-14);
            }
        }
    }

    #[test]
    fn solve_meets_residual_contract() {
        let set = degree_set(2, 2);
        let moments = MomentMatrices::build(&set);
        // Large enough total size to leave the dense path.
        let nsp = 1100;
        let kv: Vec<f64> = (0..nsp).map(|i| 2.0 + (i % 7) as f64 * 0.1).collect();
        let k1: Vec<f64> = (0..nsp)
            .map(|i| 0.3 * ((i % 5) as f64 - 2.0) * 0.1)
            .collect();
        let k = vec![diag_matrix(&kv), diag_matrix(&k1), diag_matrix(&k1)];
        let mass = diag_matrix(&vec![1.0; nsp]);
        let op = KhatOperator::new(&k, &mass, &moments).unwrap();
        let p = set.len();
        let rhs = SpectralVector::from_data(
            (0..p * nsp)
                .map(|i| ((i * 31 % 17) as f64 - 8.0) / 8.0)
                .collect(),
            p,
            nsp,
        );
        let (x, its) = op.solve(&rhs, None, 1e-11).unwrap();
        assert!(its > 0);
        let ax = op.apply(&x).unwrap();
        let mut r = 0.0;
        let mut b = 0.0;
        for i in 0..p * nsp {
            let d = ax.data()[i] - rhs.data()[i];
            r += d * d;
            b += rhs.data()[i] * rhs.data()[i];
        }
        assert!(r.sqrt() <= 1e-11 * b.sqrt() * 1.01);
    }

    #[test]
    fn normalization_deterministic_case() {
        let set = degree_set(1, 2);
        let moments = MomentMatrices::build(&set);
        let k = vec![diag_matrix(&[1.0, 1.0])];
        let mass = diag_matrix(&[2.0, 0.5]);
        let op = KhatOperator::new(&k, &mass, &moments).unwrap();
        let z = SpectralVector::from_deterministic(set.len(), &[3.0, 4.0]);
        let s = solve_normalization(&op, &z).unwrap();
        // Only the mean coefficient: |z|_M = sqrt(2*9 + 0.5*16).
        let expect = (18.0f64 + 8.0).sqrt();
        assert!((s.coefficients()[0] - expect).abs() < 1e-12);
        for c in &s.coefficients()[1..] {
            assert!(c.abs() < 1e-12);
        }
    }

    #[test]
    fn normalization_affine_norm_case() {
        // z with |z(xi)|_M^2 = 1 + xi_1 in the projected sense; the solved s
        // must satisfy F(s) = 0 exactly and stay within truncation distance
        // of the projected square root.
        let set = degree_set(1, 1);
        let moments = MomentMatrices::build(&set);
        let k = vec![diag_matrix(&[1.0, 1.0])];
        let mass = diag_matrix(&[1.0, 1.0]);
        let op = KhatOperator::new(&k, &mass, &moments).unwrap();

        // Blocks (g, 0) and (h, 0): g^2 + h^2 = 1 and 2 g h = 1/sqrt(3)
        // reproduce the chaos coefficients of 1 + xi_1.
        let gh = 0.5 / 3f64.sqrt();
        let disc = (1.0f64 - gh * gh * 4.0).max(0.0);
        let g2 = 0.5 * (1.0 + disc.sqrt());
        let h2 = 1.0 - g2;
        let (g, h) = (g2.sqrt(), h2.sqrt());
        let mut z = SpectralVector::zeros(2, 2);
        z.block_mut(0)[0] = g;
        z.block_mut(1)[0] = h;
        let s = solve_normalization(&op, &z).unwrap();
        assert!(normalization_residual(&op, &s, &z) < 1e-12);
        // This z is chaos-rank-one, so its norm squares exactly: s = (g, h).
        assert!((s.coefficients()[0] - g).abs() < 1e-10);
        assert!((s.coefficients()[1] - h).abs() < 1e-10);
        // Quadrature projection of sqrt(1 + xi) is close but not identical
        // (the truncated square differs from the truncated function).
        let rule = crate::polychaos::gauss_nodes(40);
        let s0 = rule.integrate(|x| (1.0 + x).max(0.0).sqrt());
        let s1 = rule
            .integrate(|x| (1.0 + x).max(0.0).sqrt() * crate::polychaos::legendre_value(1, x));
        assert!((s.coefficients()[0] - s0).abs() < 0.05);
        assert!((s.coefficients()[1] - s1).abs() < 0.05);
    }

    #[test]
    fn normalization_is_homogeneous() {
        let set = degree_set(2, 1);
        let moments = MomentMatrices::build(&set);
        let k = vec![diag_matrix(&[1.0, 1.0, 1.0])];
        let mass = diag_matrix(&[1.0, 2.0, 1.5]);
        let op = KhatOperator::new(&k, &mass, &moments).unwrap();
        let p = set.len();
        let z =
            SpectralVector::from_data((0..p * 3).map(|i| 0.3 + 0.05 * i as f64).collect(), p, 3);
        let mut cz = z.clone();
        for v in cz.data.iter_mut() {
            *v *= -2.5;
        }
        let s = solve_normalization(&op, &z).unwrap();
        let sc = solve_normalization(&op, &cz).unwrap();
        for (a, b) in s.coefficients().iter().zip(sc.coefficients()) {
            assert!((2.5 * a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn inverse_iteration_zero_variance() {
        let set = degree_set(1, 2);
        let moments = MomentMatrices::build(&set);
        // Constant pencil: only the mean term.
        let k = vec![diag_matrix(&[1.5, 4.0, 9.0])];
        let mass = diag_matrix(&[1.0, 1.0, 1.0]);
        let op = KhatOperator::new(&k, &mass, &moments).unwrap();
        let y0 = SpectralVector::from_deterministic(set.len(), &[1.0, 0.1, 0.1]);
        let (lambda, y, report) = inverse_iteration(&op, &y0, 1e-12, 100, 1e-13).unwrap();
        assert!(report.converged);
        let (mean, var) = lambda.mean_var();
        assert!((mean - 1.5).abs() < 1e-10);
        assert!(var < 1e-20);
        // Deterministic eigenvector in the mean block.
        assert!((y.block(0)[0].abs() - 1.0).abs() < 1e-9);
        for a in 1..set.len() {
            for v in y.block(a) {
                assert!(v.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn inverse_iteration_affine_diagonal_pencil() {
        // K(xi) = diag(1 + 0.5 xi_1, 4), M = I: the smallest eigenvalue is
        // exactly 1 + 0.5 xi_1 with constant eigenvector e_1.
        let set = degree_set(1, 8);
        let moments = MomentMatrices::build(&set);
        let k = vec![diag_matrix(&[1.0, 4.0]), diag_matrix(&[0.5, 0.0])];
        let mass = diag_matrix(&[1.0, 1.0]);
        let op = KhatOperator::new(&k, &mass, &moments).unwrap();
        let y0 = SpectralVector::from_deterministic(set.len(), &[1.0, 0.0]);
        let (lambda, _y, report) = inverse_iteration(&op, &y0, 1e-11, 200, 1e-12).unwrap();
        assert!(report.converged);
        let (mean, var) = lambda.mean_var();
        assert!((mean - 1.0).abs() < 1e-6, "mean {mean}");
        assert!((var - 0.25 / 3.0).abs() < 1e-6, "var {var}");
        // Pointwise consistency at a few parameter values.
        for &x in &[-0.9, -0.3, 0.4, 0.8] {
            let lv = lambda.evaluate(&moments, &[x]);
            assert!((lv - (1.0 + 0.5 * x)).abs() < 1e-5, "at {x}: {lv}");
        }
    }

    #[test]
    fn subspace_iteration_zero_variance() {
        let set = degree_set(2, 1);
        let moments = MomentMatrices::build(&set);
        let k = vec![diag_matrix(&[1.0, 2.0, 8.0, 9.0])];
        let mass = diag_matrix(&[1.0, 1.0, 1.0, 1.0]);
        let op = KhatOperator::new(&k, &mass, &moments).unwrap();
        let p = set.len();
        let refs = vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]];
        let y0: Vec<SpectralVector> = refs
            .iter()
            .map(|r| SpectralVector::from_deterministic(p, r))
            .collect();
        let (basis, report) = subspace_iteration(&op, &refs, &y0, 1e-10, 100, 1e-13).unwrap();
        assert!(report.converged);
        // The projected basis reproduces the deterministic eigenvectors in
        // the mean block and vanishes elsewhere.
        for (i, b) in basis.iter().enumerate() {
            for (idx, v) in b.block(0).iter().enumerate() {
                let expect = if idx == i { 1.0 } else { 0.0 };
                assert!((v.abs() - expect).abs() < 1e-8, "block0[{idx}] = {v}");
            }
            for a in 1..p {
                for v in b.block(a) {
                    assert!(v.abs() < 1e-8);
                }
            }
        }
        // The first recorded increment is already tiny.
        assert!(report.deltas[0] < 1e-10);
    }
}
