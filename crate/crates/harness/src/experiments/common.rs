//! Shared drivers: problem construction, Galerkin and collocation runs on the
//! 1D and 2D discretizations, cached per-point ensembles, and component field
//! statistics on quadrature grids.

use crate::config::Config;
use shell_spectra_core::collocation::{PointSolutions, SparseGrid};
use shell_spectra_core::eigsolve::{self, EigenPair};
use shell_spectra_core::linalg::SymMatrix;
use shell_spectra_core::multiindex::MultiIndexSet;
use shell_spectra_core::polychaos::MomentMatrices;
use shell_spectra_core::randomfield::{FieldExpansion, ShapeFamily};
use shell_spectra_core::shellfem::{
    assemble, AffinePencil, Ansatz, BoundaryCondition, Component, ModeSpec, ShellGeometry,
    ShellProblem,
};
use shell_spectra_core::spectral::{
    inverse_iteration, subspace_iteration, IterationReport, KhatOperator, SpectralScalar,
    SpectralVector,
};
use std::collections::HashMap;

pub type DynError = Box<dyn std::error::Error + Send + Sync>;

/// Assemble a 1D problem; the material expansion is truncated at the active
/// dimension count of the governing index set.
pub fn assemble_1d(
    cfg: &Config,
    p_order: usize,
    thickness: f64,
    wavenumber: u32,
    field_terms: usize,
) -> Result<AffinePencil, DynError> {
    let problem = ShellProblem {
        geometry: ShellGeometry::Cylinder,
        model: cfg.model,
        thickness,
        poisson: cfg.poisson,
        field: FieldExpansion::new(1.0, ShapeFamily::Axial, field_terms)?,
        bc: BoundaryCondition::ClampedEnds,
        mode: ModeSpec::OneD {
            wavenumber,
            ansatz: Ansatz::CosineFamily,
            n_elem: cfg.elements_1d,
        },
        p_order,
    };
    Ok(assemble(&problem)?)
}

/// Assemble a 2D problem with the configured field family.
pub fn assemble_2d(
    cfg: &Config,
    p_order: usize,
    thickness: f64,
    field_terms: usize,
    family: ShapeFamily,
) -> Result<AffinePencil, DynError> {
    let problem = ShellProblem {
        geometry: ShellGeometry::Cylinder,
        model: cfg.model,
        thickness,
        poisson: cfg.poisson,
        field: FieldExpansion::new(1.0, family, field_terms)?,
        bc: BoundaryCondition::ClampedEnds,
        mode: ModeSpec::TwoD {
            nx: cfg.mesh_2d.0,
            ny: cfg.mesh_2d.1,
        },
        p_order,
    };
    Ok(assemble(&problem)?)
}

pub fn k_terms(pencil: &AffinePencil) -> Vec<SymMatrix> {
    (0..=pencil.field_terms())
        .map(|m| pencil.k_term(m).clone())
        .collect()
}

/// Deterministic reference pairs at the anchor point.
pub fn reference_pairs(
    pencil: &AffinePencil,
    count: usize,
    tol: f64,
) -> Result<Vec<EigenPair>, DynError> {
    Ok(eigsolve::smallest_eigs(
        pencil.k_term(0),
        pencil.mass(),
        count,
        tol,
    )?)
}

/// Product of one spectral inverse iteration run.
pub struct GalerkinRun {
    pub lambda: SpectralScalar,
    pub y: SpectralVector,
    pub report: IterationReport,
}

/// Run the spectral inverse iteration anchored at `reference`.
pub fn galerkin_simple(
    cfg: &Config,
    pencil: &AffinePencil,
    moments: &MomentMatrices,
    reference: &[f64],
) -> Result<GalerkinRun, DynError> {
    let terms = k_terms(pencil);
    let op = KhatOperator::new(&terms, pencil.mass(), moments)?;
    let y0 = SpectralVector::from_deterministic(moments.basis_len(), reference);
    let (lambda, y, report) =
        inverse_iteration(&op, &y0, cfg.tol_outer, cfg.max_outer, cfg.tol_inner)?;
    Ok(GalerkinRun { lambda, y, report })
}

/// Product of one spectral subspace iteration run.
pub struct GalerkinSubspaceRun {
    pub basis: Vec<SpectralVector>,
    pub report: IterationReport,
}

/// Run the spectral subspace iteration anchored at `references`.
pub fn galerkin_subspace(
    cfg: &Config,
    pencil: &AffinePencil,
    moments: &MomentMatrices,
    references: &[Vec<f64>],
) -> Result<GalerkinSubspaceRun, DynError> {
    let terms = k_terms(pencil);
    let op = KhatOperator::new(&terms, pencil.mass(), moments)?;
    let y0: Vec<SpectralVector> = references
        .iter()
        .map(|r| SpectralVector::from_deterministic(moments.basis_len(), r))
        .collect();
    let (basis, report) = subspace_iteration(
        &op,
        references,
        &y0,
        cfg.tol_outer,
        cfg.max_outer,
        cfg.tol_inner,
    )?;
    Ok(GalerkinSubspaceRun { basis, report })
}

/// Per-point eigensolve cache keyed by the point's coordinate bit pattern, so
/// nested grids share their ensembles (nodes are generated once per degree
/// and re-used bit-identically).
#[derive(Default)]
pub struct EnsembleCache {
    entries: HashMap<Vec<u64>, Vec<EigenPair>>,
}

impl EnsembleCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Eigenpairs at every grid point, solving only points not yet cached.
    pub fn solutions(
        &mut self,
        pencil: &AffinePencil,
        grid: &SparseGrid,
        count: usize,
        tol: f64,
    ) -> Result<PointSolutions, DynError> {
        let mut pairs: Vec<Vec<EigenPair>> = Vec::with_capacity(grid.len());
        for point in grid.points() {
            let key: Vec<u64> = point.iter().map(|v| v.to_bits()).collect();
            let cached = self.entries.get(&key).filter(|p| p.len() >= count);
            let solved = match cached {
                Some(p) => p.clone(),
                None => {
                    let k = pencil.stiffness_at(point);
                    let sol = eigsolve::smallest_eigs(&k, pencil.mass(), count, tol)?;
                    self.entries.insert(key, sol.clone());
                    sol
                }
            };
            pairs.push(solved.into_iter().take(count.max(1)).collect());
        }
        Ok(PointSolutions::from_pairs(pairs))
    }
}

/// Scalar statistics (mean, variance) of one field component sampled on a
/// quadrature grid, ready for weighted L2 comparisons.
#[derive(Debug, Clone)]
pub struct FieldStats {
    pub weights: Vec<f64>,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl FieldStats {
    /// `L2` norm of the mean-field difference.
    pub fn mean_l2_diff(&self, other: &FieldStats) -> f64 {
        weighted_l2_diff(&self.weights, &self.mean, &other.mean)
    }

    /// `L2` norm of the variance-field difference.
    pub fn var_l2_diff(&self, other: &FieldStats) -> f64 {
        weighted_l2_diff(&self.weights, &self.var, &other.var)
    }

    /// Flip the sign of the mean field (eigenvector orientation).
    pub fn flip_mean(&mut self) {
        for v in &mut self.mean {
            *v = -*v;
        }
    }

    /// Weighted inner product of the two mean fields (sign alignment).
    pub fn mean_dot(&self, other: &FieldStats) -> f64 {
        self.weights
            .iter()
            .zip(self.mean.iter().zip(&other.mean))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    pub fn min_var(&self) -> f64 {
        self.var.iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }
}

fn weighted_l2_diff(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter()
        .zip(a.iter().zip(b))
        .map(|(w, (x, y))| w * (x - y) * (x - y))
        .sum::<f64>()
        .max(0.0)
        .sqrt()
}

/// Component statistics of a chaos coefficient block on the 1D quadrature
/// grid: the mean is the leading block, the variance the sum of squares of
/// the rest.
pub fn galerkin_field_stats_1d(
    pencil: &AffinePencil,
    y: &SpectralVector,
    comp: Component,
    n_quad: usize,
) -> FieldStats {
    let grid = pencil.disc().as_1d().expect("1D discretization");
    let points = grid.integration_points(n_quad);
    let blocks: Vec<&[f64]> = (0..y.chaos_len()).map(|a| y.block(a)).collect();
    let mut mean = Vec::with_capacity(points.len());
    let mut var = Vec::with_capacity(points.len());
    let mut weights = Vec::with_capacity(points.len());
    for &(x, w) in &points {
        let vals = grid.eval_component_many(&blocks, comp, x);
        mean.push(vals[0]);
        var.push(vals[1..].iter().map(|v| v * v).sum());
        weights.push(w);
    }
    FieldStats { weights, mean, var }
}

/// Component statistics of per-point coefficient vectors under the sparse
/// grid quadrature (mean and second moment through the combination weights).
pub fn collocation_field_stats_1d(
    pencil: &AffinePencil,
    grid: &SparseGrid,
    vectors: &[Vec<f64>],
    comp: Component,
    n_quad: usize,
) -> FieldStats {
    let disc = pencil.disc().as_1d().expect("1D discretization");
    let points = disc.integration_points(n_quad);
    let qw = grid.quadrature_weights();
    let refs: Vec<&[f64]> = vectors.iter().map(|v| v.as_slice()).collect();
    let mut mean = Vec::with_capacity(points.len());
    let mut var = Vec::with_capacity(points.len());
    let mut weights = Vec::with_capacity(points.len());
    for &(x, w) in &points {
        let vals = disc.eval_component_many(&refs, comp, x);
        let m: f64 = qw.iter().zip(&vals).map(|(q, v)| q * v).sum();
        let second: f64 = qw.iter().zip(&vals).map(|(q, v)| q * v * v).sum();
        mean.push(m);
        var.push(second - m * m);
        weights.push(w);
    }
    FieldStats { weights, mean, var }
}

/// 2D analogue of [`galerkin_field_stats_1d`].
pub fn galerkin_field_stats_2d(
    pencil: &AffinePencil,
    y: &SpectralVector,
    comp: Component,
    n_quad: usize,
) -> FieldStats {
    let grid = pencil.disc().as_2d().expect("2D discretization");
    let points = grid.integration_points(n_quad);
    let blocks: Vec<&[f64]> = (0..y.chaos_len()).map(|a| y.block(a)).collect();
    let mut mean = Vec::with_capacity(points.len());
    let mut var = Vec::with_capacity(points.len());
    let mut weights = Vec::with_capacity(points.len());
    for &(x, yy, w) in &points {
        let vals = grid.eval_component_many(&blocks, comp, x, yy);
        mean.push(vals[0]);
        var.push(vals[1..].iter().map(|v| v * v).sum());
        weights.push(w);
    }
    FieldStats { weights, mean, var }
}

/// 2D analogue of [`collocation_field_stats_1d`].
pub fn collocation_field_stats_2d(
    pencil: &AffinePencil,
    grid: &SparseGrid,
    vectors: &[Vec<f64>],
    comp: Component,
    n_quad: usize,
) -> FieldStats {
    let disc = pencil.disc().as_2d().expect("2D discretization");
    let points = disc.integration_points(n_quad);
    let qw = grid.quadrature_weights();
    let refs: Vec<&[f64]> = vectors.iter().map(|v| v.as_slice()).collect();
    let mut mean = Vec::with_capacity(points.len());
    let mut var = Vec::with_capacity(points.len());
    let mut weights = Vec::with_capacity(points.len());
    for &(x, yy, w) in &points {
        let vals = disc.eval_component_many(&refs, comp, x, yy);
        let m: f64 = qw.iter().zip(&vals).map(|(q, v)| q * v).sum();
        let second: f64 = qw.iter().zip(&vals).map(|(q, v)| q * v * v).sum();
        mean.push(m);
        var.push(second - m * m);
        weights.push(w);
    }
    FieldStats { weights, mean, var }
}

/// Smallest eigenvalue per wavenumber at the anchor point, and its minimizer.
pub fn minimizing_wavenumber(
    cfg: &Config,
    thickness: f64,
    p_order: usize,
) -> Result<(u32, Vec<(u32, f64)>), DynError> {
    let mut best = (0u32, f64::INFINITY);
    let mut table = Vec::new();
    for k in 0..=cfg.k_search_max {
        let pencil = assemble_1d(cfg, p_order, thickness, k, 0)?;
        let pairs = eigsolve::smallest_eigs(pencil.k_term(0), pencil.mass(), 1, cfg.tol_eigen)?;
        table.push((k, pairs[0].value));
        if pairs[0].value < best.1 {
            best = (k, pairs[0].value);
        }
    }
    Ok((best.0, table))
}

/// Generate the monotone set of the configured weights at threshold `eps`.
pub fn index_set(cfg: &Config, eps: f64) -> Result<MultiIndexSet, DynError> {
    Ok(MultiIndexSet::generate(cfg.eta(), eps)?)
}

/// Geometric-mean tail contraction of an increment sequence, over the last
/// ratios whose increments sit inside a clean decade window.
pub fn tail_contraction(deltas: &[f64], floor: f64, ceiling: f64, max_ratios: usize) -> Option<f64> {
    let mut ratios = Vec::new();
    for w in deltas.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a > floor && a < ceiling && b > floor && b < ceiling {
            ratios.push(b / a);
        }
    }
    if ratios.is_empty() {
        return None;
    }
    let tail = &ratios[ratios.len().saturating_sub(max_ratios)..];
    let log_mean: f64 = tail.iter().map(|r| r.ln()).sum::<f64>() / tail.len() as f64;
    Some(log_mean.exp())
}
