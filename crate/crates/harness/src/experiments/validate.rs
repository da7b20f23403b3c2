//! Stochastic validation: convergence of both solution strategies over a
//! sequence of nested index sets against overkill references, in 1D (simple
//! eigenpair) and 2D (two-dimensional eigenspace).

use super::common::{
    assemble_1d, assemble_2d, collocation_field_stats_1d, collocation_field_stats_2d,
    galerkin_field_stats_1d, galerkin_field_stats_2d, galerkin_simple, galerkin_subspace,
    index_set, reference_pairs, DynError, EnsembleCache, FieldStats,
};
use crate::config::Config;
use crate::csvio::{write_coefficients, write_ensemble, CsvTable};
use crate::ratefit::{loglog_fit, RateFit};
use shell_spectra_core::collocation::{collocate_simple, collocate_subspace, SparseGrid};
use shell_spectra_core::polychaos::MomentMatrices;
use shell_spectra_core::shellfem::{AffinePencil, Component};
use shell_spectra_core::spectral::SpectralVector;
use std::path::Path;

/// Statistics errors of one method on one index set, against that method's
/// own overkill reference.
#[derive(Debug, Clone, Default)]
pub struct MethodErrors {
    pub mean_lambda: f64,
    pub var_lambda: f64,
    pub mean_theta_l2: f64,
    pub var_theta_l2: f64,
}

#[derive(Debug, Clone)]
pub struct ValidationRow {
    pub epsilon: f64,
    pub set_len: usize,
    pub max_dim: usize,
    pub grid_points: usize,
    pub coll: MethodErrors,
    pub gal: MethodErrors,
    /// Raw statistics of both methods (mean, variance of the eigenvalue).
    pub coll_stats: (f64, f64),
    pub gal_stats: (f64, f64),
}

#[derive(Debug)]
pub struct ValidationResult {
    pub rows: Vec<ValidationRow>,
    pub overkill_len: usize,
    /// Log-log tail fits of the mean-eigenvalue error vs set size.
    pub fit_gal: RateFit,
    pub fit_coll: RateFit,
    /// Distances of the two methods' overkill references from each other.
    pub overkill_gap_mean: f64,
}

/// 1D validation of both strategies for the smallest eigenpair.
pub fn run_validation_1d(cfg: &Config, out: &Path) -> Result<ValidationResult, DynError> {
    let ovk_set = index_set(cfg, cfg.epsilon_overkill)?;
    let field_terms = ovk_set.max_active_dim();
    let pencil = assemble_1d(
        cfg,
        cfg.p_order,
        cfg.thickness,
        cfg.wavenumber,
        field_terms,
    )?;
    let reference = reference_pairs(&pencil, 1, cfg.tol_eigen)?[0].vector.clone();
    let quad_pts = cfg.p_order + 4;
    let mut cache = EnsembleCache::new();

    // Overkill references, one per method.
    let ovk_moments = MomentMatrices::build(&ovk_set);
    let gal_ovk = galerkin_simple(cfg, &pencil, &ovk_moments, &reference)?;
    let (go_mean, go_var) = gal_ovk.lambda.mean_var();
    let go_theta = galerkin_field_stats_1d(&pencil, &gal_ovk.y, Component::Theta, quad_pts);

    let ovk_grid = SparseGrid::build(&ovk_set);
    let ovk_sols = cache.solutions(&pencil, &ovk_grid, 1, cfg.tol_eigen)?;
    let coll_ovk = collocate_simple(&pencil, &ovk_sols, &reference)?;
    let (co_mean, co_var) = ovk_grid.statistics(&coll_ovk.lambdas)?;
    let co_theta = collocation_field_stats_1d(
        &pencil,
        &ovk_grid,
        &coll_ovk.vectors,
        Component::Theta,
        quad_pts,
    );

    write_coefficients(
        &out.join("coefficients_overkill.txt"),
        ovk_set.len(),
        gal_ovk.y.spatial_len(),
        ovk_set.fingerprint(),
        gal_ovk.y.data(),
    )?;
    write_ensemble(
        &out.join("ensemble_overkill.csv"),
        ovk_grid.points(),
        &coll_ovk.lambdas.iter().map(|l| vec![*l]).collect::<Vec<_>>(),
    )?;
    write_iteration_report(&out.join("iteration_overkill.csv"), &gal_ovk.report)?;

    let mut rows = Vec::new();
    for &eps in &cfg.epsilon_sequence {
        let set = index_set(cfg, eps)?;
        let moments = MomentMatrices::build(&set);
        let gal = galerkin_simple(cfg, &pencil, &moments, &reference)?;
        let (g_mean, g_var) = gal.lambda.mean_var();
        let mut g_theta = galerkin_field_stats_1d(&pencil, &gal.y, Component::Theta, quad_pts);
        align(&mut g_theta, &go_theta);

        let grid = SparseGrid::build(&set);
        let sols = cache.solutions(&pencil, &grid, 1, cfg.tol_eigen)?;
        let coll = collocate_simple(&pencil, &sols, &reference)?;
        let (c_mean, c_var) = grid.statistics(&coll.lambdas)?;
        let mut c_theta = collocation_field_stats_1d(
            &pencil,
            &grid,
            &coll.vectors,
            Component::Theta,
            quad_pts,
        );
        align(&mut c_theta, &co_theta);

        rows.push(ValidationRow {
            epsilon: eps,
            set_len: set.len(),
            max_dim: set.max_active_dim(),
            grid_points: grid.len(),
            coll: MethodErrors {
                mean_lambda: (c_mean - co_mean).abs(),
                var_lambda: (c_var - co_var).abs(),
                mean_theta_l2: c_theta.mean_l2_diff(&co_theta),
                var_theta_l2: c_theta.var_l2_diff(&co_theta),
            },
            gal: MethodErrors {
                mean_lambda: (g_mean - go_mean).abs(),
                var_lambda: (g_var - go_var).abs(),
                mean_theta_l2: g_theta.mean_l2_diff(&go_theta),
                var_theta_l2: g_theta.var_l2_diff(&go_theta),
            },
            coll_stats: (c_mean, c_var),
            gal_stats: (g_mean, g_var),
        });
    }

    let result = finish_validation(
        cfg,
        out,
        rows,
        ovk_set.len(),
        (go_mean - co_mean).abs(),
        "validation_1d",
    )?;
    Ok(result)
}

/// 2D validation of both strategies for the eigenspace of the `S` smallest
/// eigenvalues. Statistics concern the angular-rotation component of the
/// first projected basis vector; eigenvalue statistics run the per-point
/// values through the combination quadrature on the collocation side and the
/// Rayleigh quotient of the first basis vector on the Galerkin side.
pub fn run_validation_2d(cfg: &Config, out: &Path) -> Result<ValidationResult, DynError> {
    let s_dim = cfg.subspace_dim.max(2);
    let ovk_set = index_set(cfg, cfg.epsilon_overkill)?;
    let field_terms = ovk_set.max_active_dim();
    let pencil = assemble_2d(cfg, cfg.p_order, cfg.thickness, field_terms, cfg.field)?;
    let refs: Vec<Vec<f64>> = reference_pairs(&pencil, s_dim, cfg.tol_eigen)?
        .into_iter()
        .map(|p| p.vector)
        .collect();
    let quad_pts = cfg.p_order + 2;
    let mut cache = EnsembleCache::new();

    let ovk_moments = MomentMatrices::build(&ovk_set);
    let gal_ovk = galerkin_subspace(cfg, &pencil, &ovk_moments, &refs)?;
    let go_theta =
        galerkin_field_stats_2d(&pencil, &gal_ovk.basis[0], Component::Theta, quad_pts);
    let ovk_grid = SparseGrid::build(&ovk_set);
    let ovk_sols = cache.solutions(&pencil, &ovk_grid, s_dim, cfg.tol_eigen)?;
    let coll_ovk = collocate_subspace(&pencil, &ovk_sols, &refs)?;
    let co_first: Vec<Vec<f64>> = coll_ovk.basis.iter().map(|b| b[0].clone()).collect();
    let co_theta =
        collocation_field_stats_2d(&pencil, &ovk_grid, &co_first, Component::Theta, quad_pts);

    let lambda1_ovk: Vec<f64> = coll_ovk.lambdas.iter().map(|l| l[0]).collect();
    let (co_mean, co_var) = ovk_grid.statistics(&lambda1_ovk)?;
    let (go_mean, go_var) =
        rayleigh_statistics(&pencil, &ovk_grid, &ovk_moments, &gal_ovk.basis[0])?;

    write_ensemble(&out.join("ensemble_overkill.csv"), ovk_grid.points(), &coll_ovk.lambdas)?;
    write_iteration_report(&out.join("iteration_overkill.csv"), &gal_ovk.report)?;

    let mut rows = Vec::new();
    for &eps in &cfg.epsilon_sequence {
        let set = index_set(cfg, eps)?;
        let moments = MomentMatrices::build(&set);
        let gal = galerkin_subspace(cfg, &pencil, &moments, &refs)?;
        let mut g_theta =
            galerkin_field_stats_2d(&pencil, &gal.basis[0], Component::Theta, quad_pts);
        align(&mut g_theta, &go_theta);
        let (g_mean, g_var) = rayleigh_statistics(&pencil, &ovk_grid, &moments, &gal.basis[0])?;

        let grid = SparseGrid::build(&set);
        let sols = cache.solutions(&pencil, &grid, s_dim, cfg.tol_eigen)?;
        let coll = collocate_subspace(&pencil, &sols, &refs)?;
        let first: Vec<Vec<f64>> = coll.basis.iter().map(|b| b[0].clone()).collect();
        let mut c_theta =
            collocation_field_stats_2d(&pencil, &grid, &first, Component::Theta, quad_pts);
        align(&mut c_theta, &co_theta);
        let lambda1: Vec<f64> = coll.lambdas.iter().map(|l| l[0]).collect();
        let (c_mean, c_var) = grid.statistics(&lambda1)?;

        rows.push(ValidationRow {
            epsilon: eps,
            set_len: set.len(),
            max_dim: set.max_active_dim(),
            grid_points: grid.len(),
            coll: MethodErrors {
                mean_lambda: (c_mean - co_mean).abs(),
                var_lambda: (c_var - co_var).abs(),
                mean_theta_l2: c_theta.mean_l2_diff(&co_theta),
                var_theta_l2: c_theta.var_l2_diff(&co_theta),
            },
            gal: MethodErrors {
                mean_lambda: (g_mean - go_mean).abs(),
                var_lambda: (g_var - go_var).abs(),
                mean_theta_l2: g_theta.mean_l2_diff(&go_theta),
                var_theta_l2: g_theta.var_l2_diff(&go_theta),
            },
            coll_stats: (c_mean, c_var),
            gal_stats: (g_mean, g_var),
        });
    }

    finish_validation(
        cfg,
        out,
        rows,
        ovk_set.len(),
        (go_mean - co_mean).abs(),
        "validation_2d",
    )
}

/// Eigenvalue statistics of one spectral basis vector: its Rayleigh quotient
/// at the collocation points, run through the combination quadrature.
fn rayleigh_statistics(
    pencil: &AffinePencil,
    grid: &SparseGrid,
    moments: &MomentMatrices,
    basis: &SpectralVector,
) -> Result<(f64, f64), DynError> {
    let mut values = Vec::with_capacity(grid.len());
    for point in grid.points() {
        let v = basis.evaluate(moments, point);
        let k = pencil.stiffness_at(point);
        let num = k.bilinear(&v, &v);
        let den = pencil.m_inner(&v, &v);
        values.push(num / den);
    }
    Ok(grid.statistics(&values)?)
}

fn align(stats: &mut FieldStats, reference: &FieldStats) {
    if stats.mean_dot(reference) < 0.0 {
        stats.flip_mean();
    }
}

fn finish_validation(
    _cfg: &Config,
    out: &Path,
    rows: Vec<ValidationRow>,
    overkill_len: usize,
    overkill_gap_mean: f64,
    stem: &str,
) -> Result<ValidationResult, DynError> {
    let mut table = CsvTable::new(&[
        "epsilon",
        "set_len",
        "max_dim",
        "grid_points",
        "coll_err_mean_lambda",
        "coll_err_var_lambda",
        "coll_err_mean_theta_l2",
        "coll_err_var_theta_l2",
        "gal_err_mean_lambda",
        "gal_err_var_lambda",
        "gal_err_mean_theta_l2",
        "gal_err_var_theta_l2",
        "coll_mean_lambda",
        "coll_var_lambda",
        "gal_mean_lambda",
        "gal_var_lambda",
    ]);
    for r in &rows {
        table.push(&[
            r.epsilon.into(),
            r.set_len.into(),
            r.max_dim.into(),
            r.grid_points.into(),
            r.coll.mean_lambda.into(),
            r.coll.var_lambda.into(),
            r.coll.mean_theta_l2.into(),
            r.coll.var_theta_l2.into(),
            r.gal.mean_lambda.into(),
            r.gal.var_lambda.into(),
            r.gal.mean_theta_l2.into(),
            r.gal.var_theta_l2.into(),
            r.coll_stats.0.into(),
            r.coll_stats.1.into(),
            r.gal_stats.0.into(),
            r.gal_stats.1.into(),
        ]);
    }
    table.write(&out.join(format!("{stem}.csv")))?;

    let gal_data: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.set_len as f64, r.gal.mean_lambda))
        .collect();
    let coll_data: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.set_len as f64, r.coll.mean_lambda))
        .collect();
    let fit_gal = loglog_fit(&gal_data, 4);
    let fit_coll = loglog_fit(&coll_data, 4);

    let mut fit_table = CsvTable::new(&["method", "slope", "residual"]);
    fit_table.push(&[
        crate::csvio::CsvCell::Text("galerkin".into()),
        fit_gal.slope.into(),
        fit_gal.residual.into(),
    ]);
    fit_table.push(&[
        crate::csvio::CsvCell::Text("collocation".into()),
        fit_coll.slope.into(),
        fit_coll.residual.into(),
    ]);
    fit_table.write(&out.join(format!("{stem}_fits.csv")))?;

    Ok(ValidationResult {
        rows,
        overkill_len,
        fit_gal,
        fit_coll,
        overkill_gap_mean,
    })
}

pub(super) fn write_iteration_report(
    path: &Path,
    report: &shell_spectra_core::spectral::IterationReport,
) -> Result<(), DynError> {
    let mut table = CsvTable::new(&["step", "delta", "inner_iterations"]);
    for (i, d) in report.deltas.iter().enumerate() {
        let inner = report.inner_iterations.get(i).copied().unwrap_or(0);
        table.push(&[(i + 1).into(), (*d).into(), inner.into()]);
    }
    table.write(path)?;
    Ok(())
}
