//! Spatial calibration: convergence of the stochastic solution statistics
//! under p-refinement against a high-order overkill reference, for several
//! shell thicknesses.

use super::common::{
    assemble_1d, galerkin_field_stats_1d, galerkin_simple, index_set, minimizing_wavenumber,
    reference_pairs, DynError, FieldStats,
};
use crate::config::Config;
use crate::csvio::CsvTable;
use crate::ratefit::{decay_base, loglinear_fit, RateFit};
use shell_spectra_core::polychaos::MomentMatrices;
use shell_spectra_core::shellfem::Component;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct CalibrationRow {
    pub thickness: f64,
    pub p_order: usize,
    pub err_mean_lambda: f64,
    pub err_mean_theta: f64,
    pub err_var_lambda: f64,
    pub err_var_theta: f64,
}

#[derive(Debug)]
pub struct CalibrationResult {
    pub rows: Vec<CalibrationRow>,
    /// Per thickness: geometric base fitted to the mean-eigenvalue error as a
    /// function of p.
    pub fits: Vec<(f64, RateFit)>,
    pub wavenumbers: Vec<(f64, u32)>,
}

impl CalibrationResult {
    pub fn rows_for(&self, thickness: f64) -> Vec<&CalibrationRow> {
        self.rows
            .iter()
            .filter(|r| r.thickness == thickness)
            .collect()
    }

    pub fn base_for(&self, thickness: f64) -> Option<f64> {
        self.fits
            .iter()
            .find(|(t, _)| *t == thickness)
            .map(|(_, f)| decay_base(f))
    }
}

pub fn run_calibration(cfg: &Config, out: &Path) -> Result<CalibrationResult, DynError> {
    let set = index_set(cfg, cfg.epsilon)?;
    let moments = MomentMatrices::build(&set);
    let field_terms = set.max_active_dim();
    let quad_pts = cfg.p_overkill + 4;

    let mut rows = Vec::new();
    let mut fits = Vec::new();
    let mut wavenumbers = Vec::new();
    for &t in &cfg.thicknesses {
        let (k_star, _) = minimizing_wavenumber(cfg, t, *cfg.p_sweep.last().unwrap())?;
        wavenumbers.push((t, k_star));

        // Overkill reference at the top order.
        let pencil_ovk = assemble_1d(cfg, cfg.p_overkill, t, k_star, field_terms)?;
        let ref_ovk = reference_pairs(&pencil_ovk, 1, cfg.tol_eigen)?;
        let run_ovk = galerkin_simple(cfg, &pencil_ovk, &moments, &ref_ovk[0].vector)?;
        let (ovk_mean_l, ovk_var_l) = run_ovk.lambda.mean_var();
        let ovk_theta =
            galerkin_field_stats_1d(&pencil_ovk, &run_ovk.y, Component::Theta, quad_pts);

        for &p in &cfg.p_sweep {
            let pencil = assemble_1d(cfg, p, t, k_star, field_terms)?;
            let reference = reference_pairs(&pencil, 1, cfg.tol_eigen)?;
            let run = galerkin_simple(cfg, &pencil, &moments, &reference[0].vector)?;
            let (mean_l, var_l) = run.lambda.mean_var();
            let mut theta = galerkin_field_stats_1d(&pencil, &run.y, Component::Theta, quad_pts);
            align_to(&mut theta, &ovk_theta);
            rows.push(CalibrationRow {
                thickness: t,
                p_order: p,
                err_mean_lambda: (mean_l - ovk_mean_l).abs(),
                err_mean_theta: theta.mean_l2_diff(&ovk_theta),
                err_var_lambda: (var_l - ovk_var_l).abs(),
                err_var_theta: theta.var_l2_diff(&ovk_theta),
            });
        }

        let data: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.thickness == t)
            .map(|r| (r.p_order as f64, r.err_mean_lambda))
            .collect();
        fits.push((t, loglinear_fit(&data, 0)));
    }

    let mut table = CsvTable::new(&[
        "thickness",
        "p",
        "err_mean_lambda",
        "err_mean_theta_l2",
        "err_var_lambda",
        "err_var_theta_l2",
    ]);
    for r in &rows {
        table.push(&[
            r.thickness.into(),
            r.p_order.into(),
            r.err_mean_lambda.into(),
            r.err_mean_theta.into(),
            r.err_var_lambda.into(),
            r.err_var_theta.into(),
        ]);
    }
    table.write(&out.join("calibration.csv"))?;

    let mut fit_table = CsvTable::new(&["thickness", "wavenumber", "base", "fit_residual"]);
    for ((t, fit), (_, k)) in fits.iter().zip(&wavenumbers) {
        fit_table.push(&[
            (*t).into(),
            (*k as usize).into(),
            decay_base(fit).into(),
            fit.residual.into(),
        ]);
    }
    fit_table.write(&out.join("calibration_fits.csv"))?;

    let mut dump = Vec::new();
    set.write_text(&mut dump, cfg.epsilon, &cfg.eta_description())?;
    std::fs::write(out.join("index_set.txt"), dump)?;

    Ok(CalibrationResult {
        rows,
        fits,
        wavenumbers,
    })
}

/// Flip the candidate's eigenvector orientation to match the reference.
fn align_to(stats: &mut FieldStats, reference: &FieldStats) {
    if stats.mean_dot(reference) < 0.0 {
        stats.flip_mean();
    }
}
