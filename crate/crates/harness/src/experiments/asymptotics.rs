//! Thickness asymptotics: the minimizing wavenumber, the mean and the
//! standard deviation of the smallest eigenvalue over a logarithmic thickness
//! sweep.

use super::common::{
    assemble_1d, galerkin_simple, index_set, minimizing_wavenumber, reference_pairs, DynError,
};
use crate::config::Config;
use crate::csvio::CsvTable;
use crate::ratefit::{loglog_fit, RateFit};
use shell_spectra_core::polychaos::MomentMatrices;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct AsymptoticsRow {
    pub thickness: f64,
    pub wavenumber: u32,
    pub mean_lambda: f64,
    pub var_lambda: f64,
    pub sd_lambda: f64,
}

#[derive(Debug)]
pub struct AsymptoticsResult {
    pub rows: Vec<AsymptoticsRow>,
    pub fit_mean: RateFit,
    pub fit_sd: RateFit,
    pub fit_wavenumber: RateFit,
}

pub fn run_asymptotics(cfg: &Config, out: &Path) -> Result<AsymptoticsResult, DynError> {
    let set = index_set(cfg, cfg.epsilon)?;
    let moments = MomentMatrices::build(&set);
    let field_terms = set.max_active_dim();

    let mut rows = Vec::new();
    for &t in &cfg.thicknesses {
        let (k_star, _) = minimizing_wavenumber(cfg, t, cfg.p_order)?;
        let pencil = assemble_1d(cfg, cfg.p_order, t, k_star, field_terms)?;
        let reference = reference_pairs(&pencil, 1, cfg.tol_eigen)?;
        let run = galerkin_simple(cfg, &pencil, &moments, &reference[0].vector)?;
        let (mean, var) = run.lambda.mean_var();
        rows.push(AsymptoticsRow {
            thickness: t,
            wavenumber: k_star,
            mean_lambda: mean,
            var_lambda: var,
            sd_lambda: var.max(0.0).sqrt(),
        });
    }

    let mut table = CsvTable::new(&[
        "thickness",
        "wavenumber",
        "mean_lambda",
        "var_lambda",
        "sd_lambda",
    ]);
    for r in &rows {
        table.push(&[
            r.thickness.into(),
            (r.wavenumber as usize).into(),
            r.mean_lambda.into(),
            r.var_lambda.into(),
            r.sd_lambda.into(),
        ]);
    }
    table.write(&out.join("asymptotics.csv"))?;

    let mean_data: Vec<(f64, f64)> = rows.iter().map(|r| (r.thickness, r.mean_lambda)).collect();
    let sd_data: Vec<(f64, f64)> = rows.iter().map(|r| (r.thickness, r.sd_lambda)).collect();
    let k_data: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.thickness, r.wavenumber as f64))
        .collect();
    let fit_mean = loglog_fit(&mean_data, 0);
    let fit_sd = loglog_fit(&sd_data, 0);
    let fit_wavenumber = loglog_fit(&k_data, 0);

    let mut fits = CsvTable::new(&["quantity", "slope", "residual"]);
    for (name, fit) in [
        ("mean_lambda", &fit_mean),
        ("sd_lambda", &fit_sd),
        ("wavenumber", &fit_wavenumber),
    ] {
        fits.push(&[
            crate::csvio::CsvCell::Text(name.into()),
            fit.slope.into(),
            fit.residual.into(),
        ]);
    }
    fits.write(&out.join("asymptotics_fits.csv"))?;

    Ok(AsymptoticsResult {
        rows,
        fit_mean,
        fit_sd,
        fit_wavenumber,
    })
}
