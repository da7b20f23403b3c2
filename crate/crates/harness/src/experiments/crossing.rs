//! Eigenvalue crossing: the smallest-eigenvalue surfaces of two adjacent
//! wavenumbers over a two-parameter slice of the box, at a thickness tuned so
//! the branches intersect, plus a control thickness where they do not.

use super::common::{assemble_1d, galerkin_simple, index_set, reference_pairs, DynError};
use crate::config::Config;
use crate::csvio::CsvTable;
use shell_spectra_core::polychaos::MomentMatrices;
use shell_spectra_core::spectral::SpectralScalar;
use std::path::Path;

#[derive(Debug)]
pub struct CrossingSurface {
    pub thickness: f64,
    /// Smallest eigenvalue per wavenumber at the anchor point.
    pub at_anchor: Vec<(u32, f64)>,
    /// Grid rows `(xi1, xi2, lambda_k...)`.
    pub grid: Vec<(f64, f64, Vec<f64>)>,
    /// Both signs of the branch difference occur on the slice.
    pub sign_change: bool,
}

#[derive(Debug)]
pub struct CrossingResult {
    pub main: CrossingSurface,
    pub control: CrossingSurface,
}

pub fn run_crossing(cfg: &Config, out: &Path) -> Result<CrossingResult, DynError> {
    let set = index_set(cfg, cfg.epsilon)?;
    let moments = MomentMatrices::build(&set);
    let main = surface(cfg, cfg.thickness, &set, &moments, out, "crossing")?;
    let control = surface(
        cfg,
        cfg.control_thickness,
        &set,
        &moments,
        out,
        "crossing_control",
    )?;
    let mut summary = CsvTable::new(&["thickness", "sign_change", "lambda_ratio_at_anchor"]);
    for s in [&main, &control] {
        let ratio = s.at_anchor[0].1 / s.at_anchor[1].1;
        summary.push(&[
            s.thickness.into(),
            (s.sign_change as usize).into(),
            ratio.into(),
        ]);
    }
    summary.write(&out.join("crossing_summary.csv"))?;
    Ok(CrossingResult { main, control })
}

fn surface(
    cfg: &Config,
    thickness: f64,
    set: &shell_spectra_core::multiindex::MultiIndexSet,
    moments: &MomentMatrices,
    out: &Path,
    stem: &str,
) -> Result<CrossingSurface, DynError> {
    let field_terms = set.max_active_dim();
    let mut lambdas: Vec<SpectralScalar> = Vec::new();
    let mut at_anchor = Vec::new();
    for &k in &cfg.wavenumbers {
        let pencil = assemble_1d(cfg, cfg.p_order, thickness, k, field_terms)?;
        let reference = reference_pairs(&pencil, 1, cfg.tol_eigen)?;
        at_anchor.push((k, reference[0].value));
        let run = galerkin_simple(cfg, &pencil, moments, &reference[0].vector)?;
        super::validate::write_iteration_report(
            &out.join(format!("iteration_{stem}_k{k}.csv")),
            &run.report,
        )?;
        lambdas.push(run.lambda);
    }

    // Evaluate the eigenvalue expansions on the (xi1, xi2) grid with every
    // remaining coordinate held at the slice value.
    let n = cfg.surface_grid.max(2);
    let dims = set.max_active_dim();
    let mut grid = Vec::with_capacity(n * n);
    let mut sign_pos = false;
    let mut sign_neg = false;
    for i in 0..n {
        let xi1 = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let xi2 = -1.0 + 2.0 * j as f64 / (n - 1) as f64;
            let mut xi = vec![cfg.slice_value; dims];
            if dims >= 1 {
                xi[0] = xi1;
            }
            if dims >= 2 {
                xi[1] = xi2;
            }
            let values: Vec<f64> = lambdas.iter().map(|l| l.evaluate(moments, &xi)).collect();
            if values.len() >= 2 {
                let d = values[0] - values[1];
                if d > 0.0 {
                    sign_pos = true;
                }
                if d < 0.0 {
                    sign_neg = true;
                }
            }
            grid.push((xi1, xi2, values));
        }
    }

    let mut header = vec!["xi1".to_string(), "xi2".to_string()];
    header.extend(cfg.wavenumbers.iter().map(|k| format!("lambda_k{k}")));
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut table = CsvTable::new(&header_refs);
    for (x1, x2, vals) in &grid {
        let mut cells: Vec<crate::csvio::CsvCell> = vec![(*x1).into(), (*x2).into()];
        cells.extend(vals.iter().map(|v| crate::csvio::CsvCell::from(*v)));
        table.push(&cells);
    }
    table.write(&out.join(format!("{stem}_surface.csv")))?;

    Ok(CrossingSurface {
        thickness,
        at_anchor,
        grid,
        sign_change: sign_pos && sign_neg,
    })
}
