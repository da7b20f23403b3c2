use clap::Parser;
use shell_spectra::config::{Config, Experiment};
use shell_spectra::experiments;
use std::path::PathBuf;
use std::process::ExitCode;

/// Eigenpairs and eigenspaces of thin cylindrical shells with parametric
/// material uncertainty: experiment drivers.
#[derive(Parser)]
#[command(name = "shell-spectra", version, about)]
struct Cli {
    /// Experiment: calibrate | validate-1d | validate-2d | crossing |
    /// asymptotics | general-2d
    experiment: String,
    /// TOML configuration file layered over the experiment defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use the full-scale settings for the 2D experiments (long runs).
    #[arg(long)]
    slow: bool,
    /// Output directory (default: out/<experiment>).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(experiment) = Experiment::parse(&cli.experiment) else {
        eprintln!(
            "unknown experiment {:?}; expected one of calibrate, validate-1d, validate-2d, \
             crossing, asymptotics, general-2d",
            cli.experiment
        );
        return ExitCode::FAILURE;
    };
    let cfg = match Config::load(experiment, cli.slow, cli.config.as_deref()) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let out = cli
        .out
        .unwrap_or_else(|| PathBuf::from("out").join(experiment.name()));
    if let Err(e) = std::fs::create_dir_all(&out) {
        eprintln!("cannot create output directory {}: {e}", out.display());
        return ExitCode::FAILURE;
    }

    let started = std::time::Instant::now();
    let result = run(experiment, &cfg, &out);
    match result {
        Ok(summary) => {
            println!("{summary}");
            println!(
                "done in {:.1} s; outputs in {}",
                started.elapsed().as_secs_f64(),
                out.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("experiment failed: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(
    experiment: Experiment,
    cfg: &Config,
    out: &std::path::Path,
) -> Result<String, experiments::DynError> {
    match experiment {
        Experiment::Calibrate => {
            let r = experiments::run_calibration(cfg, out)?;
            let bases: Vec<String> = r
                .fits
                .iter()
                .map(|(t, f)| format!("t={t}: base {:.2}", shell_spectra::ratefit::decay_base(f)))
                .collect();
            Ok(format!(
                "calibration over {} runs; fitted decay bases: {}",
                r.rows.len(),
                bases.join(", ")
            ))
        }
        Experiment::Validate1D => {
            let r = experiments::run_validation_1d(cfg, out)?;
            Ok(format!(
                "validation (1D) over {} sets vs overkill P={}; mean-eigenvalue error exponents: \
                 galerkin {:.2}, collocation {:.2}",
                r.rows.len(),
                r.overkill_len,
                r.fit_gal.slope,
                r.fit_coll.slope
            ))
        }
        Experiment::Validate2D => {
            let r = experiments::run_validation_2d(cfg, out)?;
            Ok(format!(
                "validation (2D) over {} sets vs overkill P={}; mean-eigenvalue error exponents: \
                 galerkin {:.2}, collocation {:.2}",
                r.rows.len(),
                r.overkill_len,
                r.fit_gal.slope,
                r.fit_coll.slope
            ))
        }
        Experiment::Crossing => {
            let r = experiments::run_crossing(cfg, out)?;
            Ok(format!(
                "crossing: sign change at t={}: {}; control t={}: {}",
                r.main.thickness, r.main.sign_change, r.control.thickness, r.control.sign_change
            ))
        }
        Experiment::Asymptotics => {
            let r = experiments::run_asymptotics(cfg, out)?;
            Ok(format!(
                "asymptotics over {} thicknesses; slopes: mean {:.3}, sd {:.3}, wavenumber {:.3}",
                r.rows.len(),
                r.fit_mean.slope,
                r.fit_sd.slope,
                r.fit_wavenumber.slope
            ))
        }
        Experiment::General2D => {
            let r = experiments::run_general2d(cfg, out)?;
            Ok(format!(
                "general 2D: separation ratios axial-control {:.2e} vs general {:.2e}; \
                 min variance {:.2e}; model gaps mean {:.2e} var {:.2e}",
                r.axial_control.separation_ratio,
                r.naghdi.separation_ratio,
                r.naghdi.min_var.min(r.mathematical.min_var),
                r.model_mean_gap,
                r.model_var_gap
            ))
        }
    }
}
