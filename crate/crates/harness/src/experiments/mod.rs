//! Experiment drivers: calibration, 1D/2D validation, eigenvalue crossing,
//! thickness asymptotics and the general-uncertainty comparison.

pub mod asymptotics;
pub mod calibrate;
mod common;
pub mod crossing;
pub mod general2d;
pub mod validate;

pub use asymptotics::{run_asymptotics, AsymptoticsResult};
pub use calibrate::{run_calibration, CalibrationResult};
pub use common::{
    assemble_1d, assemble_2d, galerkin_simple, galerkin_subspace, index_set, k_terms,
    minimizing_wavenumber, reference_pairs, tail_contraction, DynError, EnsembleCache, FieldStats,
    GalerkinRun,
};
pub use crossing::{run_crossing, CrossingResult};
pub use general2d::{run_general2d, General2DResult};
pub use validate::{run_validation_1d, run_validation_2d, ValidationResult};
