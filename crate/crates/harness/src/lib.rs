//! Experiment drivers and reporting for the shell eigenvalue workbench.
//!
//! The library couples the solver stack with reproducible experiment
//! configurations; the `shell-spectra` binary exposes each experiment as a
//! subcommand. Outputs are plain CSV tables, multi-index set dumps and chaos
//! coefficient files.

pub mod config;
pub mod csvio;
pub mod experiments;
pub mod ratefit;
