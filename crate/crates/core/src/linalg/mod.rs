//! Internal linear algebra: symmetric sparse storage with shared patterns,
//! bandwidth-reducing ordering, banded Cholesky factorization and dense
//! helpers for small reduced problems.

mod banded;
mod csr;
mod dense;

pub use banded::{reverse_cuthill_mckee, BandedCholesky};
pub use csr::{SymMatrix, SymmetricPattern};
pub use dense::generalized_symmetric_eigen;

use std::fmt;

/// Failures of the direct factorizations.
#[derive(Debug, Clone, PartialEq)]
pub enum LinalgError {
    /// A pivot was not positive during Cholesky factorization.
    NotPositiveDefinite { pivot_index: usize },
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::NotPositiveDefinite { pivot_index } => {
                write!(f, "matrix is not positive definite (pivot {pivot_index})")
            }
        }
    }
}

impl std::error::Error for LinalgError {}
