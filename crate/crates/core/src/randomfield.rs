//! Affine random Young's modulus on the shell midsurface.
//!
//! The field has the form `E(x, y, xi) = E0 + sum_m E_m(x, y) xi_m` with
//! coefficients `E_m = mean * (m+1)^-2 * phi_m` and shapes `phi_m` that are
//! either purely axial or interleaved axial/angular. Positivity of the field
//! over the whole parameter box is enforced at construction.

use std::fmt;

/// Shape family of the coefficient functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeFamily {
    /// `phi_m(x, y) = sin(pi m x)`: variation along the axis only.
    Axial,
    /// Odd terms vary axially, even terms vary in the angular coordinate:
    /// `sin(pi m x)` for odd `m`, `sin(m y)` for even `m`.
    General,
}

impl fmt::Display for ShapeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeFamily::Axial => write!(f, "axial"),
            ShapeFamily::General => write!(f, "general"),
        }
    }
}

/// Error raised when a field construction cannot guarantee positivity.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldError {
    /// `ess inf E0 - sum_m ||E_m||_inf` was not positive.
    NonPositiveMargin(f64),
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldError::NonPositiveMargin(m) => {
                write!(f, "field positivity margin must be positive, got {m}")
            }
        }
    }
}

impl std::error::Error for FieldError {}

/// Shape function `phi_m` of the chosen family.
pub fn shape(family: ShapeFamily, m: usize, x: f64, y: f64) -> f64 {
    assert!(m >= 1, "term indices are 1-based");
    match family {
        ShapeFamily::Axial => (std::f64::consts::PI * m as f64 * x).sin(),
        ShapeFamily::General => {
            if m % 2 == 1 {
                (std::f64::consts::PI * m as f64 * x).sin()
            } else {
                (m as f64 * y).sin()
            }
        }
    }
}

/// Truncated affine expansion of the Young's modulus.
#[derive(Debug, Clone)]
pub struct FieldExpansion {
    mean: f64,
    family: ShapeFamily,
    amplitudes: Vec<f64>,
}

impl FieldExpansion {
    /// Standard expansion with `M` terms of amplitude `mean * (m+1)^-2`.
    ///
    /// The amplitude series is summable below the mean, so positivity holds
    /// for every truncation; the constructor still routes through the margin
    /// check.
    pub fn new(mean: f64, family: ShapeFamily, terms: usize) -> Result<Self, FieldError> {
        let amplitudes = (1..=terms)
            .map(|m| {
                let b = (m + 1) as f64;
                mean / (b * b)
            })
            .collect();
        Self::with_amplitudes(mean, family, amplitudes)
    }

    /// Expansion with explicit term amplitudes (`||E_m||_inf` values).
    ///
    /// Fails unless `mean > sum |amplitudes|`, the condition guaranteeing a
    /// strictly positive field on the whole parameter box.
    pub fn with_amplitudes(
        mean: f64,
        family: ShapeFamily,
        amplitudes: Vec<f64>,
    ) -> Result<Self, FieldError> {
        let field = FieldExpansion {
            mean,
            family,
            amplitudes,
        };
        let margin = field.positivity_margin();
        if margin <= 0.0 {
            return Err(FieldError::NonPositiveMargin(margin));
        }
        Ok(field)
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn family(&self) -> ShapeFamily {
        self.family
    }

    /// Number of expansion terms `M`.
    pub fn terms(&self) -> usize {
        self.amplitudes.len()
    }

    /// Amplitude `||E_m||_inf` of term `m` (1-based).
    pub fn amplitude(&self, m: usize) -> f64 {
        self.amplitudes[m - 1]
    }

    /// Coefficient function `E_m(x, y)`; `m = 0` is the constant mean.
    pub fn coefficient(&self, m: usize, x: f64, y: f64) -> f64 {
        if m == 0 {
            self.mean
        } else {
            self.amplitudes[m - 1] * shape(self.family, m, x, y)
        }
    }

    /// Field value `E0 + sum_m E_m(x, y) xi_m`; only `min(M, xi.len())` terms
    /// contribute.
    pub fn evaluate(&self, x: f64, y: f64, xi: &[f64]) -> f64 {
        let mut e = self.mean;
        for (m, &x_m) in xi.iter().enumerate().take(self.amplitudes.len()) {
            e += self.coefficient(m + 1, x, y) * x_m;
        }
        e
    }

    /// Worst-case distance of the field from zero over the parameter box:
    /// `ess inf E0 - sum_m ||E_m||_inf`.
    pub fn positivity_margin(&self) -> f64 {
        self.mean - self.amplitudes.iter().map(|a| a.abs()).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn shape_values() {
        assert!((shape(ShapeFamily::Axial, 1, 0.5, 0.0) - 1.0).abs() < TOL);
        assert!((shape(ShapeFamily::General, 2, 0.0, std::f64::consts::FRAC_PI_4) - 1.0).abs() < TOL);
        assert!(shape(ShapeFamily::Axial, 3, 0.0, 0.0).abs() < TOL);
        // Odd terms of the general family coincide with the axial ones.
        assert_eq!(
            shape(ShapeFamily::General, 3, 0.21, 4.0),
            shape(ShapeFamily::Axial, 3, 0.21, 1.0)
        );
    }

    #[test]
    fn evaluate_at_zero_is_mean() {
        let f = FieldExpansion::new(1.0, ShapeFamily::Axial, 25).unwrap();
        for &(x, y) in &[(0.0, 0.0), (0.3, 1.0), (-0.9, 5.5)] {
            assert_eq!(f.evaluate(x, y, &vec![0.0; 25]), 1.0);
        }
    }

    #[test]
    fn evaluate_single_term() {
        let f = FieldExpansion::new(1.0, ShapeFamily::Axial, 1).unwrap();
        assert!((f.evaluate(0.5, 0.0, &[1.0]) - 1.25).abs() < TOL);
    }

    #[test]
    fn evaluate_is_affine_in_parameters() {
        let f = FieldExpansion::new(1.0, ShapeFamily::General, 8).unwrap();
        let a: Vec<f64> = (0..8).map(|i| 0.1 * i as f64 - 0.3).collect();
        let b: Vec<f64> = (0..8).map(|i| 0.7 - 0.15 * i as f64).collect();
        let mid: Vec<f64> = a.iter().zip(&b).map(|(u, v)| 0.5 * (u + v)).collect();
        let (x, y) = (0.37, 2.1);
        let lhs = f.evaluate(x, y, &a) + f.evaluate(x, y, &b);
        let rhs = 2.0 * f.evaluate(x, y, &mid);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn margin_limits() {
        let empty = FieldExpansion::new(1.0, ShapeFamily::Axial, 0).unwrap();
        assert_eq!(empty.positivity_margin(), 1.0);

        // With many terms the margin tends to 1 - (pi^2/6 - 1) ~ 0.35507.
        let big = FieldExpansion::new(1.0, ShapeFamily::Axial, 100_000).unwrap();
        let limit = 2.0 - std::f64::consts::PI * std::f64::consts::PI / 6.0;
        assert!(big.positivity_margin() > limit);
        assert!((big.positivity_margin() - limit).abs() < 2e-5);
    }

    #[test]
    fn invalid_amplitudes_are_rejected() {
        let err = FieldExpansion::with_amplitudes(1.0, ShapeFamily::Axial, vec![1.0, 1.0]);
        assert_eq!(err.unwrap_err(), FieldError::NonPositiveMargin(-1.0));
    }

    #[test]
    fn sampled_minimum_respects_margin() {
        let f = FieldExpansion::new(1.0, ShapeFamily::Axial, 12).unwrap();
        let margin = f.positivity_margin();
        let mut rng = crate::util::Rng64::new(7);
        let mut min = f64::INFINITY;
        for _ in 0..2000 {
            let x = rng.next_symmetric();
            let xi: Vec<f64> = (0..12).map(|_| rng.next_symmetric()).collect();
            min = min.min(f.evaluate(x, 0.0, &xi));
        }
        assert!(min >= margin - TOL);
        assert!(margin > 0.0);
    }
}
