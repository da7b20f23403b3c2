//! Midsurface geometry of a shell of revolution.
//!
//! A profile function `f(x)` rotated about the axis fixes the metric through
//! the Lame parameters `A1 = sqrt(1 + f'^2)`, `A2 = f` and the principal
//! curvature radii `R1 = -A1^3 / f''`, `R2 = A1 A2`. The unit cylinder is the
//! special case `f = 1` with `A1 A2 = 1`; its constant-curvature surrogate
//! uses the triple `(a, b, c) = (0, 1, 0)`.

use std::sync::Arc;

/// Profile function together with its first two derivatives.
#[derive(Clone)]
pub struct Profile {
    pub f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub df: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub ddf: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for Profile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Profile{..}")
    }
}

/// Shell midsurface description.
#[derive(Debug, Clone)]
pub enum ShellGeometry {
    /// Unit cylinder: `A1 = A2 = 1`, curvature triple `(0, 1, 0)`.
    Cylinder,
    /// General profile of revolution with a constant-curvature triple for the
    /// rectangle-domain model.
    Profile {
        profile: Profile,
        curvature_triple: (f64, f64, f64),
    },
}

impl ShellGeometry {
    /// Lame parameters `(A1, A2)` at axial coordinate `x`.
    pub fn lame(&self, x: f64) -> (f64, f64) {
        match self {
            ShellGeometry::Cylinder => (1.0, 1.0),
            ShellGeometry::Profile { profile, .. } => {
                let d = (profile.df)(x);
                ((1.0 + d * d).sqrt(), (profile.f)(x))
            }
        }
    }

    /// Principal curvature radii `(R1, R2)` at `x`; `R1` is infinite where the
    /// profile has no axial curvature.
    pub fn curvature_radii(&self, x: f64) -> (f64, f64) {
        match self {
            ShellGeometry::Cylinder => (f64::INFINITY, 1.0),
            ShellGeometry::Profile { profile, .. } => {
                let (a1, a2) = self.lame(x);
                let ddf = (profile.ddf)(x);
                let r1 = if ddf == 0.0 {
                    f64::INFINITY
                } else {
                    -a1.powi(3) / ddf
                };
                (r1, a1 * a2)
            }
        }
    }

    /// Constant curvature triple `(a, b, c)` of the rectangle-domain model.
    pub fn curvature_triple(&self) -> (f64, f64, f64) {
        match self {
            ShellGeometry::Cylinder => (0.0, 1.0, 0.0),
            ShellGeometry::Profile {
                curvature_triple, ..
            } => *curvature_triple,
        }
    }

    /// Surface measure density `A1 * A2` at `x`.
    pub fn measure(&self, x: f64) -> f64 {
        let (a1, a2) = self.lame(x);
        a1 * a2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cylinder_metric_is_unit() {
        let g = ShellGeometry::Cylinder;
        assert_eq!(g.lame(0.3), (1.0, 1.0));
        assert_eq!(g.measure(-0.7), 1.0);
        let (r1, r2) = g.curvature_radii(0.0);
        assert!(r1.is_infinite());
        assert_eq!(r2, 1.0);
        assert_eq!(g.curvature_triple(), (0.0, 1.0, 0.0));
    }

    #[test]
    fn profile_formulas() {
        // f(x) = 1 + x^2.
        let g = ShellGeometry::Profile {
            profile: Profile {
                f: Arc::new(|x| 1.0 + x * x),
                df: Arc::new(|x| 2.0 * x),
                ddf: Arc::new(|_| 2.0),
            },
            curvature_triple: (0.0, 1.0, 0.0),
        };
        let x = 0.5;
        let (a1, a2) = g.lame(x);
        assert!((a1 - (1.0f64 + 1.0).sqrt()).abs() < 1e-14);
        assert!((a2 - 1.25).abs() < 1e-14);
        let (r1, r2) = g.curvature_radii(x);
        assert!((r1 + a1.powi(3) / 2.0).abs() < 1e-14);
        assert!((r2 - a1 * a2).abs() < 1e-14);
    }
}
