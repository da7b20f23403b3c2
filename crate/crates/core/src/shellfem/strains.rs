//! Strain operators of the two shell models and the quadratic energy
//! densities built from them.
//!
//! Both models act on the five-field displacement `(u, v, w, theta, psi)`.
//! The two-dimensional forms below are specialized to the unit cylinder for
//! the Reissner-Naghdi model and to a constant curvature triple `(a, b, c)`
//! for the rectangle-domain ("mathematical") model; on the cylinder the
//! models agree except for the shear strain `rho_2`.

/// Shell model selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShellModel {
    Naghdi,
    Mathematical,
}

impl std::fmt::Display for ShellModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ShellModel::Naghdi => write!(f, "naghdi"),
            ShellModel::Mathematical => write!(f, "mathematical"),
        }
    }
}

/// Values and first derivatives of the five fields at one surface point.
#[derive(Debug, Clone, Copy, Default)]
pub struct Fields2D {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub theta: f64,
    pub psi: f64,
    pub u_x: f64,
    pub u_y: f64,
    pub v_x: f64,
    pub v_y: f64,
    pub w_x: f64,
    pub w_y: f64,
    pub theta_x: f64,
    pub theta_y: f64,
    pub psi_x: f64,
    pub psi_y: f64,
}

/// Values and axial derivatives of the five profile fields at one axial point.
#[derive(Debug, Clone, Copy, Default)]
pub struct Fields1D {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub theta: f64,
    pub psi: f64,
    pub u_x: f64,
    pub v_x: f64,
    pub w_x: f64,
    pub theta_x: f64,
    pub psi_x: f64,
}

/// The eight strain components: bending `kappa`, membrane `beta`, shear `rho`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Strains {
    pub k11: f64,
    pub k22: f64,
    pub k12: f64,
    pub b11: f64,
    pub b22: f64,
    pub b12: f64,
    pub r1: f64,
    pub r2: f64,
}

/// Two-dimensional strains of the chosen model. `curvature` is the constant
/// triple `(a, b, c)` used by the mathematical model and ignored by the
/// (cylinder-form) Naghdi strains.
pub fn strains_2d(model: ShellModel, curvature: (f64, f64, f64), f: &Fields2D) -> Strains {
    match model {
        ShellModel::Naghdi => Strains {
            k11: f.theta_x,
            k22: f.psi_y,
            k12: 0.5 * (f.psi_x + f.theta_y - f.v_x),
            b11: f.u_x,
            b22: f.v_y + f.w,
            b12: 0.5 * (f.v_x + f.u_y),
            r1: f.w_x - f.theta,
            r2: f.w_y - f.v - f.psi,
        },
        ShellModel::Mathematical => {
            let (a, b, c) = curvature;
            Strains {
                k11: f.theta_x,
                k22: f.psi_y,
                k12: 0.5 * (f.theta_y + f.psi_x),
                b11: f.u_x + a * f.w,
                b22: f.v_y + b * f.w,
                b12: 0.5 * (f.u_y + f.v_x) + c * f.w,
                r1: f.w_x - f.theta,
                r2: f.w_y - f.psi,
            }
        }
    }
}

/// One-dimensional strains after the angular separation with integer
/// wavenumber `k`; the trigonometric factors are already divided out.
pub fn strains_1d(model: ShellModel, curvature: (f64, f64, f64), k: u32, f: &Fields1D) -> Strains {
    let k = k as f64;
    match model {
        ShellModel::Naghdi => Strains {
            k11: f.theta_x,
            k22: k * f.psi,
            k12: 0.5 * (f.psi_x - k * f.theta - f.v_x),
            b11: f.u_x,
            b22: k * f.v + f.w,
            b12: 0.5 * (f.v_x - k * f.u),
            r1: f.w_x - f.theta,
            r2: -k * f.w - f.v - f.psi,
        },
        ShellModel::Mathematical => {
            let (a, b, c) = curvature;
            Strains {
                k11: f.theta_x,
                k22: k * f.psi,
                k12: 0.5 * (-k * f.theta + f.psi_x),
                b11: f.u_x + a * f.w,
                b22: k * f.v + b * f.w,
                b12: 0.5 * (-k * f.u + f.v_x) + c * f.w,
                r1: f.w_x - f.theta,
                r2: -k * f.w - f.psi,
            }
        }
    }
}

/// Symmetric pairings of the three energy densities, without the thickness
/// and Young's modulus factors:
///
/// * bending:  `nu (k11+k22)(k11'+k22') + (1-nu)(k11 k11' + k22 k22' + 2 k12 k12')`
/// * membrane: `12 [ nu (b11+b22)(b11'+b22') + (1-nu)(b11 b11' + b22 b22' + 2 b12 b12') ]`
/// * shear:    `6 (1-nu) (r1 r1' + r2 r2')`
pub fn energy_pairings(nu: f64, s: &Strains, t: &Strains) -> (f64, f64, f64) {
    let bending = nu * (s.k11 + s.k22) * (t.k11 + t.k22)
        + (1.0 - nu) * (s.k11 * t.k11 + s.k22 * t.k22 + 2.0 * s.k12 * t.k12);
    let membrane = 12.0
        * (nu * (s.b11 + s.b22) * (t.b11 + t.b22)
            + (1.0 - nu) * (s.b11 * t.b11 + s.b22 * t.b22 + 2.0 * s.b12 * t.b12));
    let shear = 6.0 * (1.0 - nu) * (s.r1 * t.r1 + s.r2 * t.r2);
    (bending, membrane, shear)
}
