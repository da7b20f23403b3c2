//! p-version finite element discretization of the shell eigenproblem.
//!
//! [`assemble`] turns a [`ShellProblem`] into an [`AffinePencil`]: the family
//! of stiffness matrices `K^(0), .., K^(M)` (one per material expansion term,
//! so `K(xi) = K^(0) + sum_m K^(m) xi_m`) and the mass matrix, all sharing one
//! sparsity pattern. Dof numbering is component-major; boundary conditions
//! are eliminated symmetrically.

mod basis;
mod geometry;
mod grid1d;
mod grid2d;
mod strains;

pub use basis::{assembly_points, energy_quadrature, quadrature_with_points, shape_functions};
pub use geometry::{Profile, ShellGeometry};
pub use grid1d::Grid1D;
pub use grid2d::Grid2D;
pub use strains::{
    energy_pairings, strains_1d, strains_2d, Fields1D, Fields2D, ShellModel, Strains,
};

use crate::linalg::{SymMatrix, SymmetricPattern};
use crate::randomfield::FieldExpansion;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

/// Number of displacement/rotation components.
pub const NUM_COMPONENTS: usize = 5;

/// The five fields, in dof-ordering position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    /// Axial displacement.
    U = 0,
    /// Angular displacement.
    V = 1,
    /// Transverse displacement.
    W = 2,
    /// Rotation in the axial direction.
    Theta = 3,
    /// Rotation in the angular direction.
    Psi = 4,
}

impl Component {
    pub const ALL: [Component; NUM_COMPONENTS] = [
        Component::U,
        Component::V,
        Component::W,
        Component::Theta,
        Component::Psi,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Component::U => "u",
            Component::V => "v",
            Component::W => "w",
            Component::Theta => "theta",
            Component::Psi => "psi",
        }
    }
}

/// Essential boundary conditions. Both axial ends are fully clamped: all five
/// components vanish at `x = -1` and `x = +1`. The angular direction of the
/// 2D discretization is periodic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryCondition {
    #[default]
    ClampedEnds,
}

/// Angular family of the separated eigenmodes: in the first family `u, w,
/// theta` carry `cos(k y)` and `v, psi` carry `sin(k y)`; the second family
/// swaps the factors. Both families produce identical reduced matrices for
/// every wavenumber, so the choice is bookkeeping only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ansatz {
    #[default]
    CosineFamily,
    SineFamily,
}

/// Spatial discretization mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeSpec {
    /// Angular separation with an integer wavenumber; a 1D mesh along the
    /// axis.
    OneD {
        wavenumber: u32,
        ansatz: Ansatz,
        n_elem: usize,
    },
    /// Full 2D discretization on an `nx x ny` quadrilateral mesh, periodic in
    /// the angular direction.
    TwoD { nx: usize, ny: usize },
}

/// Complete problem description handed to [`assemble`].
#[derive(Debug, Clone)]
pub struct ShellProblem {
    pub geometry: ShellGeometry,
    pub model: ShellModel,
    /// Dimensionless thickness `t > 0`.
    pub thickness: f64,
    /// Poisson ratio in `[0, 1/2)`.
    pub poisson: f64,
    pub field: FieldExpansion,
    pub bc: BoundaryCondition,
    pub mode: ModeSpec,
    /// Polynomial order of the hierarchic basis.
    pub p_order: usize,
}

/// Assembly failures.
#[derive(Debug, Clone, PartialEq)]
pub enum AssemblyError {
    InvalidThickness(f64),
    InvalidPoisson(f64),
    InvalidOrder(usize),
    /// The measure `A1 A2` was not strictly positive at a quadrature point.
    SingularGeometry { x: f64, measure: f64 },
    /// The Reissner-Naghdi strain forms are specialized to the cylinder.
    UnsupportedGeometry(&'static str),
}

impl fmt::Display for AssemblyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssemblyError::InvalidThickness(t) => write!(f, "thickness must be positive, got {t}"),
            AssemblyError::InvalidPoisson(nu) => {
                write!(f, "Poisson ratio must lie in [0, 1/2), got {nu}")
            }
            AssemblyError::InvalidOrder(p) => write!(f, "polynomial order must be >= 1, got {p}"),
            AssemblyError::SingularGeometry { x, measure } => {
                write!(f, "surface measure {measure} at x = {x} is not positive")
            }
            AssemblyError::UnsupportedGeometry(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for AssemblyError {}

/// Dof bookkeeping and evaluation access of an assembled problem.
#[derive(Debug, Clone)]
pub enum Discretization {
    OneD(Grid1D),
    TwoD(Grid2D),
}

impl Discretization {
    /// Constrained system size.
    pub fn n(&self) -> usize {
        match self {
            Discretization::OneD(g) => g.n(),
            Discretization::TwoD(g) => g.n(),
        }
    }

    /// Dof count before boundary conditions.
    pub fn n_unconstrained(&self) -> usize {
        match self {
            Discretization::OneD(g) => g.n_unconstrained(),
            Discretization::TwoD(g) => g.n_unconstrained(),
        }
    }

    pub fn as_1d(&self) -> Option<&Grid1D> {
        match self {
            Discretization::OneD(g) => Some(g),
            Discretization::TwoD(_) => None,
        }
    }

    pub fn as_2d(&self) -> Option<&Grid2D> {
        match self {
            Discretization::OneD(_) => None,
            Discretization::TwoD(g) => Some(g),
        }
    }
}

/// Affine matrix family `K(xi) = K^(0) + sum_m K^(m) xi_m` together with the
/// mass matrix, all on one shared sparsity pattern.
#[derive(Debug, Clone)]
pub struct AffinePencil {
    k: Vec<SymMatrix>,
    mass: SymMatrix,
    disc: Discretization,
}

impl AffinePencil {
    pub(crate) fn new(k: Vec<SymMatrix>, mass: SymMatrix, disc: Discretization) -> Self {
        AffinePencil { k, mass, disc }
    }

    /// System size after boundary conditions.
    pub fn n(&self) -> usize {
        self.mass.dim()
    }

    /// Number of stochastic stiffness terms `M` (excluding the mean term).
    pub fn field_terms(&self) -> usize {
        self.k.len() - 1
    }

    /// Stiffness term `K^(m)`, `0 <= m <= M`.
    pub fn k_term(&self, m: usize) -> &SymMatrix {
        &self.k[m]
    }

    pub fn mass(&self) -> &SymMatrix {
        &self.mass
    }

    pub fn disc(&self) -> &Discretization {
        &self.disc
    }

    pub fn pattern(&self) -> &Arc<SymmetricPattern> {
        self.mass.pattern()
    }

    /// Evaluate the stiffness matrix at a parameter point; coordinates beyond
    /// the stored terms are ignored, missing ones are treated as zero.
    pub fn stiffness_at(&self, xi: &[f64]) -> SymMatrix {
        let mut coeffs = Vec::with_capacity(self.k.len());
        coeffs.push(1.0);
        for m in 1..self.k.len() {
            coeffs.push(xi.get(m - 1).copied().unwrap_or(0.0));
        }
        let refs: Vec<&SymMatrix> = self.k.iter().collect();
        SymMatrix::combination(&refs, &coeffs)
    }

    /// Mass inner product `x . (M y)`.
    pub fn m_inner(&self, x: &[f64], y: &[f64]) -> f64 {
        self.mass.bilinear(x, y)
    }

    /// Mass norm `sqrt(x . M x)`.
    pub fn m_norm(&self, x: &[f64]) -> f64 {
        self.m_inner(x, x).max(0.0).sqrt()
    }

    /// Write every matrix of the pencil in matrix-market coordinate format:
    /// `K0.mtx .. K<M>.mtx` and `M.mtx` under `dir`.
    pub fn export_matrix_market(&self, dir: &std::path::Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (m, mat) in self.k.iter().enumerate() {
            write_matrix_market(&dir.join(format!("K{m}.mtx")), mat)?;
        }
        write_matrix_market(&dir.join("M.mtx"), &self.mass)
    }
}

fn write_matrix_market(path: &std::path::Path, mat: &SymMatrix) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
    let n = mat.dim();
    let nnz = mat.pattern().nnz();
    writeln!(out, "{n} {n} {nnz}")?;
    for i in 0..n {
        let range = mat.pattern().row_range(i);
        for k in range.clone() {
            let j = mat.pattern().row_cols(i)[k - range.start] as usize;
            // Symmetric coordinate format stores the lower triangle.
            writeln!(out, "{} {} {:e}", j + 1, i + 1, mat.values()[k])?;
        }
    }
    Ok(())
}

fn validate(problem: &ShellProblem) -> Result<(), AssemblyError> {
    if !(problem.thickness > 0.0) || !problem.thickness.is_finite() {
        return Err(AssemblyError::InvalidThickness(problem.thickness));
    }
    if !(0.0..0.5).contains(&problem.poisson) {
        return Err(AssemblyError::InvalidPoisson(problem.poisson));
    }
    if problem.p_order < 1 {
        return Err(AssemblyError::InvalidOrder(problem.p_order));
    }
    if problem.model == ShellModel::Naghdi && !matches!(problem.geometry, ShellGeometry::Cylinder)
    {
        return Err(AssemblyError::UnsupportedGeometry(
            "the Reissner-Naghdi strain forms apply to the cylinder only",
        ));
    }
    Ok(())
}

/// Worst per-element phase spans `(axial, angular)` of the material
/// coefficients over their element widths.
fn coefficient_phase_spans(problem: &ShellProblem) -> (f64, f64) {
    use crate::randomfield::ShapeFamily;
    let m_max = problem.field.terms();
    if m_max == 0 {
        return (0.0, 0.0);
    }
    match (problem.mode, problem.field.family()) {
        (ModeSpec::OneD { n_elem, .. }, _) => {
            (std::f64::consts::PI * m_max as f64 * 2.0 / n_elem as f64, 0.0)
        }
        (ModeSpec::TwoD { nx, .. }, ShapeFamily::Axial) => {
            (std::f64::consts::PI * m_max as f64 * 2.0 / nx as f64, 0.0)
        }
        (ModeSpec::TwoD { nx, ny }, ShapeFamily::General) => {
            let max_axial = if m_max % 2 == 1 { m_max } else { m_max - 1 };
            let max_angular = if m_max % 2 == 0 { m_max } else { m_max.saturating_sub(1) };
            (
                std::f64::consts::PI * max_axial as f64 * 2.0 / nx as f64,
                max_angular as f64 * 2.0 * std::f64::consts::PI / ny as f64,
            )
        }
    }
}

/// Assemble the affine pencil of a shell problem.
///
/// The quadrature starts from the `p + 4` policy and enriches each direction
/// by half the worst per-element phase span of the sine coefficients, so all
/// expansion terms are integrated to round-off.
pub fn assemble(problem: &ShellProblem) -> Result<AffinePencil, AssemblyError> {
    validate(problem)?;
    let (span_x, span_y) = coefficient_phase_spans(problem);
    let rule_x = quadrature_with_points(assembly_points(problem.p_order, span_x));
    match problem.mode {
        ModeSpec::OneD { .. } => grid1d::assemble_1d(problem, &rule_x),
        ModeSpec::TwoD { .. } => {
            let rule_y = quadrature_with_points(assembly_points(problem.p_order, span_y));
            grid2d::assemble_2d(problem, &rule_x, &rule_y)
        }
    }
}

/// Assemble with one explicit quadrature rule in every direction (used by the
/// quadrature refinement checks).
pub fn assemble_with_rule(
    problem: &ShellProblem,
    quad: &crate::polychaos::QuadratureRule,
) -> Result<AffinePencil, AssemblyError> {
    validate(problem)?;
    match problem.mode {
        ModeSpec::OneD { .. } => grid1d::assemble_1d(problem, quad),
        ModeSpec::TwoD { .. } => grid2d::assemble_2d(problem, quad, quad),
    }
}
