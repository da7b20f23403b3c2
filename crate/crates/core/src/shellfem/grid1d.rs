//! Axial (1D) discretization: uniform mesh on `[-1, 1]`, hierarchic basis of
//! order `p`, five components numbered component-major.

use super::basis::shape_functions;
use super::strains::{energy_pairings, strains_1d, Fields1D};
use super::{
    AffinePencil, AssemblyError, Component, Discretization, ModeSpec, ShellProblem, NUM_COMPONENTS,
};
use crate::linalg::{SymMatrix, SymmetricPattern};
use crate::polychaos::QuadratureRule;
use crate::randomfield::ShapeFamily;
use std::sync::Arc;

/// Dof bookkeeping of the 1D grid.
///
/// Scalar (per-component) functions are numbered vertices first, then the
/// per-element bubbles; the global dof of `(component, scalar)` is
/// `component * n_reduced + reduced(scalar)` after the clamped end vertices
/// are eliminated.
#[derive(Debug, Clone)]
pub struct Grid1D {
    n_elem: usize,
    p: usize,
    nodes: Vec<f64>,
    reduced: Vec<Option<u32>>,
    n_scalar: usize,
    n_reduced: usize,
    wavenumber: u32,
}

impl Grid1D {
    fn new(n_elem: usize, p: usize, wavenumber: u32) -> Self {
        let nodes: Vec<f64> = (0..=n_elem)
            .map(|i| -1.0 + 2.0 * i as f64 / n_elem as f64)
            .collect();
        let n_scalar = (n_elem + 1) + n_elem * (p - 1);
        // Clamped ends: the two boundary vertices vanish for every component.
        let mut reduced = vec![None; n_scalar];
        let mut next = 0u32;
        for s in 0..n_scalar {
            if s == 0 || s == n_elem {
                continue;
            }
            reduced[s] = Some(next);
            next += 1;
        }
        Grid1D {
            n_elem,
            p,
            nodes,
            reduced,
            n_scalar,
            n_reduced: next as usize,
            wavenumber,
        }
    }

    pub fn n_elem(&self) -> usize {
        self.n_elem
    }

    pub fn p_order(&self) -> usize {
        self.p
    }

    pub fn wavenumber(&self) -> u32 {
        self.wavenumber
    }

    /// Constrained system size.
    pub fn n(&self) -> usize {
        NUM_COMPONENTS * self.n_reduced
    }

    pub fn n_unconstrained(&self) -> usize {
        NUM_COMPONENTS * self.n_scalar
    }

    /// Scalar ids of an element's local functions `[v-, v+, bubbles..]`.
    fn elem_scalars(&self, e: usize) -> Vec<usize> {
        let mut ids = Vec::with_capacity(self.p + 1);
        ids.push(e);
        ids.push(e + 1);
        let base = self.n_elem + 1 + e * (self.p - 1);
        for j in 0..(self.p - 1) {
            ids.push(base + j);
        }
        ids
    }

    /// Global dof of `(component, scalar)` in the constrained numbering.
    pub fn dof(&self, comp: Component, scalar: usize) -> Option<usize> {
        self.reduced[scalar].map(|r| comp.index() * self.n_reduced + r as usize)
    }

    /// Evaluate one component of a coefficient vector at axial position `x`.
    pub fn eval_component(&self, coeffs: &[f64], comp: Component, x: f64) -> f64 {
        assert_eq!(coeffs.len(), self.n());
        let h = 2.0 / self.n_elem as f64;
        let e = (((x + 1.0) / h).floor() as isize).clamp(0, self.n_elem as isize - 1) as usize;
        let s = 2.0 * (x - self.nodes[e]) / h - 1.0;
        let (vals, _) = shape_functions(self.p, s);
        let mut acc = 0.0;
        for (l, scalar) in self.elem_scalars(e).into_iter().enumerate() {
            if let Some(g) = self.dof(comp, scalar) {
                acc += coeffs[g] * vals[l];
            }
        }
        acc
    }

    /// Evaluate one component of several coefficient vectors at `x`, sharing
    /// a single basis evaluation.
    pub fn eval_component_many(&self, coeffs: &[&[f64]], comp: Component, x: f64) -> Vec<f64> {
        let h = 2.0 / self.n_elem as f64;
        let e = (((x + 1.0) / h).floor() as isize).clamp(0, self.n_elem as isize - 1) as usize;
        let s = 2.0 * (x - self.nodes[e]) / h - 1.0;
        let (vals, _) = shape_functions(self.p, s);
        let mut out = vec![0.0; coeffs.len()];
        for (l, scalar) in self.elem_scalars(e).into_iter().enumerate() {
            if let Some(g) = self.dof(comp, scalar) {
                for (o, c) in out.iter_mut().zip(coeffs) {
                    *o += c[g] * vals[l];
                }
            }
        }
        out
    }

    /// Quadrature points `(x, weight)` with `sum w f(x) ~ int f dx` over the
    /// axial domain, `n_per_elem` Gauss points per element.
    pub fn integration_points(&self, n_per_elem: usize) -> Vec<(f64, f64)> {
        let rule = crate::polychaos::gauss_nodes(n_per_elem.saturating_sub(1));
        let h = 2.0 / self.n_elem as f64;
        let mut out = Vec::with_capacity(self.n_elem * rule.len());
        for e in 0..self.n_elem {
            let xm = self.nodes[e];
            for (&s, &w) in rule.nodes().iter().zip(rule.weights()) {
                out.push((xm + 0.5 * h * (1.0 + s), w * h));
            }
        }
        out
    }
}

fn packed(a: usize, b: usize, n: usize) -> usize {
    debug_assert!(a <= b);
    a * (2 * n - a + 1) / 2 + (b - a)
}

pub(super) fn assemble_1d(
    problem: &ShellProblem,
    quad: &QuadratureRule,
) -> Result<AffinePencil, AssemblyError> {
    let ModeSpec::OneD {
        wavenumber,
        n_elem,
        ..
    } = problem.mode
    else {
        unreachable!("assemble_1d requires a 1D mode")
    };
    if problem.field.family() == ShapeFamily::General && problem.field.terms() > 0 {
        return Err(AssemblyError::UnsupportedGeometry(
            "the angular separation requires a purely axial material field",
        ));
    }
    let grid = Grid1D::new(n_elem, problem.p_order, wavenumber);
    let p = problem.p_order;
    let n_loc = p + 1;
    let n_tot = NUM_COMPONENTS * n_loc;
    let n_packed = n_tot * (n_tot + 1) / 2;
    let h = 2.0 / n_elem as f64;
    let t = problem.thickness;
    let nu = problem.poisson;
    let scale = 1.0 / (12.0 * (1.0 - nu * nu));
    let n_terms = problem.field.terms();
    let curvature = problem.geometry.curvature_triple();

    // Reference shape data per quadrature point (uniform mesh: shared).
    let shapes: Vec<(Vec<f64>, Vec<f64>)> = quad
        .nodes()
        .iter()
        .map(|&s| shape_functions(p, s))
        .collect();

    // Global sparsity pattern from one structural sweep.
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    let mut gdofs_per_elem: Vec<Vec<Option<usize>>> = Vec::with_capacity(n_elem);
    for e in 0..n_elem {
        let scalars = grid.elem_scalars(e);
        let mut gdofs = Vec::with_capacity(n_tot);
        for comp in Component::ALL {
            for &s in &scalars {
                gdofs.push(grid.dof(comp, s));
            }
        }
        for a in 0..n_tot {
            let Some(ga) = gdofs[a] else { continue };
            for b in a..n_tot {
                let Some(gb) = gdofs[b] else { continue };
                pairs.push((ga as u32, gb as u32));
            }
        }
        gdofs_per_elem.push(gdofs);
    }
    let pattern = Arc::new(SymmetricPattern::from_pairs(grid.n(), pairs));

    let mut k_vals: Vec<Vec<f64>> = vec![vec![0.0; pattern.nnz()]; n_terms + 1];
    let mut mass_vals: Vec<f64> = vec![0.0; pattern.nnz()];

    let mut local_k: Vec<Vec<f64>> = vec![vec![0.0; n_packed]; n_terms + 1];
    let mut local_m: Vec<f64> = vec![0.0; n_packed];
    let mut pair_buf: Vec<f64> = vec![0.0; n_packed];
    let mut strain_cols = Vec::with_capacity(n_tot);

    for e in 0..n_elem {
        for loc in &mut local_k {
            loc.fill(0.0);
        }
        local_m.fill(0.0);

        for (q, (&s_q, &w_q)) in quad.nodes().iter().zip(quad.weights()).enumerate() {
            let x = grid.nodes[e] + 0.5 * h * (1.0 + s_q);
            let measure = problem.geometry.measure(x);
            if !(measure > 0.0) {
                return Err(AssemblyError::SingularGeometry { x, measure });
            }
            let (vals, derivs) = &shapes[q];
            let dxd = 2.0 / h;

            // Strain column of each local basis function.
            strain_cols.clear();
            for comp in Component::ALL {
                for l in 0..n_loc {
                    let mut f = Fields1D::default();
                    let (v, d) = (vals[l], derivs[l] * dxd);
                    match comp {
                        Component::U => {
                            f.u = v;
                            f.u_x = d;
                        }
                        Component::V => {
                            f.v = v;
                            f.v_x = d;
                        }
                        Component::W => {
                            f.w = v;
                            f.w_x = d;
                        }
                        Component::Theta => {
                            f.theta = v;
                            f.theta_x = d;
                        }
                        Component::Psi => {
                            f.psi = v;
                            f.psi_x = d;
                        }
                    }
                    strain_cols.push(strains_1d(problem.model, curvature, wavenumber, &f));
                }
            }

            // Thickness-weighted energy pairing of every local pair.
            let mut idx = 0;
            for a in 0..n_tot {
                for b in a..n_tot {
                    let (bend, mem, shear) =
                        energy_pairings(nu, &strain_cols[a], &strain_cols[b]);
                    pair_buf[idx] = t * (mem + shear) + t * t * t * bend;
                    idx += 1;
                }
            }

            // One coefficient per expansion term; the angular coordinate is
            // irrelevant for axial fields.
            let base = scale * w_q * h * measure;
            for (m, loc) in local_k.iter_mut().enumerate() {
                let c = base * problem.field.coefficient(m, x, 0.0);
                if c == 0.0 {
                    continue;
                }
                for (lv, pv) in loc.iter_mut().zip(&pair_buf) {
                    *lv += c * pv;
                }
            }

            // Mass: block diagonal over components, translational terms carry
            // t, rotations t^3 / 12.
            let wm = w_q * h * measure;
            for comp in Component::ALL {
                let c = match comp {
                    Component::Theta | Component::Psi => wm * t * t * t / 12.0,
                    _ => wm * t,
                };
                let off = comp.index() * n_loc;
                for l in 0..n_loc {
                    for l2 in l..n_loc {
                        local_m[packed(off + l, off + l2, n_tot)] += c * vals[l] * vals[l2];
                    }
                }
            }
        }

        // Scatter.
        let gdofs = &gdofs_per_elem[e];
        let mut idx = 0;
        for a in 0..n_tot {
            for b in a..n_tot {
                if let (Some(ga), Some(gb)) = (gdofs[a], gdofs[b]) {
                    let slot = pattern
                        .slot(ga as u32, gb as u32)
                        .expect("pattern covers all element pairs");
                    for (m, loc) in local_k.iter().enumerate() {
                        k_vals[m][slot] += loc[idx];
                    }
                    mass_vals[slot] += local_m[idx];
                }
                idx += 1;
            }
        }
    }

    let k = k_vals
        .into_iter()
        .map(|v| SymMatrix::from_values(pattern.clone(), v))
        .collect();
    let mass = SymMatrix::from_values(pattern.clone(), mass_vals);
    Ok(AffinePencil::new(k, mass, Discretization::OneD(grid)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randomfield::FieldExpansion;
    use crate::shellfem::{assemble, Ansatz, BoundaryCondition, ShellGeometry, ShellModel};

    fn problem(p: usize, n_elem: usize, k: u32, terms: usize) -> ShellProblem {
        ShellProblem {
            geometry: ShellGeometry::Cylinder,
            model: ShellModel::Naghdi,
            thickness: 0.01,
            poisson: 1.0 / 3.0,
            field: FieldExpansion::new(1.0, ShapeFamily::Axial, terms).unwrap(),
            bc: BoundaryCondition::ClampedEnds,
            mode: ModeSpec::OneD {
                wavenumber: k,
                ansatz: Ansatz::CosineFamily,
                n_elem,
            },
            p_order: p,
        }
    }

    #[test]
    fn dof_counts() {
        let pencil = assemble(&problem(6, 16, 6, 0)).unwrap();
        assert_eq!(pencil.disc().n_unconstrained(), 485);
        assert_eq!(pencil.n(), 475);
        let pencil8 = assemble(&problem(8, 16, 6, 0)).unwrap();
        assert_eq!(pencil8.disc().n_unconstrained(), 5 * (16 * 8 + 1));
    }

    #[test]
    fn constant_field_pencil_has_single_active_term() {
        let pencil = assemble(&problem(3, 4, 2, 0)).unwrap();
        assert_eq!(pencil.field_terms(), 0);
        let at_zero = pencil.stiffness_at(&[]);
        let diff: f64 = at_zero
            .values()
            .iter()
            .zip(pencil.k_term(0).values())
            .map(|(a, b)| (a - b).abs())
            .sum();
        assert_eq!(diff, 0.0);
    }

    #[test]
    fn matrices_are_spd_at_parameter_samples() {
        use crate::linalg::BandedCholesky;
        let pencil = assemble(&problem(4, 8, 5, 3)).unwrap();
        for xi in [
            vec![0.0, 0.0, 0.0],
            vec![1.0, 1.0, 1.0],
            vec![-1.0, -1.0, -1.0],
            vec![1.0, -1.0, 1.0],
        ] {
            let k = pencil.stiffness_at(&xi);
            assert!(BandedCholesky::factor(&k).is_ok(), "K not SPD at {xi:?}");
        }
        assert!(BandedCholesky::factor(pencil.mass()).is_ok());
    }

    #[test]
    fn field_scaling_scales_stiffness_terms() {
        let base = problem(3, 4, 2, 2);
        let mut scaled = base.clone();
        scaled.field = FieldExpansion::with_amplitudes(
            2.0,
            ShapeFamily::Axial,
            vec![2.0 / 4.0, 2.0 / 9.0],
        )
        .unwrap();
        let p0 = assemble(&base).unwrap();
        let p1 = assemble(&scaled).unwrap();
        for m in 0..=2 {
            for (a, b) in p1.k_term(m).values().iter().zip(p0.k_term(m).values()) {
                assert!((a - 2.0 * b).abs() < 1e-12 * b.abs().max(1.0));
            }
        }
        // The mass matrix does not see the material field.
        for (a, b) in p1.mass().values().iter().zip(p0.mass().values()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn general_field_is_rejected_in_1d() {
        let mut pr = problem(3, 4, 2, 2);
        pr.field = FieldExpansion::new(1.0, ShapeFamily::General, 2).unwrap();
        assert!(matches!(
            assemble(&pr),
            Err(AssemblyError::UnsupportedGeometry(_))
        ));
    }

    #[test]
    fn quadrature_refinement_is_converged() {
        // Enriching the rule beyond the assembly policy moves assembled
        // entries only at round-off level.
        let pr = problem(6, 16, 6, 20);
        let a = assemble(&pr).unwrap();
        let policy =
            crate::shellfem::assembly_points(6, std::f64::consts::PI * 20.0 * 2.0 / 16.0);
        let b = crate::shellfem::assemble_with_rule(
            &pr,
            &crate::shellfem::quadrature_with_points(policy + 6),
        )
        .unwrap();
        for m in 0..=20usize {
            let norm: f64 = a
                .k_term(m)
                .values()
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt();
            let diff: f64 = a
                .k_term(m)
                .values()
                .iter()
                .zip(b.k_term(m).values())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            assert!(diff < 1e-8 * norm, "term {m}: {diff} vs {norm}");
        }
    }

    #[test]
    fn eval_component_reproduces_vertex_interpolant() {
        let pencil = assemble(&problem(2, 4, 1, 0)).unwrap();
        let grid = pencil.disc().as_1d().unwrap();
        let mut coeffs = vec![0.0; pencil.n()];
        // Set the w component's interior vertex values to x^0-like data.
        for vertex in 1..4usize {
            if let Some(g) = grid.dof(Component::W, vertex) {
                coeffs[g] = 1.0;
            }
        }
        // At interior vertices w = 1; at the clamped ends w = 0.
        assert!((grid.eval_component(&coeffs, Component::W, -0.5) - 1.0).abs() < 1e-13);
        assert!((grid.eval_component(&coeffs, Component::W, 1.0)).abs() < 1e-13);
        assert!(grid.eval_component(&coeffs, Component::U, -0.5).abs() < 1e-13);
    }

    #[test]
    fn integration_points_integrate_polynomials() {
        let pencil = assemble(&problem(3, 5, 1, 0)).unwrap();
        let grid = pencil.disc().as_1d().unwrap();
        let pts = grid.integration_points(4);
        let val: f64 = pts.iter().map(|&(x, w)| w * x * x).sum();
        assert!((val - 2.0 / 3.0).abs() < 1e-12);
    }
}
