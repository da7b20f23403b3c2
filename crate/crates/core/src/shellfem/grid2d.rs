//! Full 2D discretization: `nx x ny` quadrilateral mesh on
//! `[-1, 1] x [0, 2 pi]`, periodic in the angular direction, tensor-product
//! hierarchic basis of order `p`.

use super::basis::shape_functions;
use super::strains::{energy_pairings, strains_2d, Fields2D};
use super::{
    AffinePencil, AssemblyError, Component, Discretization, ModeSpec, ShellProblem, NUM_COMPONENTS,
};
use crate::linalg::{SymMatrix, SymmetricPattern};
use crate::polychaos::QuadratureRule;
use std::sync::Arc;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Dof bookkeeping of the periodic 2D grid.
///
/// Scalar functions are numbered vertices, x-direction edges, y-direction
/// edges, then element interiors. The angular direction wraps: column
/// `iy = ny` is column `0`. Clamping removes every scalar supported on the
/// two boundary rings `x = -1` and `x = +1` (vertices and y-edges there).
#[derive(Debug, Clone)]
pub struct Grid2D {
    nx: usize,
    ny: usize,
    p: usize,
    x_nodes: Vec<f64>,
    reduced: Vec<Option<u32>>,
    n_scalar: usize,
    n_reduced: usize,
}

impl Grid2D {
    fn new(nx: usize, ny: usize, p: usize) -> Self {
        let x_nodes: Vec<f64> = (0..=nx).map(|i| -1.0 + 2.0 * i as f64 / nx as f64).collect();
        let nb = p - 1;
        let n_vert = (nx + 1) * ny;
        let n_xe = nx * ny;
        let n_ye = (nx + 1) * ny;
        let n_int = nx * ny;
        let n_scalar = n_vert + n_xe * nb + n_ye * nb + n_int * nb * nb;

        let off_xe = n_vert;
        let off_ye = off_xe + n_xe * nb;
        let off_int = off_ye + n_ye * nb;

        let mut constrained = vec![false; n_scalar];
        for iy in 0..ny {
            // Boundary ring vertices.
            constrained[iy] = true;
            constrained[nx * ny + iy] = true;
            // Boundary ring angular edges.
            for j in 0..nb {
                constrained[off_ye + iy * nb + j] = true;
                constrained[off_ye + (nx * ny + iy) * nb + j] = true;
            }
        }
        let mut reduced = vec![None; n_scalar];
        let mut next = 0u32;
        for s in 0..n_scalar {
            if !constrained[s] {
                reduced[s] = Some(next);
                next += 1;
            }
        }
        let _ = off_int;
        Grid2D {
            nx,
            ny,
            p,
            x_nodes,
            reduced,
            n_scalar,
            n_reduced: next as usize,
        }
    }

    pub fn mesh(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn p_order(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        NUM_COMPONENTS * self.n_reduced
    }

    pub fn n_unconstrained(&self) -> usize {
        NUM_COMPONENTS * self.n_scalar
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let nb = self.p - 1;
        let n_vert = (self.nx + 1) * self.ny;
        let off_xe = n_vert;
        let off_ye = off_xe + self.nx * self.ny * nb;
        let off_int = off_ye + (self.nx + 1) * self.ny * nb;
        (off_xe, off_ye, off_int)
    }

    /// Scalar ids of the `(p+1)^2` local tensor functions of element
    /// `(ex, ey)`; local index `i * (p+1) + j` pairs the `i`-th axial with the
    /// `j`-th angular 1D function, both in `[v-, v+, bubbles..]` order.
    fn elem_scalars(&self, ex: usize, ey: usize) -> Vec<usize> {
        let p = self.p;
        let nb = p - 1;
        let ny = self.ny;
        let (off_xe, off_ye, off_int) = self.offsets();
        let mut ids = Vec::with_capacity((p + 1) * (p + 1));
        for i in 0..=p {
            for j in 0..=p {
                let id = match (i, j) {
                    (0 | 1, 0 | 1) => (ex + i) * ny + (ey + j) % ny,
                    (0 | 1, _) => off_ye + ((ex + i) * ny + ey) * nb + (j - 2),
                    (_, 0 | 1) => off_xe + (ex * ny + (ey + j) % ny) * nb + (i - 2),
                    (_, _) => off_int + (ex * ny + ey) * nb * nb + (i - 2) * nb + (j - 2),
                };
                ids.push(id);
            }
        }
        ids
    }

    pub fn dof(&self, comp: Component, scalar: usize) -> Option<usize> {
        self.reduced[scalar].map(|r| comp.index() * self.n_reduced + r as usize)
    }

    /// Evaluate one component at `(x, y)`; the angular coordinate wraps.
    pub fn eval_component(&self, coeffs: &[f64], comp: Component, x: f64, y: f64) -> f64 {
        assert_eq!(coeffs.len(), self.n());
        let hx = 2.0 / self.nx as f64;
        let hy = TWO_PI / self.ny as f64;
        let ex = (((x + 1.0) / hx).floor() as isize).clamp(0, self.nx as isize - 1) as usize;
        let y = y.rem_euclid(TWO_PI);
        let ey = ((y / hy).floor() as isize).clamp(0, self.ny as isize - 1) as usize;
        let s = 2.0 * (x - self.x_nodes[ex]) / hx - 1.0;
        let r = 2.0 * (y - hy * ey as f64) / hy - 1.0;
        let (vx, _) = shape_functions(self.p, s);
        let (vy, _) = shape_functions(self.p, r);
        let mut acc = 0.0;
        for (l, scalar) in self.elem_scalars(ex, ey).into_iter().enumerate() {
            if let Some(g) = self.dof(comp, scalar) {
                let (i, j) = (l / (self.p + 1), l % (self.p + 1));
                acc += coeffs[g] * vx[i] * vy[j];
            }
        }
        acc
    }

    /// Evaluate one component of several coefficient vectors at `(x, y)`,
    /// sharing a single basis evaluation.
    pub fn eval_component_many(&self, coeffs: &[&[f64]], comp: Component, x: f64, y: f64) -> Vec<f64> {
        let hx = 2.0 / self.nx as f64;
        let hy = TWO_PI / self.ny as f64;
        let ex = (((x + 1.0) / hx).floor() as isize).clamp(0, self.nx as isize - 1) as usize;
        let y = y.rem_euclid(TWO_PI);
        let ey = ((y / hy).floor() as isize).clamp(0, self.ny as isize - 1) as usize;
        let s = 2.0 * (x - self.x_nodes[ex]) / hx - 1.0;
        let r = 2.0 * (y - hy * ey as f64) / hy - 1.0;
        let (vx, _) = shape_functions(self.p, s);
        let (vy, _) = shape_functions(self.p, r);
        let mut out = vec![0.0; coeffs.len()];
        for (l, scalar) in self.elem_scalars(ex, ey).into_iter().enumerate() {
            if let Some(g) = self.dof(comp, scalar) {
                let (i, j) = (l / (self.p + 1), l % (self.p + 1));
                let basis = vx[i] * vy[j];
                for (o, c) in out.iter_mut().zip(coeffs) {
                    *o += c[g] * basis;
                }
            }
        }
        out
    }

    /// Quadrature points `(x, y, weight)` with `sum w f ~ int f dx dy` over
    /// the midsurface, `n_per_dir` Gauss points per direction per element.
    pub fn integration_points(&self, n_per_dir: usize) -> Vec<(f64, f64, f64)> {
        let rule = crate::polychaos::gauss_nodes(n_per_dir.saturating_sub(1));
        let hx = 2.0 / self.nx as f64;
        let hy = TWO_PI / self.ny as f64;
        let mut out = Vec::new();
        for ex in 0..self.nx {
            for ey in 0..self.ny {
                for (&sx, &wx) in rule.nodes().iter().zip(rule.weights()) {
                    for (&sy, &wy) in rule.nodes().iter().zip(rule.weights()) {
                        out.push((
                            self.x_nodes[ex] + 0.5 * hx * (1.0 + sx),
                            hy * ey as f64 + 0.5 * hy * (1.0 + sy),
                            wx * wy * hx * hy,
                        ));
                    }
                }
            }
        }
        out
    }
}

fn packed(a: usize, b: usize, n: usize) -> usize {
    debug_assert!(a <= b);
    a * (2 * n - a + 1) / 2 + (b - a)
}

pub(super) fn assemble_2d(
    problem: &ShellProblem,
    quad_x: &QuadratureRule,
    quad_y: &QuadratureRule,
) -> Result<AffinePencil, AssemblyError> {
    let ModeSpec::TwoD { nx, ny } = problem.mode else {
        unreachable!("assemble_2d requires a 2D mode")
    };
    let grid = Grid2D::new(nx, ny, problem.p_order);
    let p = problem.p_order;
    let n_loc = (p + 1) * (p + 1);
    let n_tot = NUM_COMPONENTS * n_loc;
    let n_packed = n_tot * (n_tot + 1) / 2;
    let hx = 2.0 / nx as f64;
    let hy = TWO_PI / ny as f64;
    let t = problem.thickness;
    let nu = problem.poisson;
    let scale = 1.0 / (12.0 * (1.0 - nu * nu));
    let n_terms = problem.field.terms();
    let curvature = problem.geometry.curvature_triple();

    let shapes_x: Vec<(Vec<f64>, Vec<f64>)> = quad_x
        .nodes()
        .iter()
        .map(|&s| shape_functions(p, s))
        .collect();
    let shapes_y: Vec<(Vec<f64>, Vec<f64>)> = quad_y
        .nodes()
        .iter()
        .map(|&s| shape_functions(p, s))
        .collect();

    // Sparsity pattern. All elements share the same local structure; collect
    // the element dof lists once.
    let mut gdofs_per_elem: Vec<Vec<Option<usize>>> = Vec::with_capacity(nx * ny);
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    for ex in 0..nx {
        for ey in 0..ny {
            let scalars = grid.elem_scalars(ex, ey);
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
    }
    let pattern = Arc::new(SymmetricPattern::from_pairs(grid.n(), pairs));

    let mut k_vals: Vec<Vec<f64>> = vec![vec![0.0; pattern.nnz()]; n_terms + 1];
    let mut mass_vals: Vec<f64> = vec![0.0; pattern.nnz()];

    let mut local_k: Vec<Vec<f64>> = vec![vec![0.0; n_packed]; n_terms + 1];
    let mut local_m: Vec<f64> = vec![0.0; n_packed];
    let mut pair_buf: Vec<f64> = vec![0.0; n_packed];
    let mut strain_cols = Vec::with_capacity(n_tot);
    let mut values = vec![0.0; n_loc];
    let mut ddx = vec![0.0; n_loc];
    let mut ddy = vec![0.0; n_loc];

    for ex in 0..nx {
        for ey in 0..ny {
            for loc in &mut local_k {
                loc.fill(0.0);
            }
            local_m.fill(0.0);

            for (qx, (&sx, &wx)) in quad_x.nodes().iter().zip(quad_x.weights()).enumerate() {
                let x = grid.x_nodes[ex] + 0.5 * hx * (1.0 + sx);
                let measure = problem.geometry.measure(x);
                if !(measure > 0.0) {
                    return Err(AssemblyError::SingularGeometry { x, measure });
                }
                for (qy, (&sy, &wy)) in quad_y.nodes().iter().zip(quad_y.weights()).enumerate() {
                    let y = hy * ey as f64 + 0.5 * hy * (1.0 + sy);
                    let (fx, dx) = &shapes_x[qx];
                    let (fy, dy) = &shapes_y[qy];
                    for i in 0..=p {
                        for j in 0..=p {
                            let l = i * (p + 1) + j;
                            values[l] = fx[i] * fy[j];
                            ddx[l] = dx[i] * (2.0 / hx) * fy[j];
                            ddy[l] = fx[i] * dy[j] * (2.0 / hy);
                        }
                    }
                    let _ = qy;

                    strain_cols.clear();
                    for comp in Component::ALL {
                        for l in 0..n_loc {
                            let mut f = Fields2D::default();
                            let (v, gx, gy) = (values[l], ddx[l], ddy[l]);
                            match comp {
                                Component::U => {
                                    f.u = v;
                                    f.u_x = gx;
                                    f.u_y = gy;
                                }
                                Component::V => {
                                    f.v = v;
                                    f.v_x = gx;
                                    f.v_y = gy;
                                }
                                Component::W => {
                                    f.w = v;
                                    f.w_x = gx;
                                    f.w_y = gy;
                                }
                                Component::Theta => {
                                    f.theta = v;
                                    f.theta_x = gx;
                                    f.theta_y = gy;
                                }
                                Component::Psi => {
                                    f.psi = v;
                                    f.psi_x = gx;
                                    f.psi_y = gy;
                                }
                            }
                            strain_cols.push(strains_2d(problem.model, curvature, &f));
                        }
                    }

                    let mut idx = 0;
                    for a in 0..n_tot {
                        let sa = strain_cols[a];
                        for b in a..n_tot {
                            let (bend, mem, shear) = energy_pairings(nu, &sa, &strain_cols[b]);
                            pair_buf[idx] = t * (mem + shear) + t * t * t * bend;
                            idx += 1;
                        }
                    }

                    let base = scale * wx * wy * hx * hy * measure;
                    for (m, loc) in local_k.iter_mut().enumerate() {
                        let c = base * problem.field.coefficient(m, x, y);
                        if c == 0.0 {
                            continue;
                        }
                        for (lv, pv) in loc.iter_mut().zip(&pair_buf) {
                            *lv += c * pv;
                        }
                    }

                    let wm = wx * wy * hx * hy * measure;
                    for comp in Component::ALL {
                        let c = match comp {
                            Component::Theta | Component::Psi => wm * t * t * t / 12.0,
                            _ => wm * t,
                        };
                        let off = comp.index() * n_loc;
                        for l in 0..n_loc {
                            let vl = values[l];
                            for l2 in l..n_loc {
                                local_m[packed(off + l, off + l2, n_tot)] +=
                                    c * vl * values[l2];
                            }
                        }
                    }
                }
            }

            let gdofs = &gdofs_per_elem[ex * ny + ey];
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
    }

    let k = k_vals
        .into_iter()
        .map(|v| SymMatrix::from_values(pattern.clone(), v))
        .collect();
    let mass = SymMatrix::from_values(pattern.clone(), mass_vals);
    Ok(AffinePencil::new(k, mass, Discretization::TwoD(grid)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randomfield::{FieldExpansion, ShapeFamily};
    use crate::shellfem::{assemble, BoundaryCondition, ShellGeometry, ShellModel};

    fn problem(p: usize, nx: usize, ny: usize, terms: usize) -> ShellProblem {
        ShellProblem {
            geometry: ShellGeometry::Cylinder,
            model: ShellModel::Naghdi,
            thickness: 0.01,
            poisson: 1.0 / 3.0,
            field: FieldExpansion::new(1.0, ShapeFamily::General, terms).unwrap(),
            bc: BoundaryCondition::ClampedEnds,
            mode: ModeSpec::TwoD { nx, ny },
            p_order: p,
        }
    }

    #[test]
    fn dof_counts_match_tensor_structure() {
        let grid = Grid2D::new(16, 8, 6);
        assert_eq!(grid.n_unconstrained(), 23280);
        assert_eq!(grid.n(), 22800);
        let small = Grid2D::new(4, 3, 2);
        // vertices 15, x-edges 12, y-edges 15, interiors 12, each bubble 1.
        assert_eq!(small.n_unconstrained(), 5 * (15 + 12 + 15 + 12));
        // Clamped rings: 3 vertices + 3 edges per ring.
        assert_eq!(small.n(), small.n_unconstrained() - 5 * 2 * (3 + 3));
    }

    #[test]
    fn shared_scalars_are_consistent_across_elements() {
        let grid = Grid2D::new(3, 4, 3);
        let a = grid.elem_scalars(1, 3);
        let b = grid.elem_scalars(1, 0);
        let p = 3usize;
        // Top edge of (1,3) wraps to the bottom edge of (1,0): the vertex
        // pairs and the shared x-edge must coincide.
        assert_eq!(a[0 * (p + 1) + 1], b[0 * (p + 1) + 0]);
        assert_eq!(a[1 * (p + 1) + 1], b[1 * (p + 1) + 0]);
        // x-bubble on the shared edge (i = 2, j on the wrap side).
        assert_eq!(a[2 * (p + 1) + 1], b[2 * (p + 1) + 0]);
    }

    #[test]
    fn small_2d_pencil_is_spd() {
        use crate::linalg::BandedCholesky;
        let pencil = assemble(&problem(2, 4, 4, 2)).unwrap();
        for xi in [vec![0.0, 0.0], vec![1.0, -1.0], vec![-1.0, -1.0]] {
            let k = pencil.stiffness_at(&xi);
            assert!(BandedCholesky::factor(&k).is_ok(), "not SPD at {xi:?}");
        }
        assert!(BandedCholesky::factor(pencil.mass()).is_ok());
    }

    #[test]
    fn eval_component_is_partition_on_vertices() {
        let pencil = assemble(&problem(2, 4, 4, 0)).unwrap();
        let grid = pencil.disc().as_2d().unwrap();
        let mut coeffs = vec![0.0; pencil.n()];
        for s in 0..grid.n_scalar {
            // Set every unconstrained vertex of component v to one.
            if s < (grid.nx + 1) * grid.ny {
                if let Some(g) = grid.dof(Component::V, s) {
                    coeffs[g] = 1.0;
                }
            }
        }
        // Away from the clamped ends the vertex functions sum to one at mesh
        // nodes.
        let v = grid.eval_component(&coeffs, Component::V, 0.0, 0.0);
        assert!((v - 1.0).abs() < 1e-12);
        // The angular wrap evaluates consistently.
        let a = grid.eval_component(&coeffs, Component::V, 0.1, 0.3);
        let b = grid.eval_component(&coeffs, Component::V, 0.1, 0.3 + TWO_PI);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn integration_points_cover_the_surface() {
        let grid = Grid2D::new(3, 4, 2);
        let pts = grid.integration_points(3);
        let area: f64 = pts.iter().map(|&(_, _, w)| w).sum();
        assert!((area - 2.0 * TWO_PI).abs() < 1e-10);
    }
}
