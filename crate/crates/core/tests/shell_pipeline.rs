//! Cross-module checks on a real (small) shell pencil: agreement of the two
//! solution strategies, invariances of the collocation algorithms, and
//! consistency of converged spectral solutions.

use shell_spectra_core::collocation::{
    collocate_simple, collocate_subspace, solve_at_points, PointSolutions, SparseGrid,
};
use shell_spectra_core::eigsolve::{smallest_eigs, EigenPair};
use shell_spectra_core::multiindex::{MultiIndex, MultiIndexSet};
use shell_spectra_core::polychaos::{lambda_value, pc_mean_var, MomentMatrices};
use shell_spectra_core::randomfield::{FieldExpansion, ShapeFamily};
use shell_spectra_core::shellfem::{
    assemble, AffinePencil, Ansatz, BoundaryCondition, ModeSpec, ShellGeometry, ShellModel,
    ShellProblem,
};
use shell_spectra_core::spectral::{
    inverse_iteration, subspace_iteration, KhatOperator, SpectralVector,
};

/// Small deterministic generator for test samples.
struct TestRng(u64);

impl TestRng {
    fn next_symmetric(&mut self) -> f64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        let u = (x.wrapping_mul(0x2545_f491_4f6c_dd1d) >> 11) as f64 / (1u64 << 53) as f64;
        2.0 * u - 1.0
    }
}

fn shell_problem(terms: usize, p: usize, n_elem: usize, k: u32, t: f64) -> ShellProblem {
    ShellProblem {
        geometry: ShellGeometry::Cylinder,
        model: ShellModel::Naghdi,
        thickness: t,
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

fn degree_set(dim: usize, degree: u32) -> MultiIndexSet {
    // All indices of total degree <= `degree` over the first `dim`
    // dimensions (monotone by construction).
    fn extend(
        out: &mut Vec<MultiIndex>,
        pairs: &mut Vec<(usize, u32)>,
        next_dim: usize,
        dim: usize,
        left: u32,
    ) {
        if next_dim > dim {
            out.push(MultiIndex::from_pairs(pairs));
            return;
        }
        for e in 0..=left {
            if e > 0 {
                pairs.push((next_dim, e));
            }
            extend(out, pairs, next_dim + 1, dim, left - e);
            if e > 0 {
                pairs.pop();
            }
        }
    }
    let mut members = Vec::new();
    extend(&mut members, &mut Vec::new(), 1, dim, degree);
    MultiIndexSet::from_members(members)
}

fn k_terms(pencil: &AffinePencil) -> Vec<shell_spectra_core::linalg::SymMatrix> {
    (0..=pencil.field_terms())
        .map(|m| pencil.k_term(m).clone())
        .collect()
}

#[test]
fn collocation_and_galerkin_statistics_agree() {
    // Axial field in two active dimensions; both strategies approximate the
    // same smallest eigenvalue surrogate and must agree to within the
    // truncation error scale.
    let problem = shell_problem(2, 3, 8, 6, 0.01);
    let pencil = assemble(&problem).unwrap();
    let set = degree_set(2, 3);
    let moments = MomentMatrices::build(&set);

    // Galerkin.
    let terms = k_terms(&pencil);
    let op = KhatOperator::new(&terms, pencil.mass(), &moments).unwrap();
    let det = smallest_eigs(pencil.k_term(0), pencil.mass(), 1, 1e-10).unwrap();
    let y0 = SpectralVector::from_deterministic(set.len(), &det[0].vector);
    let (lambda, _y, report) = inverse_iteration(&op, &y0, 1e-10, 200, 1e-12).unwrap();
    assert!(report.converged);
    let (g_mean, g_var) = lambda.mean_var();

    // Collocation on the same index set.
    let grid = SparseGrid::build(&set);
    let sols = solve_at_points(&pencil, &grid, 1, 1e-10).unwrap();
    let surrogate = collocate_simple(&pencil, &sols, &det[0].vector).unwrap();
    let (c_mean, c_var) = grid.statistics(&surrogate.lambdas).unwrap();

    // Overkill reference on a much richer set: the two strategies must agree
    // to within the distance of either from it.
    let ovk_set = degree_set(3, 5);
    let ovk_grid = SparseGrid::build(&ovk_set);
    let ovk_sols = solve_at_points(&pencil, &ovk_grid, 1, 1e-10).unwrap();
    let ovk = collocate_simple(&pencil, &ovk_sols, &det[0].vector).unwrap();
    let (o_mean, o_var) = ovk_grid.statistics(&ovk.lambdas).unwrap();

    let rel_mean = (g_mean - c_mean).abs() / c_mean.abs();
    assert!(rel_mean < 1e-5, "means differ: {g_mean} vs {c_mean}");
    let err_c = (c_var - o_var).abs();
    let err_g = (g_var - o_var).abs();
    assert!(
        (g_var - c_var).abs() <= (err_c + err_g) * 1.5 + 1e-14,
        "variance gap {} vs overkill distances {err_c} / {err_g}",
        (g_var - c_var).abs()
    );
    // Both truncation errors are small against the variance itself.
    assert!(err_c < 0.2 * o_var && err_g < 0.2 * o_var);
}

#[test]
fn zero_variance_collocation_is_constant() {
    let problem = shell_problem(0, 3, 8, 5, 0.02);
    let pencil = assemble(&problem).unwrap();
    let set = degree_set(1, 1);
    let grid = SparseGrid::build(&set);
    let sols = solve_at_points(&pencil, &grid, 1, 1e-10).unwrap();
    let det = smallest_eigs(pencil.k_term(0), pencil.mass(), 1, 1e-10).unwrap();
    let surrogate = collocate_simple(&pencil, &sols, &det[0].vector).unwrap();
    let (mean, var) = grid.statistics(&surrogate.lambdas).unwrap();
    assert!((mean - det[0].value).abs() < 1e-12 * det[0].value);
    assert!(var.abs() < 1e-15);
    // The interpolated vector at an arbitrary point equals the deterministic
    // eigenvector.
    let v = surrogate.vector_at(&grid, &[0.37]);
    for (a, b) in v.iter().zip(&det[0].vector) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn sign_alignment_absorbs_arbitrary_flips() {
    let problem = shell_problem(2, 3, 8, 6, 0.01);
    let pencil = assemble(&problem).unwrap();
    let set = degree_set(2, 2);
    let grid = SparseGrid::build(&set);
    let sols = solve_at_points(&pencil, &grid, 1, 1e-10).unwrap();
    let reference = smallest_eigs(pencil.k_term(0), pencil.mass(), 1, 1e-10).unwrap()[0]
        .vector
        .clone();
    let base = collocate_simple(&pencil, &sols, &reference).unwrap();

    // Flip every per-point eigenvector; the aligned output is unchanged.
    let flipped: Vec<Vec<EigenPair>> = (0..grid.len())
        .map(|i| {
            sols.pairs_at(i)
                .iter()
                .map(|p| EigenPair {
                    value: p.value,
                    vector: p.vector.iter().map(|v| -v).collect(),
                })
                .collect()
        })
        .collect();
    let flipped = PointSolutions::from_pairs(flipped);
    let aligned = collocate_simple(&pencil, &flipped, &reference).unwrap();
    for (a, b) in base.vectors.iter().zip(&aligned.vectors) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-14);
        }
    }
}

#[test]
fn subspace_projection_is_rotation_invariant() {
    let problem = shell_problem(2, 3, 8, 6, 0.01);
    let pencil = assemble(&problem).unwrap();
    let set = degree_set(2, 2);
    let grid = SparseGrid::build(&set);
    let s = 2;
    let sols = solve_at_points(&pencil, &grid, s, 1e-10).unwrap();
    let det = smallest_eigs(pencil.k_term(0), pencil.mass(), s, 1e-10).unwrap();
    let refs: Vec<Vec<f64>> = det.iter().map(|p| p.vector.clone()).collect();
    let base = collocate_subspace(&pencil, &sols, &refs).unwrap();

    // Apply a fixed rotation (angle varies per point) to the raw pairs.
    let mut rng = TestRng(0xfeed);
    let rotated: Vec<Vec<EigenPair>> = (0..grid.len())
        .map(|i| {
            let pairs = sols.pairs_at(i);
            let phi = 1.3 * rng.next_symmetric();
            let (c, sn) = (phi.cos(), phi.sin());
            let n = pairs[0].vector.len();
            let mut v0 = vec![0.0; n];
            let mut v1 = vec![0.0; n];
            for j in 0..n {
                v0[j] = c * pairs[0].vector[j] + sn * pairs[1].vector[j];
                v1[j] = -sn * pairs[0].vector[j] + c * pairs[1].vector[j];
            }
            vec![
                EigenPair {
                    value: pairs[0].value,
                    vector: v0,
                },
                EigenPair {
                    value: pairs[1].value,
                    vector: v1,
                },
            ]
        })
        .collect();
    let rotated = PointSolutions::from_pairs(rotated);
    let rotated_out = collocate_subspace(&pencil, &rotated, &refs).unwrap();

    for (pa, pb) in base.basis.iter().zip(&rotated_out.basis) {
        for (va, vb) in pa.iter().zip(pb) {
            for (x, y) in va.iter().zip(vb) {
                assert!((x - y).abs() < 1e-10, "{x} vs {y}");
            }
        }
    }
}

#[test]
fn projection_at_anchor_point_returns_reference() {
    // At the anchoring parameter point the projection matrix is the identity
    // and the projected basis equals the reference basis.
    let problem = shell_problem(2, 3, 8, 6, 0.01);
    let pencil = assemble(&problem).unwrap();
    let set = degree_set(1, 1);
    let grid = SparseGrid::build(&set);
    let s = 2;
    let sols = solve_at_points(&pencil, &grid, s, 1e-10).unwrap();
    let refs: Vec<Vec<f64>> = smallest_eigs(pencil.k_term(0), pencil.mass(), s, 1e-10)
        .unwrap()
        .into_iter()
        .map(|p| p.vector)
        .collect();
    let out = collocate_subspace(&pencil, &sols, &refs).unwrap();
    let zero_id = grid
        .points()
        .iter()
        .position(|p| p.iter().all(|&c| c == 0.0))
        .expect("grid contains the origin");
    for (i, r) in refs.iter().enumerate() {
        for (x, y) in out.basis[zero_id][i].iter().zip(r) {
            assert!((x - y).abs() < 1e-8);
        }
    }
}

#[test]
fn spectral_residual_decreases_under_refinement() {
    let problem = shell_problem(2, 3, 8, 6, 0.01);
    let pencil = assemble(&problem).unwrap();
    let terms = k_terms(&pencil);
    let det = smallest_eigs(pencil.k_term(0), pencil.mass(), 1, 1e-10).unwrap();

    let mut mean_residuals = Vec::new();
    for degree in [1u32, 2, 3] {
        let set = degree_set(2, degree);
        let moments = MomentMatrices::build(&set);
        let op = KhatOperator::new(&terms, pencil.mass(), &moments).unwrap();
        let y0 = SpectralVector::from_deterministic(set.len(), &det[0].vector);
        let (lambda, y, _report) = inverse_iteration(&op, &y0, 1e-11, 300, 1e-12).unwrap();

        let mut rng = TestRng(42);
        let mut acc = 0.0;
        for _ in 0..20 {
            let xi: Vec<f64> = (0..2).map(|_| rng.next_symmetric()).collect();
            let yv = y.evaluate(&moments, &xi);
            let lv = lambda.evaluate(&moments, &xi);
            let k = pencil.stiffness_at(&xi);
            let ky = k.apply(&yv);
            let my = pencil.mass().apply(&yv);
            let r: f64 = ky
                .iter()
                .zip(&my)
                .map(|(a, b)| (a - lv * b) * (a - lv * b))
                .sum::<f64>()
                .sqrt();
            acc += r;
        }
        mean_residuals.push(acc / 20.0);
    }
    assert!(
        mean_residuals[1] < mean_residuals[0] && mean_residuals[2] < mean_residuals[1],
        "residuals not decreasing: {mean_residuals:?}"
    );
}

#[test]
fn subspace_iteration_is_initial_basis_invariant() {
    let problem = shell_problem(2, 3, 8, 6, 0.01);
    let pencil = assemble(&problem).unwrap();
    let terms = k_terms(&pencil);
    let set = degree_set(2, 2);
    let moments = MomentMatrices::build(&set);
    let op = KhatOperator::new(&terms, pencil.mass(), &moments).unwrap();
    let det = smallest_eigs(pencil.k_term(0), pencil.mass(), 2, 1e-10).unwrap();
    let refs: Vec<Vec<f64>> = det.iter().map(|p| p.vector.clone()).collect();

    let y0: Vec<SpectralVector> = refs
        .iter()
        .map(|r| SpectralVector::from_deterministic(set.len(), r))
        .collect();
    let (basis_a, report_a) = subspace_iteration(&op, &refs, &y0, 1e-9, 300, 1e-12).unwrap();
    assert!(report_a.converged);

    // Second start: a rotated block spanning the same deterministic subspace.
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mixed: Vec<Vec<f64>> = vec![
        refs[0]
            .iter()
            .zip(&refs[1])
            .map(|(a, b)| inv_sqrt2 * (a + b))
            .collect(),
        refs[0]
            .iter()
            .zip(&refs[1])
            .map(|(a, b)| inv_sqrt2 * (a - b))
            .collect(),
    ];
    let y0b: Vec<SpectralVector> = mixed
        .iter()
        .map(|r| SpectralVector::from_deterministic(set.len(), r))
        .collect();
    let (basis_b, report_b) = subspace_iteration(&op, &refs, &y0b, 1e-9, 300, 1e-12).unwrap();
    assert!(report_b.converged);

    for (a, b) in basis_a.iter().zip(&basis_b) {
        let mut diff: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (x, y) in a.data().iter().zip(b.data()) {
            diff += (x - y) * (x - y);
            scale += x * x;
        }
        assert!(
            diff.sqrt() <= 1e-8 * scale.sqrt().max(1.0),
            "projected bases differ by {}",
            diff.sqrt()
        );
    }
}

#[test]
fn eigenvalues_scale_linearly_with_material() {
    let base = shell_problem(0, 3, 8, 5, 0.02);
    let mut scaled = base.clone();
    scaled.field = FieldExpansion::new(2.0, ShapeFamily::Axial, 0).unwrap();
    let p0 = assemble(&base).unwrap();
    let p1 = assemble(&scaled).unwrap();
    let e0 = smallest_eigs(p0.k_term(0), p0.mass(), 3, 1e-11).unwrap();
    let e1 = smallest_eigs(p1.k_term(0), p1.mass(), 3, 1e-11).unwrap();
    for (a, b) in e0.iter().zip(&e1) {
        assert!((2.0 * a.value - b.value).abs() < 1e-9 * b.value);
        // Same eigenvectors up to sign (fixed by the solver convention).
        let ip = p0.m_inner(&a.vector, &b.vector).abs();
        let na = p0.m_norm(&a.vector);
        let nb = p0.m_norm(&b.vector);
        assert!((ip / (na * nb) - 1.0).abs() < 1e-8);
    }
}

#[test]
fn monte_carlo_confirms_chaos_statistics() {
    // A random chaos vector's sampled mean/variance agree with the
    // closed-form values within three standard errors.
    let set = degree_set(3, 2);
    let mut rng = TestRng(7);
    let coeffs: Vec<f64> = (0..set.len()).map(|_| rng.next_symmetric()).collect();
    let (mean, var) = pc_mean_var(&coeffs);

    let samples = 100_000;
    let mut acc = 0.0;
    let mut acc2 = 0.0;
    for _ in 0..samples {
        let xi: Vec<f64> = (0..3).map(|_| rng.next_symmetric()).collect();
        let v: f64 = set
            .members()
            .iter()
            .zip(&coeffs)
            .map(|(a, c)| c * lambda_value(a, &xi))
            .sum();
        acc += v;
        acc2 += v * v;
    }
    let mc_mean = acc / samples as f64;
    let mc_second = acc2 / samples as f64;
    let mc_var = mc_second - mc_mean * mc_mean;
    // Standard errors of the sampled moments.
    let se_mean = (var / samples as f64).sqrt();
    assert!(
        (mc_mean - mean).abs() < 3.0 * se_mean,
        "mean {mc_mean} vs {mean} (se {se_mean})"
    );
    // Conservative standard error estimate for the variance.
    let se_var = mc_var * (2.0 / samples as f64).sqrt() * 3.0;
    assert!(
        (mc_var - var).abs() < 3.0 * se_var.max(1e-3),
        "variance {mc_var} vs {var}"
    );
}
