//! Hierarchic (integrated-Legendre) shape functions on the reference
//! interval, and the quadrature policy for the energy integrals.

use crate::polychaos::{gauss_nodes, legendre_raw, QuadratureRule};

/// Values and derivatives of the `p + 1` local shape functions at `s` in
/// `[-1, 1]`, ordered `[vertex-, vertex+, bubble_2, .., bubble_p]`.
///
/// The bubbles are scaled integrated Legendre polynomials
/// `(L_j - L_{j-2}) / sqrt(2 (2j - 1))`; they vanish at both endpoints and
/// extending `p` leaves lower-order functions unchanged.
pub fn shape_functions(p: usize, s: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(p >= 1, "order must be at least 1");
    let mut values = Vec::with_capacity(p + 1);
    let mut derivs = Vec::with_capacity(p + 1);
    values.push(0.5 * (1.0 - s));
    derivs.push(-0.5);
    values.push(0.5 * (1.0 + s));
    derivs.push(0.5);
    if p >= 2 {
        // Legendre values up to degree p by recurrence.
        let mut l = Vec::with_capacity(p + 1);
        l.push(1.0);
        l.push(s);
        for k in 1..p {
            let kf = k as f64;
            l.push(((2.0 * kf + 1.0) * s * l[k] - kf * l[k - 1]) / (kf + 1.0));
        }
        for j in 2..=p {
            let c = (2.0 * (2.0 * j as f64 - 1.0)).sqrt().recip();
            values.push(c * (l[j] - l[j - 2]));
            // (L_j - L_{j-2})' = (2j - 1) L_{j-1}.
            derivs.push(c * (2.0 * j as f64 - 1.0) * l[j - 1]);
        }
    }
    (values, derivs)
}

/// Quadrature used for the energy integrals at order `p`: a Gauss rule with
/// `p + 4` points per direction. The extra points over the `p + 1` needed for
/// polynomial data absorb the non-polynomial sine coefficients of the
/// material field.
pub fn energy_quadrature(p: usize) -> QuadratureRule {
    gauss_nodes(p + 3)
}

/// Gauss rule with an explicit point count (quadrature refinement studies).
pub fn quadrature_with_points(n_points: usize) -> QuadratureRule {
    assert!(n_points >= 1);
    gauss_nodes(n_points - 1)
}

/// Per-direction point count for assembling with oscillatory material
/// coefficients: the `p + 4` baseline plus half the largest per-element phase
/// span of any coefficient, so the sine terms are integrated to round-off.
pub fn assembly_points(p: usize, max_phase_span: f64) -> usize {
    let extra = if max_phase_span > 0.0 {
        (0.5 * max_phase_span).ceil() as usize + 2
    } else {
        0
    };
    p + 4 + extra
}

#[allow(dead_code)]
fn legendre_check(n: usize, x: f64) -> f64 {
    legendre_raw(n, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_functions_interpolate_endpoints() {
        for p in 1..=8 {
            let (v_lo, _) = shape_functions(p, -1.0);
            let (v_hi, _) = shape_functions(p, 1.0);
            assert!((v_lo[0] - 1.0).abs() < 1e-14);
            assert!(v_lo[1].abs() < 1e-14);
            assert!((v_hi[1] - 1.0).abs() < 1e-14);
            assert!(v_hi[0].abs() < 1e-14);
            for j in 2..v_lo.len() {
                assert!(v_lo[j].abs() < 1e-13, "bubble {j} nonzero at -1");
                assert!(v_hi[j].abs() < 1e-13, "bubble {j} nonzero at +1");
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = 7;
        let h = 1e-6;
        for &s in &[-0.83, -0.2, 0.41, 0.9] {
            let (_, d) = shape_functions(p, s);
            let (vp, _) = shape_functions(p, s + h);
            let (vm, _) = shape_functions(p, s - h);
            for j in 0..=p {
                let fd = (vp[j] - vm[j]) / (2.0 * h);
                assert!((d[j] - fd).abs() < 1e-7, "function {j} at {s}");
            }
        }
    }

    #[test]
    fn bubble_gradients_are_orthogonal() {
        // The scaling makes the bubble derivatives orthonormal in L2 with the
        // standard (non-probability) measure.
        let rule = energy_quadrature(8);
        for j in 2..=6usize {
            for k in 2..=6usize {
                let mut acc = 0.0;
                for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
                    let (_, d) = shape_functions(6, x);
                    acc += 2.0 * w * d[j] * d[k];
                }
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!((acc - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quadrature_policy_point_counts() {
        assert_eq!(energy_quadrature(6).len(), 10);
        assert_eq!(quadrature_with_points(14).len(), 14);
    }
}
