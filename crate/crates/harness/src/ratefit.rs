//! Least-squares rate fits on designated tails of convergence tables,
//! matching the way dashed guide lines are read off log-log or log-linear
//! plots.

/// Result of a straight-line fit in transformed coordinates.
#[derive(Debug, Clone)]
pub struct RateFit {
    /// Transformed abscissae actually used (the tail).
    pub xs: Vec<f64>,
    /// Transformed ordinates actually used.
    pub ys: Vec<f64>,
    /// Fitted slope.
    pub slope: f64,
    /// Fitted intercept.
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
}

fn line_fit(xs: &[f64], ys: &[f64]) -> RateFit {
    assert!(xs.len() == ys.len() && xs.len() >= 2, "need at least two points");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let d = y - (intercept + slope * x);
            d * d
        })
        .sum::<f64>()
        / n)
        .sqrt();
    RateFit {
        xs: xs.to_vec(),
        ys: ys.to_vec(),
        slope,
        intercept,
        residual,
    }
}

/// Keep the last `tail` points (at least 2); `tail = 0` keeps everything.
fn tail_of(values: &[(f64, f64)], tail: usize) -> Vec<(f64, f64)> {
    let keep = if tail == 0 {
        values.len()
    } else {
        tail.clamp(2, values.len())
    };
    values[values.len() - keep..].to_vec()
}

/// Fit `log y = a + slope * log x` on the tail of `(x, y)` data with positive
/// entries; the exponent of an algebraic rate `y ~ x^slope`.
pub fn loglog_fit(values: &[(f64, f64)], tail: usize) -> RateFit {
    let pts: Vec<(f64, f64)> = tail_of(values, tail)
        .into_iter()
        .filter(|&(x, y)| x > 0.0 && y > 0.0)
        .collect();
    let xs: Vec<f64> = pts.iter().map(|&(x, _)| x.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|&(_, y)| y.ln()).collect();
    line_fit(&xs, &ys)
}

/// Fit `log y = a - x * log(base)` on the tail of `(x, y)` data; returns the
/// fit with the geometric `base` of the decay `y ~ base^-x` in `slope`'s
/// place recoverable as `exp(-slope)`.
pub fn loglinear_fit(values: &[(f64, f64)], tail: usize) -> RateFit {
    let pts: Vec<(f64, f64)> = tail_of(values, tail)
        .into_iter()
        .filter(|&(_, y)| y > 0.0)
        .collect();
    let xs: Vec<f64> = pts.iter().map(|&(x, _)| x).collect();
    let ys: Vec<f64> = pts.iter().map(|&(_, y)| y.ln()).collect();
    line_fit(&xs, &ys)
}

/// Geometric decay base of a log-linear fit.
pub fn decay_base(fit: &RateFit) -> f64 {
    (-fit.slope).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_algebraic_rate() {
        let data: Vec<(f64, f64)> = (1..=8)
            .map(|i| {
                let x = (10 * i) as f64;
                (x, 3.0 * x.powf(-1.9))
            })
            .collect();
        let fit = loglog_fit(&data, 4);
        assert!((fit.slope + 1.9).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
        assert_eq!(fit.xs.len(), 4);
    }

    #[test]
    fn recovers_geometric_base() {
        let data: Vec<(f64, f64)> = (2..=8).map(|p| (p as f64, 5.0 * 2f64.powi(-p))).collect();
        let fit = loglinear_fit(&data, 0);
        assert!((decay_base(&fit) - 2.0).abs() < 1e-12);
    }
}
