//! Small least-squares helpers for exponent and rate fits.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Ordinary least squares `y ≈ slope x + intercept`.
pub fn linear(x: &[f64], y: &[f64]) -> LineFit {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    let slope = sxy / sxx;
    LineFit { slope, intercept: my - slope * mx }
}

/// Least squares `y ≈ a f(x) + b g(x)` via the 2×2 normal equations.
pub fn two_basis(x: &[f64], y: &[f64], f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64) -> (f64, f64) {
    let (mut ff, mut fg, mut gg, mut fy, mut gy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let (a, b) = (f(xi), g(xi));
        ff += a * a;
        fg += a * b;
        gg += b * b;
        fy += a * yi;
        gy += b * yi;
    }
    let det = ff * gg - fg * fg;
    ((fy * gg - gy * fg) / det, (gy * ff - fy * fg) / det)
}

/// Observed convergence order from errors at spacings h and h/2.
pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 2.0).collect();
        let f = linear(&x, &y);
        assert!((f.slope - 3.0).abs() < 1e-12 && (f.intercept + 2.0).abs() < 1e-12);
    }

    #[test]
    fn recovers_two_basis_coefficients() {
        let x: Vec<f64> = (0..50).map(|i| 10.0 + i as f64 * 0.2).collect();
        let y: Vec<f64> = x.iter().map(|&r| (0.7 + 1.3 * r) * (-r / 2.0).exp()).collect();
        let (a, b) = two_basis(&x, &y, |r| (-r / 2.0).exp(), |r| r * (-r / 2.0).exp());
        assert!((a - 0.7).abs() < 1e-8 && (b - 1.3).abs() < 1e-8);
    }
}
