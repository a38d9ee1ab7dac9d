//! Central finite-difference gradients.

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stencil {
    /// `(f(x+h) − f(x−h)) / 2h`, error `O(h²)`.
    #[default]
    Central2,
    /// Five-point stencil, error `O(h⁴)`.
    Central4,
}

/// `1e−6 · (1 + ‖pt‖_∞)`.
pub fn default_step(pt: &[f64]) -> f64 {
    1e-6 * (1.0 + pt.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

pub fn gradient<F: Fn(&[f64]) -> f64>(f: F, pt: &[f64], h: f64) -> Vec<f64> {
    try_gradient(|y| Ok(f(y)), pt, h, Stencil::Central2).expect("infallible")
}

/// Gradient of a fallible function; the first evaluation error is returned.
pub fn try_gradient<F>(f: F, pt: &[f64], h: f64, stencil: Stencil) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut y = pt.to_vec();
    let mut at = |i: usize, offset: f64| -> Result<f64> {
        y[i] = pt[i] + offset;
        let value = f(&y);
        y[i] = pt[i];
        value
    };
    (0..pt.len())
        .map(|i| match stencil {
            Stencil::Central2 => Ok((at(i, h)? - at(i, -h)?) / (2.0 * h)),
            Stencil::Central4 => {
                let (p1, m1) = (at(i, h)?, at(i, -h)?);
                let (p2, m2) = (at(i, 2.0 * h)?, at(i, -2.0 * h)?);
                Ok((8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_and_quadratic() {
        let g = gradient(|y| 3.0 * y[0] - 2.0 * y[1] + 0.5, &[0.3, -7.0], 1e-3);
        assert!((g[0] - 3.0).abs() < 1e-12 && (g[1] + 2.0).abs() < 1e-12);
        let pt = [1.0, 2.0];
        let g = gradient(|y| y.iter().map(|v| v * v).sum(), &pt, default_step(&pt));
        assert!((g[0] - 2.0).abs() < 1e-9 && (g[1] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn second_order_error_quarters_under_halving() {
        let f = |y: &[f64]| y[0].sin() * y[1].exp();
        let pt = [0.7f64, 0.2];
        let exact = pt[0].cos() * pt[1].exp();
        let reference = |h: f64| try_gradient(|y| Ok(f(y)), &pt, h, Stencil::Central4).unwrap()[0];
        let e1 = (gradient(f, &pt, 1e-2)[0] - reference(1e-3)).abs();
        let e2 = (gradient(f, &pt, 5e-3)[0] - reference(1e-3)).abs();
        assert!((e1 / e2 - 4.0).abs() < 0.05, "{}", e1 / e2);
        assert!((reference(1e-3) - exact).abs() < 1e-11);
    }
}
