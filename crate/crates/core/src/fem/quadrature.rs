//! Tensor-product Gauss–Legendre rules on the reference cell `[-1,1]^2`.

use crate::error::{Error, Result};

/// A quadrature rule on `[-1,1]^2`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    /// Highest per-axis polynomial degree integrated exactly.
    pub exactness: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integrates `f` over the reference cell.
    pub fn integrate(&self, f: impl Fn([f64; 2]) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1,1]`.
///
/// Roots of `P_n` are found by Newton iteration from the Chebyshev-like
/// initial guess; converges to machine precision in a handful of steps for
/// the small orders used here.
pub fn gauss_legendre_1d(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor-product Gauss rule with `n_per_axis` points per direction.
pub fn gauss_rule(n_per_axis: usize) -> Result<QuadratureRule> {
    if !(1..=6).contains(&n_per_axis) {
        return Err(Error::UnsupportedQuadrature(n_per_axis));
    }
    let (x, w) = gauss_legendre_1d(n_per_axis);
    let mut points = Vec::with_capacity(n_per_axis * n_per_axis);
    let mut weights = Vec::with_capacity(n_per_axis * n_per_axis);
    for j in 0..n_per_axis {
        for i in 0..n_per_axis {
            points.push([x[i], x[j]]);
            weights.push(w[i] * w[j]);
        }
    }
    Ok(QuadratureRule {
        points,
        weights,
        exactness: 2 * n_per_axis - 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monomial_integral(p: usize) -> f64 {
        if p % 2 == 1 {
            0.0
        } else {
            2.0 / (p as f64 + 1.0)
        }
    }

    #[test]
    fn three_point_rule() {
        let q = gauss_rule(3).unwrap();
        assert_eq!(q.len(), 9);
        assert!((q.weights.iter().sum::<f64>() - 4.0).abs() < 1e-14);
        assert!(q.integrate(|p| p[0].powi(5) * p[1].powi(5)).abs() < 1e-15);
        // ∫∫ x^4 dx dy = (2/5) * 2
        assert!((q.integrate(|p| p[0].powi(4)) - 0.8).abs() < 1e-14);
    }

    #[test]
    fn exact_on_monomials_up_to_degree() {
        for n in 1..=6 {
            let q = gauss_rule(n).unwrap();
            assert_eq!(q.exactness, 2 * n - 1);
            for a in 0..=q.exactness {
                for b in 0..=q.exactness {
                    let got = q.integrate(|p| p[0].powi(a as i32) * p[1].powi(b as i32));
                    let want = monomial_integral(a) * monomial_integral(b);
                    assert!((got - want).abs() < 1e-13, "n={n} a={a} b={b}");
                }
            }
            // Degree 2n is not integrated exactly.
            let d = 2 * n;
            let got = q.integrate(|p| p[0].powi(d as i32));
            assert!((got - 2.0 * monomial_integral(d)).abs() > 1e-6);
        }
    }

    #[test]
    fn rejects_unsupported_orders() {
        assert!(gauss_rule(0).is_err());
        assert!(gauss_rule(7).is_err());
    }

    #[test]
    fn known_two_point_nodes() {
        let (x, w) = gauss_legendre_1d(2);
        assert!((x[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-15);
    }
}
