//! Gauss rules on the unit interval and the reference triangle.

use crate::error::{Result, VmmError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Interval,
    Triangle,
}

/// Quadrature rule on a reference cell: `[0,1]` or the triangle with
/// vertices (0,0), (1,0), (0,1).
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub cell: Cell,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl Quadrature {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

pub const MAX_EXACTNESS: usize = 12;

/// Gauss-Legendre nodes and weights on `[0,1]` with `n` points, found by
/// Newton iteration on the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        // map [-1,1] -> [0,1]
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[n - 1 - i] = 0.5 * wi;
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}

pub fn make_quadrature(cell: Cell, exactness: usize) -> Result<Quadrature> {
    if exactness == 0 || exactness > MAX_EXACTNESS {
        return Err(VmmError::NotImplemented(format!(
            "quadrature exactness {exactness} outside [1, {MAX_EXACTNESS}]"
        )));
    }
    match cell {
        Cell::Interval => {
            let n = (exactness + 2) / 2;
            let (x, w) = gauss_legendre(n);
            Ok(Quadrature {
                cell,
                points: x.into_iter().map(|t| [t, 0.0]).collect(),
                weights: w,
                exactness: 2 * n - 1,
            })
        }
        Cell::Triangle => {
            // collapsed tensor rule: x = s, y = t (1 - s), dA = (1 - s) ds dt;
            // the jacobian raises the degree in s by one.
            let n = (exactness + 3) / 2;
            let (x, w) = gauss_legendre(n);
            let mut points = Vec::with_capacity(n * n);
            let mut weights = Vec::with_capacity(n * n);
            for (&s, &ws) in x.iter().zip(&w) {
                for (&t, &wt) in x.iter().zip(&w) {
                    points.push([s, t * (1.0 - s)]);
                    weights.push(ws * wt * (1.0 - s));
                }
            }
            Ok(Quadrature {
                cell,
                points,
                weights,
                exactness: 2 * n - 2,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn interval_rules_integrate_monomials() {
        let q = make_quadrature(Cell::Interval, 3).unwrap();
        assert_eq!(q.len(), 2);
        let v: f64 = q
            .points
            .iter()
            .zip(&q.weights)
            .map(|(p, w)| w * p[0].powi(3))
            .sum();
        assert!((v - 0.25).abs() < 1e-16);
        for deg in 1..=MAX_EXACTNESS {
            let q = make_quadrature(Cell::Interval, deg).unwrap();
            for p in 0..=deg as i32 {
                let v: f64 = q
                    .points
                    .iter()
                    .zip(&q.weights)
                    .map(|(x, w)| w * x[0].powi(p))
                    .sum();
                assert!((v - 1.0 / (p + 1) as f64).abs() < 1e-14, "deg {deg} p {p}");
            }
        }
    }

    #[test]
    fn triangle_rules_integrate_monomials() {
        let q = make_quadrature(Cell::Triangle, 2).unwrap();
        let v: f64 = q
            .points
            .iter()
            .zip(&q.weights)
            .map(|(p, w)| w * p[0] * p[1])
            .sum();
        assert!((v - 1.0 / 24.0).abs() < 1e-15);
        for deg in 1..=MAX_EXACTNESS {
            let q = make_quadrature(Cell::Triangle, deg).unwrap();
            assert!(q.exactness >= deg);
            assert!(q.weights.iter().all(|&w| w > 0.0));
            let sum: f64 = q.weights.iter().sum();
            assert!((sum - 0.5).abs() < 1e-15);
            for a in 0..=deg as u32 {
                for b in 0..=(deg as u32 - a) {
                    // int x^a y^b over the unit triangle = a! b! / (a+b+2)!
                    let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                    let v: f64 = q
                        .points
                        .iter()
                        .zip(&q.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    assert!((v - exact).abs() < 1e-15, "deg {deg} ({a},{b})");
                }
            }
        }
    }

    #[test]
    fn unsupported_exactness() {
        assert!(matches!(
            make_quadrature(Cell::Triangle, 13),
            Err(VmmError::NotImplemented(_))
        ));
        assert!(make_quadrature(Cell::Interval, 0).is_err());
    }
}
