//! Reference-element shape functions.
//!
//! Lagrange functions are evaluated as products of affine factors in the
//! barycentric coordinates, carried through a second-order jet so values,
//! gradients and Hessians come out of one pass.

use std::ops::Mul;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    LagrangeTri(usize),
    LagrangeInterval(usize),
    HermiteCubicInterval,
}

/// Shape function data at one reference point. For interval bases only the
/// first gradient/Hessian component is meaningful.
#[derive(Debug, Clone)]
pub struct BasisEval {
    pub values: Vec<f64>,
    pub grads: Vec<[f64; 2]>,
    pub hessians: Vec<[[f64; 2]; 2]>,
}

impl Basis {
    pub fn degree(self) -> usize {
        match self {
            Basis::LagrangeTri(k) | Basis::LagrangeInterval(k) => k,
            Basis::HermiteCubicInterval => 3,
        }
    }

    pub fn dof_count(self) -> usize {
        match self {
            Basis::LagrangeTri(k) => (k + 1) * (k + 2) / 2,
            Basis::LagrangeInterval(k) => k + 1,
            Basis::HermiteCubicInterval => 4,
        }
    }

    pub fn validate(self) -> Result<Self> {
        match self {
            Basis::LagrangeTri(k) | Basis::LagrangeInterval(k) if !(1..=3).contains(&k) => {
                invalid(format!("Lagrange degree {k} not in 1..=3"))
            }
            _ => Ok(self),
        }
    }
}

/// Barycentric multi-indices of the P_k nodes on the reference triangle.
/// The node sits at `(a[1]/k, a[2]/k)`.
pub fn triangle_node_indices(k: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity((k + 1) * (k + 2) / 2);
    for a2 in 0..=k {
        for a1 in 0..=(k - a2) {
            out.push([k - a1 - a2, a1, a2]);
        }
    }
    out
}

pub fn triangle_nodes(k: usize) -> Vec<[f64; 2]> {
    triangle_node_indices(k)
        .into_iter()
        .map(|a| [a[1] as f64 / k as f64, a[2] as f64 / k as f64])
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Jet {
    v: f64,
    g: [f64; 2],
    h: [[f64; 2]; 2],
}

impl Jet {
    fn constant(v: f64) -> Self {
        Jet {
            v,
            g: [0.0; 2],
            h: [[0.0; 2]; 2],
        }
    }

    fn affine(v: f64, g: [f64; 2]) -> Self {
        Jet {
            v,
            g,
            h: [[0.0; 2]; 2],
        }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut h = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                h[i][j] = self.h[i][j] * o.v
                    + o.h[i][j] * self.v
                    + self.g[i] * o.g[j]
                    + self.g[j] * o.g[i];
            }
        }
        Jet {
            v: self.v * o.v,
            g: [
                self.g[0] * o.v + o.g[0] * self.v,
                self.g[1] * o.v + o.g[1] * self.v,
            ],
            h,
        }
    }
}

fn lagrange_tri(k: usize, x: f64, y: f64) -> BasisEval {
    let kf = k as f64;
    let lambdas = [
        Jet::affine(1.0 - x - y, [-1.0, -1.0]),
        Jet::affine(x, [1.0, 0.0]),
        Jet::affine(y, [0.0, 1.0]),
    ];
    let idx = triangle_node_indices(k);
    let mut ev = BasisEval {
        values: Vec::with_capacity(idx.len()),
        grads: Vec::with_capacity(idx.len()),
        hessians: Vec::with_capacity(idx.len()),
    };
    for a in idx {
        let mut phi = Jet::constant(1.0);
        for (lam, &ai) in lambdas.iter().zip(&a) {
            for j in 0..ai {
                let f = Jet::affine(
                    (kf * lam.v - j as f64) / (j + 1) as f64,
                    [
                        kf * lam.g[0] / (j + 1) as f64,
                        kf * lam.g[1] / (j + 1) as f64,
                    ],
                );
                phi = phi * f;
            }
        }
        ev.values.push(phi.v);
        ev.grads.push(phi.g);
        ev.hessians.push(phi.h);
    }
    ev
}

fn lagrange_interval(k: usize, t: f64) -> BasisEval {
    let nodes: Vec<f64> = (0..=k).map(|j| j as f64 / k as f64).collect();
    let mut ev = BasisEval {
        values: Vec::with_capacity(k + 1),
        grads: Vec::with_capacity(k + 1),
        hessians: Vec::with_capacity(k + 1),
    };
    for i in 0..=k {
        let mut phi = Jet::constant(1.0);
        for j in 0..=k {
            if j != i {
                let d = nodes[i] - nodes[j];
                phi = phi * Jet::affine((t - nodes[j]) / d, [1.0 / d, 0.0]);
            }
        }
        ev.values.push(phi.v);
        ev.grads.push([phi.g[0], 0.0]);
        ev.hessians.push([[phi.h[0][0], 0.0], [0.0, 0.0]]);
    }
    ev
}

/// Hermite cubic on `[0,1]` with dofs (value left, slope left, value right,
/// slope right); slopes are with respect to the reference coordinate.
pub fn hermite_cubic(t: f64) -> BasisEval {
    let t2 = t * t;
    let t3 = t2 * t;
    let values = vec![
        1.0 - 3.0 * t2 + 2.0 * t3,
        t - 2.0 * t2 + t3,
        3.0 * t2 - 2.0 * t3,
        -t2 + t3,
    ];
    let d1 = [
        -6.0 * t + 6.0 * t2,
        1.0 - 4.0 * t + 3.0 * t2,
        6.0 * t - 6.0 * t2,
        -2.0 * t + 3.0 * t2,
    ];
    let d2 = [
        -6.0 + 12.0 * t,
        -4.0 + 6.0 * t,
        6.0 - 12.0 * t,
        -2.0 + 6.0 * t,
    ];
    BasisEval {
        values,
        grads: d1.iter().map(|&d| [d, 0.0]).collect(),
        hessians: d2.iter().map(|&d| [[d, 0.0], [0.0, 0.0]]).collect(),
    }
}

const REF_TOL: f64 = 1e-12;

pub fn eval_basis(basis: Basis, p: [f64; 2]) -> Result<BasisEval> {
    basis.validate()?;
    match basis {
        Basis::LagrangeTri(k) => {
            if p[0] < -REF_TOL || p[1] < -REF_TOL || p[0] + p[1] > 1.0 + REF_TOL {
                return invalid(format!("point {p:?} outside the reference triangle"));
            }
            Ok(lagrange_tri(k, p[0], p[1]))
        }
        Basis::LagrangeInterval(k) => {
            if p[0] < -REF_TOL || p[0] > 1.0 + REF_TOL {
                return invalid(format!("point {} outside [0,1]", p[0]));
            }
            Ok(lagrange_interval(k, p[0]))
        }
        Basis::HermiteCubicInterval => {
            if p[0] < -REF_TOL || p[0] > 1.0 + REF_TOL {
                return invalid(format!("point {} outside [0,1]", p[0]));
            }
            Ok(hermite_cubic(p[0]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p1_nodal_values() {
        let ev = eval_basis(Basis::LagrangeTri(1), [0.0, 0.0]).unwrap();
        assert_eq!(ev.values, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn lagrange_nodal_identity() {
        for k in 1..=3 {
            let nodes = triangle_nodes(k);
            for (i, &p) in nodes.iter().enumerate() {
                let ev = eval_basis(Basis::LagrangeTri(k), p).unwrap();
                for (j, &v) in ev.values.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((v - want).abs() < 1e-13, "k={k} node {i} fn {j}");
                }
            }
            for i in 0..=k {
                let t = i as f64 / k as f64;
                let ev = eval_basis(Basis::LagrangeInterval(k), [t, 0.0]).unwrap();
                for (j, &v) in ev.values.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((v - want).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn partition_of_unity() {
        for k in 1..=3 {
            for &p in &[[0.1, 0.2], [0.7, 0.05], [1.0 / 3.0, 1.0 / 3.0], [0.0, 1.0]] {
                let ev = eval_basis(Basis::LagrangeTri(k), p).unwrap();
                let s: f64 = ev.values.iter().sum();
                let gx: f64 = ev.grads.iter().map(|g| g[0]).sum();
                let gy: f64 = ev.grads.iter().map(|g| g[1]).sum();
                let hs: f64 = ev
                    .hessians
                    .iter()
                    .map(|h| h[0][0] + h[0][1] + h[1][1])
                    .sum();
                assert!((s - 1.0).abs() < 1e-13);
                assert!(gx.abs() < 1e-13 && gy.abs() < 1e-13 && hs.abs() < 1e-12);
            }
            let ev = eval_basis(Basis::LagrangeInterval(k), [0.37, 0.0]).unwrap();
            assert!((ev.values.iter().sum::<f64>() - 1.0).abs() < 1e-13);
            assert!(ev.grads.iter().map(|g| g[0]).sum::<f64>().abs() < 1e-13);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let d = 1e-5;
        for k in 1..=3 {
            let p = [0.23, 0.31];
            let ev = eval_basis(Basis::LagrangeTri(k), p).unwrap();
            let px = eval_basis(Basis::LagrangeTri(k), [p[0] + d, p[1]]).unwrap();
            let mx = eval_basis(Basis::LagrangeTri(k), [p[0] - d, p[1]]).unwrap();
            let py = eval_basis(Basis::LagrangeTri(k), [p[0], p[1] + d]).unwrap();
            let my = eval_basis(Basis::LagrangeTri(k), [p[0], p[1] - d]).unwrap();
            for i in 0..ev.values.len() {
                let gx = (px.values[i] - mx.values[i]) / (2.0 * d);
                let gy = (py.values[i] - my.values[i]) / (2.0 * d);
                assert!((gx - ev.grads[i][0]).abs() < 1e-8);
                assert!((gy - ev.grads[i][1]).abs() < 1e-8);
                let hxy = (py.grads[i][0] - my.grads[i][0]) / (2.0 * d);
                let hxx = (px.grads[i][0] - mx.grads[i][0]) / (2.0 * d);
                assert!((hxy - ev.hessians[i][0][1]).abs() < 1e-7);
                assert!((hxx - ev.hessians[i][0][0]).abs() < 1e-7);
                assert_eq!(ev.hessians[i][0][1], ev.hessians[i][1][0]);
            }
        }
    }

    #[test]
    fn hermite_interpolation_conditions() {
        let ev = eval_basis(Basis::HermiteCubicInterval, [0.0, 0.0]).unwrap();
        assert_eq!(ev.values, vec![1.0, 0.0, 0.0, 0.0]);
        let slopes: Vec<f64> = ev.grads.iter().map(|g| g[0]).collect();
        assert_eq!(slopes, vec![0.0, 1.0, 0.0, 0.0]);
        let ev = eval_basis(Basis::HermiteCubicInterval, [1.0, 0.0]).unwrap();
        assert_eq!(ev.values, vec![0.0, 0.0, 1.0, 0.0]);
        let slopes: Vec<f64> = ev.grads.iter().map(|g| g[0]).collect();
        assert_eq!(slopes, vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn hermite_reproduces_cubics() {
        // p(t) = 2 - t + 3t^2 - 5t^3
        let p = |t: f64| 2.0 - t + 3.0 * t * t - 5.0 * t * t * t;
        let dp = |t: f64| -1.0 + 6.0 * t - 15.0 * t * t;
        let coef = [p(0.0), dp(0.0), p(1.0), dp(1.0)];
        for i in 0..=10 {
            let t = i as f64 / 10.0;
            let ev = hermite_cubic(t);
            let v: f64 = ev.values.iter().zip(&coef).map(|(a, b)| a * b).sum();
            let d: f64 = ev.grads.iter().zip(&coef).map(|(a, b)| a[0] * b).sum();
            assert!((v - p(t)).abs() < 1e-12 && (d - dp(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_outside_points_and_degrees() {
        assert!(eval_basis(Basis::LagrangeTri(2), [0.8, 0.8]).is_err());
        assert!(eval_basis(Basis::LagrangeInterval(1), [1.5, 0.0]).is_err());
        assert!(eval_basis(Basis::LagrangeTri(4), [0.1, 0.1]).is_err());
    }
}
