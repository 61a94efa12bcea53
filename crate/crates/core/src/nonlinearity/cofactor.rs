//! 2x2 symmetric matrix helpers, the cofactor map and the row-divergence
//! identity for Hessians of polynomials.

use crate::fem::quadrature::Quadrature;
use crate::mesh::{Mesh2D, Point};

pub type Sym2 = [[f64; 2]; 2];

pub fn det(m: &Sym2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn trace(m: &Sym2) -> f64 {
    m[0][0] + m[1][1]
}

/// Matrix of signed minors: for 2x2, `[[d, -c], [-b, a]]`.
pub fn cofactor(m: &Sym2) -> Sym2 {
    [[m[1][1], -m[1][0]], [-m[0][1], m[0][0]]]
}

pub fn matmul(a: &Sym2, b: &Sym2) -> Sym2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn transpose(a: &Sym2) -> Sym2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

/// Frobenius product `a : b`.
pub fn ddot(a: &Sym2, b: &Sym2) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

pub fn matvec(a: &Sym2, v: [f64; 2]) -> [f64; 2] {
    [
        a[0][0] * v[0] + a[0][1] * v[1],
        a[1][0] * v[0] + a[1][1] * v[1],
    ]
}

/// Bivariate polynomial as a list of `(coefficient, power of x1, power of x2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly2 {
    pub terms: Vec<(f64, u32, u32)>,
}

impl Poly2 {
    pub fn new(terms: Vec<(f64, u32, u32)>) -> Self {
        Poly2 { terms }
    }

    pub fn eval(&self, p: Point) -> f64 {
        self.terms
            .iter()
            .map(|&(c, a, b)| c * p[0].powi(a as i32) * p[1].powi(b as i32))
            .sum()
    }

    /// Partial derivative in direction `dir` (0 or 1).
    pub fn diff(&self, dir: usize) -> Poly2 {
        let terms = self
            .terms
            .iter()
            .filter_map(|&(c, a, b)| match dir {
                0 if a > 0 => Some((c * a as f64, a - 1, b)),
                1 if b > 0 => Some((c * b as f64, a, b - 1)),
                _ => None,
            })
            .collect();
        Poly2 { terms }
    }
}

/// Max over mesh quadrature points of the row divergences of `cof(D^2 v)`.
/// Each entry of the cofactor is differentiated as its own polynomial, so
/// the two mixed third derivatives in each row come from different paths.
pub fn cofactor_divergence_residual(v: &Poly2, mesh: &Mesh2D, quad: &Quadrature) -> f64 {
    let vxx = v.diff(0).diff(0);
    let vxy = v.diff(0).diff(1);
    let vyx = v.diff(1).diff(0);
    let vyy = v.diff(1).diff(1);
    // cof(D^2 v) = [[vyy, -vyx], [-vxy, vxx]]
    let row0 = [vyy.diff(0), vyx.diff(1)];
    let row1 = [vxy.diff(0), vxx.diff(1)];
    let mut worst = 0.0f64;
    for tri in &mesh.triangles {
        let [a, b, c] = tri.map(|i| mesh.vertices[i]);
        for xi in &quad.points {
            let p = [
                a[0] + xi[0] * (b[0] - a[0]) + xi[1] * (c[0] - a[0]),
                a[1] + xi[0] * (b[1] - a[1]) + xi[1] * (c[1] - a[1]),
            ];
            let d0 = row0[0].eval(p) - row0[1].eval(p);
            let d1 = -row1[0].eval(p) + row1[1].eval(p);
            worst = worst.max(d0.abs()).max(d1.abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::quadrature::{make_quadrature, Cell};
    use crate::mesh::build_rect_mesh;

    #[test]
    fn cofactor_examples() {
        let i = [[1.0, 0.0], [0.0, 1.0]];
        assert_eq!(cofactor(&i), i);
        let m = [[1.0, 2.0], [2.0, 5.0]];
        assert_eq!(cofactor(&m), [[5.0, -2.0], [-2.0, 1.0]]);
        let p = matmul(&m, &transpose(&cofactor(&m)));
        assert_eq!(p, [[det(&m), 0.0], [0.0, det(&m)]]);
        assert_eq!(
            cofactor(&[[3.0, 0.0], [0.0, 7.0]]),
            [[7.0, 0.0], [0.0, 3.0]]
        );
    }

    #[test]
    fn divergence_of_polynomial_hessian_cofactors() {
        let mesh = build_rect_mesh((-1.0, 1.0), (0.0, 2.0), 3, 3).unwrap();
        let q = make_quadrature(Cell::Triangle, 4).unwrap();
        let quad = Poly2::new(vec![(1.0, 2, 0), (-3.0, 1, 1), (0.5, 0, 2)]);
        assert_eq!(cofactor_divergence_residual(&quad, &mesh, &q), 0.0);
        let cubic = Poly2::new(vec![(1.0, 3, 0), (1.0, 0, 3)]);
        assert!(cofactor_divergence_residual(&cubic, &mesh, &q) <= 1e-12);
        let mixed = Poly2::new(vec![(1.0, 3, 2)]);
        assert!(cofactor_divergence_residual(&mixed, &mesh, &q) <= 1e-10);
    }
}
