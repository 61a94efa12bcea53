//! Finite element spaces: a mesh, a dof map and a quadrature rule, with
//! reference tabulations pushed forward to physical elements.

use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::fem::basis::{eval_basis, Basis, BasisEval};
use crate::fem::dofmap::{DofKind, DofMap};
use crate::fem::quadrature::{make_quadrature, Cell, Quadrature};
use crate::mesh::{Mesh1D, Mesh2D, Point};

/// Physical shape-function data of one element at its quadrature points.
/// Arrays are indexed `q * n + i`.
#[derive(Debug, Clone, Default)]
pub struct ElementValues {
    pub element: usize,
    pub n: usize,
    pub nq: usize,
    pub dofs: Vec<usize>,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub phi: Vec<f64>,
    pub grad: Vec<[f64; 2]>,
    pub hess: Vec<[[f64; 2]; 2]>,
}

impl ElementValues {
    /// Value, gradient and Hessian at quadrature point `q` of the local
    /// field with element coefficients `c`.
    pub fn field(&self, q: usize, c: &[f64]) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        let mut v = 0.0;
        let mut g = [0.0; 2];
        let mut h = [[0.0; 2]; 2];
        let base = q * self.n;
        for (i, &ci) in c.iter().enumerate() {
            v += ci * self.phi[base + i];
            let gi = self.grad[base + i];
            g[0] += ci * gi[0];
            g[1] += ci * gi[1];
            let hi = self.hess[base + i];
            for a in 0..2 {
                for b in 0..2 {
                    h[a][b] += ci * hi[a][b];
                }
            }
        }
        (v, g, h)
    }

    pub fn gather(&self, global: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.dofs.iter().map(|&d| global[d]));
    }
}

pub trait FeSpace: Send + Sync {
    fn dofmap(&self) -> &DofMap;
    fn quadrature(&self) -> &Quadrature;
    fn n_elements(&self) -> usize {
        self.dofmap().n_elements()
    }
    fn n_dofs(&self) -> usize {
        self.dofmap().n_dofs
    }
    fn basis(&self) -> Basis {
        self.dofmap().basis
    }
    fn element_values(&self, e: usize, out: &mut ElementValues);
    /// Element containing `p` and the reference coordinates of `p` there.
    fn locate(&self, p: Point) -> Option<(usize, Point)>;
    /// Physical basis data on element `e` at reference point `xi`.
    fn eval_on_element(&self, e: usize, xi: Point) -> Result<BasisEval>;
    fn map_point(&self, e: usize, xi: Point) -> Point;
    /// Ratio of physical to reference element measure.
    fn measure_factor(&self, e: usize) -> f64;
}

#[derive(Debug, Clone)]
pub struct Space2D {
    pub mesh: Arc<Mesh2D>,
    pub dofmap: DofMap,
    pub quad: Quadrature,
    tab: Vec<BasisEval>,
}

impl Space2D {
    /// P_k space with a quadrature rule exact to degree `exactness`.
    pub fn new(mesh: Arc<Mesh2D>, k: usize, exactness: usize) -> Result<Self> {
        let dofmap = DofMap::lagrange_tri(&mesh, k)?;
        let quad = make_quadrature(Cell::Triangle, exactness)?;
        let tab = quad
            .points
            .iter()
            .map(|&p| eval_basis(dofmap.basis, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Space2D {
            mesh,
            dofmap,
            quad,
            tab,
        })
    }

    pub fn degree(&self) -> usize {
        self.dofmap.basis.degree()
    }

    /// Affine map data: origin, Jacobian columns and inverse transpose.
    fn affine(&self, e: usize) -> (Point, [[f64; 2]; 2], f64, [[f64; 2]; 2]) {
        let [a, b, c] = self.mesh.triangles[e].map(|v| self.mesh.vertices[v]);
        let j = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        // inverse transpose
        let kt = [
            [j[1][1] / det, -j[1][0] / det],
            [-j[0][1] / det, j[0][0] / det],
        ];
        (a, j, det, kt)
    }
}

fn push_grad(kt: &[[f64; 2]; 2], g: [f64; 2]) -> [f64; 2] {
    [
        kt[0][0] * g[0] + kt[0][1] * g[1],
        kt[1][0] * g[0] + kt[1][1] * g[1],
    ]
}

fn push_hess(kt: &[[f64; 2]; 2], h: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    // K^T H K with K^T = kt
    let mut t = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            t[a][b] = kt[a][0] * h[0][b] + kt[a][1] * h[1][b];
        }
    }
    let mut out = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            out[a][b] = t[a][0] * kt[b][0] + t[a][1] * kt[b][1];
        }
    }
    out
}

fn map_eval_2d(kt: &[[f64; 2]; 2], ev: &BasisEval) -> BasisEval {
    BasisEval {
        values: ev.values.clone(),
        grads: ev.grads.iter().map(|&g| push_grad(kt, g)).collect(),
        hessians: ev.hessians.iter().map(|h| push_hess(kt, h)).collect(),
    }
}

impl FeSpace for Space2D {
    fn dofmap(&self) -> &DofMap {
        &self.dofmap
    }

    fn quadrature(&self) -> &Quadrature {
        &self.quad
    }

    fn element_values(&self, e: usize, out: &mut ElementValues) {
        let n = self.dofmap.basis.dof_count();
        let nq = self.quad.len();
        let (a, j, det, kt) = self.affine(e);
        out.element = e;
        out.n = n;
        out.nq = nq;
        out.dofs.clear();
        out.dofs.extend_from_slice(self.dofmap.element(e));
        out.points.clear();
        out.weights.clear();
        out.phi.clear();
        out.grad.clear();
        out.hess.clear();
        for (q, xi) in self.quad.points.iter().enumerate() {
            out.points.push([
                a[0] + j[0][0] * xi[0] + j[0][1] * xi[1],
                a[1] + j[1][0] * xi[0] + j[1][1] * xi[1],
            ]);
            out.weights.push(self.quad.weights[q] * det.abs());
            let t = &self.tab[q];
            out.phi.extend_from_slice(&t.values);
            out.grad.extend(t.grads.iter().map(|&g| push_grad(&kt, g)));
            out.hess
                .extend(t.hessians.iter().map(|h| push_hess(&kt, h)));
        }
    }

    fn locate(&self, p: Point) -> Option<(usize, Point)> {
        self.mesh.locate(p)
    }

    fn eval_on_element(&self, e: usize, xi: Point) -> Result<BasisEval> {
        let ev = eval_basis(self.dofmap.basis, xi)?;
        let (_, _, _, kt) = self.affine(e);
        Ok(map_eval_2d(&kt, &ev))
    }

    fn map_point(&self, e: usize, xi: Point) -> Point {
        let (a, j, _, _) = self.affine(e);
        [
            a[0] + j[0][0] * xi[0] + j[0][1] * xi[1],
            a[1] + j[1][0] * xi[0] + j[1][1] * xi[1],
        ]
    }

    fn measure_factor(&self, e: usize) -> f64 {
        self.affine(e).2.abs()
    }
}

#[derive(Debug, Clone)]
pub struct Space1D {
    pub mesh: Arc<Mesh1D>,
    pub dofmap: DofMap,
    pub quad: Quadrature,
    tab: Vec<BasisEval>,
}

impl Space1D {
    pub fn lagrange(mesh: Arc<Mesh1D>, k: usize, exactness: usize) -> Result<Self> {
        let dofmap = DofMap::lagrange_interval(&mesh, k)?;
        Self::with_dofmap(mesh, dofmap, exactness)
    }

    pub fn hermite(mesh: Arc<Mesh1D>, exactness: usize) -> Result<Self> {
        let dofmap = DofMap::hermite(&mesh)?;
        Self::with_dofmap(mesh, dofmap, exactness)
    }

    fn with_dofmap(mesh: Arc<Mesh1D>, dofmap: DofMap, exactness: usize) -> Result<Self> {
        let quad = make_quadrature(Cell::Interval, exactness)?;
        let tab = quad
            .points
            .iter()
            .map(|&p| eval_basis(dofmap.basis, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Space1D {
            mesh,
            dofmap,
            quad,
            tab,
        })
    }

    fn scale(&self, e: usize, ev: &BasisEval) -> BasisEval {
        let (a, b) = self.mesh.element_bounds(e);
        let h = b - a;
        let dofs = self.dofmap.element(e);
        let mut out = ev.clone();
        for i in 0..ev.values.len() {
            let c = if self.dofmap.kinds[dofs[i]] == DofKind::Slope {
                h
            } else {
                1.0
            };
            out.values[i] = c * ev.values[i];
            out.grads[i] = [c * ev.grads[i][0] / h, 0.0];
            out.hessians[i] = [[c * ev.hessians[i][0][0] / (h * h), 0.0], [0.0, 0.0]];
        }
        out
    }
}

impl FeSpace for Space1D {
    fn dofmap(&self) -> &DofMap {
        &self.dofmap
    }

    fn quadrature(&self) -> &Quadrature {
        &self.quad
    }

    fn element_values(&self, e: usize, out: &mut ElementValues) {
        let n = self.dofmap.basis.dof_count();
        let (a, b) = self.mesh.element_bounds(e);
        let h = b - a;
        out.element = e;
        out.n = n;
        out.nq = self.quad.len();
        out.dofs.clear();
        out.dofs.extend_from_slice(self.dofmap.element(e));
        out.points.clear();
        out.weights.clear();
        out.phi.clear();
        out.grad.clear();
        out.hess.clear();
        for (q, xi) in self.quad.points.iter().enumerate() {
            out.points.push([a + h * xi[0], 0.0]);
            out.weights.push(self.quad.weights[q] * h);
            let t = self.scale(e, &self.tab[q]);
            out.phi.extend_from_slice(&t.values);
            out.grad.extend_from_slice(&t.grads);
            out.hess.extend_from_slice(&t.hessians);
        }
    }

    fn locate(&self, p: Point) -> Option<(usize, Point)> {
        let e = self.mesh.locate(p[0])?;
        let (a, b) = self.mesh.element_bounds(e);
        Some((e, [((p[0] - a) / (b - a)).clamp(0.0, 1.0), 0.0]))
    }

    fn eval_on_element(&self, e: usize, xi: Point) -> Result<BasisEval> {
        if e >= self.mesh.n_elements() {
            return invalid(format!("element {e} out of range"));
        }
        let ev = eval_basis(self.dofmap.basis, xi)?;
        Ok(self.scale(e, &ev))
    }

    fn map_point(&self, e: usize, xi: Point) -> Point {
        let (a, b) = self.mesh.element_bounds(e);
        [a + (b - a) * xi[0], 0.0]
    }

    fn measure_factor(&self, e: usize) -> f64 {
        let (a, b) = self.mesh.element_bounds(e);
        b - a
    }
}
