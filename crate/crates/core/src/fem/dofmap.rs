use crate::error::{invalid, Result};
use crate::fem::basis::{triangle_node_indices, Basis};
use crate::mesh::{Mesh1D, Mesh2D, Point};

/// Where a degree of freedom sits relative to the domain boundary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BoundaryFlags {
    pub left: bool,
    pub right: bool,
    pub bottom: bool,
    pub top: bool,
}

impl BoundaryFlags {
    pub fn any(self) -> bool {
        self.left || self.right || self.bottom || self.top
    }

    /// On an edge with normal `±e1`.
    pub fn vertical(self) -> bool {
        self.left || self.right
    }

    /// On an edge with normal `±e2`.
    pub fn horizontal(self) -> bool {
        self.bottom || self.top
    }
}

/// What a dof represents: a point value, or a derivative (Hermite slopes).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofKind {
    Value,
    Slope,
}

#[derive(Debug, Clone)]
pub struct DofMap {
    pub basis: Basis,
    /// Flat element-to-global table with stride `basis.dof_count()`.
    pub element_dofs: Vec<usize>,
    pub n_dofs: usize,
    pub points: Vec<Point>,
    pub kinds: Vec<DofKind>,
    pub boundary: Vec<BoundaryFlags>,
}

impl DofMap {
    pub fn n_elements(&self) -> usize {
        self.element_dofs.len() / self.basis.dof_count()
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let s = self.basis.dof_count();
        &self.element_dofs[e * s..(e + 1) * s]
    }

    /// Continuous P_k numbering on a structured triangulation. Element nodes
    /// lie on the `(k*nx+1) x (k*ny+1)` lattice, which makes shared nodes
    /// coincide by construction.
    pub fn lagrange_tri(mesh: &Mesh2D, k: usize) -> Result<Self> {
        let basis = Basis::LagrangeTri(k).validate()?;
        let lx = k * mesh.nx + 1;
        let ly = k * mesh.ny + 1;
        let n_dofs = lx * ly;
        let idx = triangle_node_indices(k);
        let grid = |v: usize| (v % (mesh.nx + 1), v / (mesh.nx + 1));
        let mut element_dofs = Vec::with_capacity(mesh.triangles.len() * idx.len());
        for tri in &mesh.triangles {
            let g = tri.map(grid);
            for a in &idx {
                let i = a[0] * g[0].0 + a[1] * g[1].0 + a[2] * g[2].0;
                let j = a[0] * g[0].1 + a[1] * g[1].1 + a[2] * g[2].1;
                element_dofs.push(j * lx + i);
            }
        }
        let (x0, x1) = mesh.x_range;
        let (y0, y1) = mesh.y_range;
        let mut points = Vec::with_capacity(n_dofs);
        let mut boundary = Vec::with_capacity(n_dofs);
        for j in 0..ly {
            for i in 0..lx {
                let x = if i + 1 == lx {
                    x1
                } else {
                    x0 + (x1 - x0) * i as f64 / (lx - 1) as f64
                };
                let y = if j + 1 == ly {
                    y1
                } else {
                    y0 + (y1 - y0) * j as f64 / (ly - 1) as f64
                };
                points.push([x, y]);
                boundary.push(BoundaryFlags {
                    left: i == 0,
                    right: i + 1 == lx,
                    bottom: j == 0,
                    top: j + 1 == ly,
                });
            }
        }
        Ok(DofMap {
            basis,
            element_dofs,
            n_dofs,
            points,
            kinds: vec![DofKind::Value; n_dofs],
            boundary,
        })
    }

    pub fn lagrange_interval(mesh: &Mesh1D, k: usize) -> Result<Self> {
        let basis = Basis::LagrangeInterval(k).validate()?;
        let ne = mesh.n_elements();
        let n_dofs = k * ne + 1;
        let mut element_dofs = Vec::with_capacity(ne * (k + 1));
        let mut points = vec![[0.0, 0.0]; n_dofs];
        for e in 0..ne {
            let (a, b) = mesh.element_bounds(e);
            for l in 0..=k {
                let g = k * e + l;
                element_dofs.push(g);
                points[g] = [a + (b - a) * l as f64 / k as f64, 0.0];
            }
        }
        points[n_dofs - 1] = [mesh.r_max, 0.0];
        let mut boundary = vec![BoundaryFlags::default(); n_dofs];
        boundary[0].left = true;
        boundary[n_dofs - 1].right = true;
        Ok(DofMap {
            basis,
            element_dofs,
            n_dofs,
            points,
            kinds: vec![DofKind::Value; n_dofs],
            boundary,
        })
    }

    /// C^1 Hermite cubic numbering: node `i` carries dofs `2i` (value) and
    /// `2i+1` (derivative).
    pub fn hermite(mesh: &Mesh1D) -> Result<Self> {
        if mesh.n_elements() == 0 {
            return invalid("empty mesh");
        }
        let nn = mesh.nodes.len();
        let mut element_dofs = Vec::with_capacity(4 * mesh.n_elements());
        for &(a, b) in &mesh.elements {
            element_dofs.extend_from_slice(&[2 * a, 2 * a + 1, 2 * b, 2 * b + 1]);
        }
        let mut points = Vec::with_capacity(2 * nn);
        let mut kinds = Vec::with_capacity(2 * nn);
        let mut boundary = Vec::with_capacity(2 * nn);
        for (i, &r) in mesh.nodes.iter().enumerate() {
            for kind in [DofKind::Value, DofKind::Slope] {
                points.push([r, 0.0]);
                kinds.push(kind);
                boundary.push(BoundaryFlags {
                    left: i == 0,
                    right: i + 1 == nn,
                    ..Default::default()
                });
            }
        }
        Ok(DofMap {
            basis: Basis::HermiteCubicInterval,
            element_dofs,
            n_dofs: 2 * nn,
            points,
            kinds,
            boundary,
        })
    }

    pub fn boundary_dofs(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_dofs).filter(|&i| self.boundary[i].any())
    }
}
