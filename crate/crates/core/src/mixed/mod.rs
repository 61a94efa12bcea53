//! Hermann-Miyoshi mixed method on rectangles: the Hessian (shifted by
//! `tau I u`) is a separate P_k tensor unknown next to the P_k scalar `u`.

mod checkpoint;
mod infsup;
mod solve;
mod system;

use std::sync::{Arc, OnceLock};

use crate::error::{invalid, Result};
use crate::fem::{make_quadrature, Cell, FeSpace, FieldFunction, Jet2, Space2D};
use crate::mesh::{boundary_trace_quadrature, Mesh2D, Point};
use crate::sparse::SparseMatrix;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};
pub use infsup::{infsup_probe, InfSupProbe};
pub use solve::{
    continuation_path, continuation_solve, initial_guess, newton_solve, newton_solve_with_data,
    ContinuationSchedule, MixedSolveOptions,
};
pub use system::{assemble_residual_jacobian, BoundaryData, MixedSystem};

/// Block indices of the unknown vector `[s11 | s12 | s22 | u]`.
pub const S11: usize = 0;
pub const S12: usize = 1;
pub const S22: usize = 2;
pub const U: usize = 3;

/// P_k spaces for the three tensor components and `u`, with the boundary
/// constraint sets.
#[derive(Debug, Clone)]
pub struct MixedSpace {
    pub mesh: Arc<Mesh2D>,
    pub scalar: Arc<Space2D>,
    pub k: usize,
    /// Scalar dofs on the boundary (constrained for `u`).
    pub u_fixed: Vec<usize>,
    /// Scalar dofs on vertical edges (constrained for `s11`).
    pub s11_fixed: Vec<usize>,
    /// Scalar dofs on horizontal edges (constrained for `s22`).
    pub s22_fixed: Vec<usize>,
    pattern: OnceLock<SparseMatrix>,
}

impl MixedSpace {
    pub fn new(mesh: Arc<Mesh2D>, k: usize) -> Result<Self> {
        if !(1..=3).contains(&k) {
            return invalid(format!("mixed degree must be 1, 2 or 3, got {k}"));
        }
        let exactness = (3 * k + 2).min(crate::fem::quadrature::MAX_EXACTNESS);
        let scalar = Arc::new(Space2D::new(mesh.clone(), k, exactness)?);
        let dm = &scalar.dofmap;
        let pick = |f: &dyn Fn(usize) -> bool| (0..dm.n_dofs).filter(|&i| f(i)).collect::<Vec<_>>();
        let u_fixed = pick(&|i| dm.boundary[i].any());
        let s11_fixed = pick(&|i| dm.boundary[i].vertical());
        let s22_fixed = pick(&|i| dm.boundary[i].horizontal());
        Ok(MixedSpace {
            mesh,
            scalar,
            k,
            u_fixed,
            s11_fixed,
            s22_fixed,
            pattern: OnceLock::new(),
        })
    }

    /// Number of scalar dofs per component.
    pub fn n(&self) -> usize {
        self.scalar.n_dofs()
    }

    pub fn n_total(&self) -> usize {
        4 * self.n()
    }

    pub fn index(&self, block: usize, i: usize) -> usize {
        block * self.n() + i
    }

    pub fn points(&self) -> &[Point] {
        &self.scalar.dofmap.points
    }

    /// Sparsity pattern of the Jacobian, built on first use.
    pub fn pattern(&self) -> &SparseMatrix {
        self.pattern.get_or_init(|| system::jacobian_pattern(self))
    }

    /// Every constrained global index.
    pub fn constrained(&self) -> Vec<usize> {
        let mut c: Vec<usize> = self.u_fixed.iter().map(|&i| self.index(U, i)).collect();
        c.extend(self.s11_fixed.iter().map(|&i| self.index(S11, i)));
        c.extend(self.s22_fixed.iter().map(|&i| self.index(S22, i)));
        c.sort_unstable();
        c
    }
}

/// Coefficients of `(s11, s12, s22, u)` with the parameters they were
/// computed for. The tensor unknown is `sigma + tau I u`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedState {
    pub x: Vec<f64>,
    pub eps: f64,
    pub tau: f64,
}

impl MixedState {
    pub fn zeros(space: &MixedSpace, eps: f64, tau: f64) -> Self {
        MixedState {
            x: vec![0.0; space.n_total()],
            eps,
            tau,
        }
    }

    pub fn block<'a>(&'a self, space: &MixedSpace, b: usize) -> &'a [f64] {
        let n = space.n();
        &self.x[b * n..(b + 1) * n]
    }

    pub fn u_field(&self, space: &MixedSpace) -> FieldFunction {
        FieldFunction {
            space: space.scalar.clone(),
            coeffs: self.block(space, U).to_vec(),
        }
    }

    /// `sigma = D^2 u` approximation with the shift removed, one field per
    /// component `(11, 12, 22)`.
    pub fn sigma_fields(&self, space: &MixedSpace) -> [FieldFunction; 3] {
        let u = self.block(space, U);
        [S11, S12, S22].map(|b| {
            let s = self.block(space, b);
            let coeffs = if b == S12 {
                s.to_vec()
            } else {
                s.iter().zip(u).map(|(s, u)| s - self.tau * u).collect()
            };
            FieldFunction {
                space: space.scalar.clone(),
                coeffs,
            }
        })
    }
}

/// Errors of a mixed solution against an exact solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedErrors {
    pub l2: f64,
    pub h1: f64,
    /// Broken H2 of `u`; `None` for k = 1.
    pub h2: Option<f64>,
    pub linf: f64,
    /// `|| sigma - D^2 u ||_{L^2}`.
    pub sigma_l2: f64,
}

pub fn mixed_errors(
    space: &MixedSpace,
    state: &MixedState,
    exact: &dyn Fn(Point) -> Jet2,
) -> Result<MixedErrors> {
    use crate::fem::{error_norm, Norm};
    let quad = make_quadrature(
        Cell::Triangle,
        (2 * space.k + 4).min(crate::fem::quadrature::MAX_EXACTNESS),
    )?;
    let u = state.u_field(space);
    let l2 = error_norm(&u, exact, Norm::L2, &quad)?;
    let h1 = error_norm(&u, exact, Norm::H1, &quad)?;
    let h2 = if space.k >= 2 {
        Some(error_norm(&u, exact, Norm::H2, &quad)?)
    } else {
        None
    };
    let linf = error_norm(&u, exact, Norm::LinfQuad, &quad)?;
    let sig = state.sigma_fields(space);
    let comps = [(0, 0), (0, 1), (1, 1)];
    let mut s2 = 0.0;
    for (c, &(a, b)) in comps.iter().enumerate() {
        let w = if a == b { 1.0 } else { 2.0 };
        let e = error_norm(
            &sig[c],
            &|p| Jet2 {
                value: exact(p).hess[a][b],
                ..Default::default()
            },
            Norm::L2,
            &quad,
        )?;
        s2 += w * e * e;
    }
    Ok(MixedErrors {
        l2,
        h1,
        h2,
        linf,
        sigma_l2: s2.sqrt(),
    })
}

/// Boundary quadrature with scalar basis values, used for the data term
/// `<kappa nu . t, dg/dt>`.
pub(crate) fn boundary_basis(
    space: &MixedSpace,
) -> Result<Vec<(crate::mesh::BoundaryQuadPoint, Vec<usize>, Vec<f64>)>> {
    let order = space.k + 2;
    let pts = boundary_trace_quadrature(&space.mesh, order)?;
    let mut out = Vec::with_capacity(pts.len());
    for bp in pts {
        let tri = space.mesh.boundary_edges[bp.edge].triangle;
        let xi = reference_point(&space.mesh, tri, bp.point);
        let ev = space.scalar.eval_on_element(tri, xi)?;
        out.push((bp, space.scalar.dofmap.element(tri).to_vec(), ev.values));
    }
    Ok(out)
}

fn reference_point(mesh: &Mesh2D, tri: usize, p: Point) -> Point {
    let [a, b, c] = mesh.triangles[tri].map(|v| mesh.vertices[v]);
    let j = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let d = [p[0] - a[0], p[1] - a[1]];
    [
        (j[1][1] * d[0] - j[0][1] * d[1]) / det,
        (-j[1][0] * d[0] + j[0][0] * d[1]) / det,
    ]
}
