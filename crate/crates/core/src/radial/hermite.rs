//! Hermite cubic discretization of the radial fourth order problem
//! `eps (Delta_r u, Delta_r v) + (f - u_rr (u_r/r)^{n-1}, v) = eps phi R^{n-1} v_r(R)`
//! in the measure `r^{n-1} dr`, with `u(R) = g(R)` and `u_r(0) = 0`.

use std::sync::Arc;

use crate::error::{Result, VmmError};
use crate::fem::space::ElementValues;
use crate::fem::{FeSpace, FieldFunction, Space1D};
use crate::mesh::Mesh1D;
use crate::newton::{newton, NewtonOptions, NewtonReport, NonlinearSystem};
use crate::radial::{convexity_report, PanelIntegral, RadialField, RadialProblem, RadialState};
use crate::sparse::{norm2, SparseMatrix};

#[derive(Debug, Clone)]
pub struct HermiteOptions {
    pub tol: f64,
    pub max_newton: usize,
    /// Boundary value of `Delta_r u`; `eps` when unset.
    pub second_trace: Option<f64>,
    /// Continuation starts at `max(|eps|, eps_start)` and halves.
    pub eps_start: f64,
    /// Start from this field at the target `eps` instead of continuing.
    pub warm_start: Option<FieldFunction>,
}

impl Default for HermiteOptions {
    fn default() -> Self {
        HermiteOptions {
            tol: 1e-10,
            max_newton: 30,
            second_trace: None,
            eps_start: 0.1,
            warm_start: None,
        }
    }
}

const EXACTNESS: usize = 12;

struct HSystem {
    n: usize,
    eps: f64,
    r_max: f64,
    g_r: f64,
    phi_b: f64,
    n_dofs: usize,
    evs: Vec<ElementValues>,
    /// `f r^{n-1}` at quadrature points.
    src: Vec<f64>,
    scale: f64,
}

impl HSystem {
    fn new(problem: &RadialProblem, space: &Space1D, eps: f64, phi_b: f64) -> Self {
        let evs: Vec<ElementValues> = (0..space.n_elements())
            .map(|e| {
                let mut ev = ElementValues::default();
                space.element_values(e, &mut ev);
                ev
            })
            .collect();
        let src: Vec<f64> = evs
            .iter()
            .flat_map(|ev| {
                ev.points
                    .iter()
                    .map(|p| problem.weight(p[0]) * (problem.f)(p[0]))
                    .collect::<Vec<_>>()
            })
            .collect();
        let mut sys = HSystem {
            n: problem.n,
            eps,
            r_max: problem.r_max,
            g_r: problem.g_r,
            phi_b,
            n_dofs: space.n_dofs(),
            evs,
            src,
            scale: 0.0,
        };
        let mut load = vec![0.0; sys.n_dofs];
        for ev in &sys.evs {
            for q in 0..ev.nq {
                for i in 0..ev.n {
                    load[ev.dofs[i]] +=
                        ev.weights[q] * sys.src[ev.element * ev.nq + q] * ev.phi[q * ev.n + i];
                }
            }
        }
        load[sys.n_dofs - 1] += sys.boundary_flux();
        load.push(sys.g_r);
        sys.scale = norm2(&load);
        sys
    }

    fn boundary_flux(&self) -> f64 {
        self.eps * self.phi_b * self.r_max.powi(self.n as i32 - 1)
    }

    /// Constrained dofs: slope at the origin and value at `R`.
    fn fixed(&self) -> [(usize, f64); 2] {
        [(1, 0.0), (self.n_dofs - 2, self.g_r)]
    }

    fn eval(&self, x: &[f64], want_jac: bool) -> Result<(Vec<f64>, Option<SparseMatrix>)> {
        let nm1 = (self.n - 1) as f64;
        let pw = self.n as i32 - 1;
        let mut res = vec![0.0; self.n_dofs];
        let mut trip = Vec::new();
        let mut loc = Vec::new();
        for ev in &self.evs {
            let n = ev.n;
            loc.clear();
            loc.extend(ev.dofs.iter().map(|&d| x[d]));
            let mut kloc = vec![0.0; n * n];
            for q in 0..ev.nq {
                let w = ev.weights[q];
                let r = ev.points[q][0];
                let (_, g, h) = ev.field(q, &loc);
                let (ur, urr) = (g[0], h[0][0]);
                let lap = urr + nm1 * ur / r;
                let rw = r.powi(pw);
                let det_w = urr * ur.powi(pw);
                let f = self.src[ev.element * ev.nq + q];
                for i in 0..n {
                    let pi = ev.phi[q * n + i];
                    let lap_i = ev.hess[q * n + i][0][0] + nm1 * ev.grad[q * n + i][0] / r;
                    res[ev.dofs[i]] += w * (self.eps * lap * lap_i * rw + (f - det_w) * pi);
                    if want_jac {
                        for j in 0..n {
                            let dj = ev.grad[q * n + j][0];
                            let hj = ev.hess[q * n + j][0][0];
                            let lap_j = hj + nm1 * dj / r;
                            let ddet = hj * ur.powi(pw) + nm1 * urr * ur.powi(pw - 1) * dj;
                            kloc[i * n + j] += w * (self.eps * lap_j * lap_i * rw - ddet * pi);
                        }
                    }
                }
            }
            if want_jac {
                for i in 0..n {
                    for j in 0..n {
                        trip.push((ev.dofs[i], ev.dofs[j], kloc[i * n + j]));
                    }
                }
            }
        }
        res[self.n_dofs - 1] -= self.boundary_flux();
        for (d, v) in self.fixed() {
            res[d] = x[d] - v;
        }
        let jac = if want_jac {
            let mut a = SparseMatrix::from_triplets(self.n_dofs, self.n_dofs, &trip)?;
            for (d, _) in self.fixed() {
                a.set_identity_row(d)?;
            }
            Some(a)
        } else {
            None
        };
        Ok((res, jac))
    }
}

impl NonlinearSystem for HSystem {
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.eval(x, false)?.0)
    }

    fn residual_jacobian(&self, x: &[f64]) -> Result<(Vec<f64>, SparseMatrix)> {
        let (r, j) = self.eval(x, true)?;
        Ok((r, j.expect("jacobian requested")))
    }

    fn residual_scale(&self) -> f64 {
        self.scale
    }
}

/// Poisson guess `Delta_r u = n sign(eps) f^{1/n}`, `u(R) = g(R)`.
fn initial_guess(problem: &RadialProblem, space: Arc<Space1D>) -> FieldFunction {
    let n = problem.n;
    let nf = n as f64;
    let s = problem.eps.signum();
    let nodes = space.mesh.nodes.clone();
    let rhs = |t: f64| problem.weight(t) * nf * s * (problem.f)(t).max(0.0).powf(1.0 / nf);
    let a = PanelIntegral::new(nodes.clone(), rhs);
    let ur = |r: f64| {
        if r > 0.0 {
            a.eval(r, rhs) / problem.weight(r)
        } else {
            0.0
        }
    };
    let b = PanelIntegral::new(nodes, ur);
    let total = b.total();
    FieldFunction::interpolate(
        space,
        |p| problem.g_r - (total - b.eval(p[0], ur)),
        |p| ur(p[0]),
    )
}

fn continuation_path(eps: f64, start: f64) -> Vec<f64> {
    let s = eps.signum();
    let target = eps.abs();
    let mut e = target.max(start);
    let mut path = vec![s * e];
    while e > target {
        e = (0.5 * e).max(target);
        path.push(s * e);
    }
    path
}

/// Newton with eps-continuation on the Hermite cubic space.
pub fn solve_radial_hermite(
    problem: &RadialProblem,
    mesh: Arc<Mesh1D>,
    opts: &HermiteOptions,
) -> Result<RadialState> {
    let space = Arc::new(Space1D::hermite(mesh.clone(), EXACTNESS)?);
    let (mut x, path) = match &opts.warm_start {
        Some(u0) => {
            if u0.coeffs.len() != space.n_dofs() {
                return Err(VmmError::InvalidArgument(
                    "warm start does not match the mesh".into(),
                ));
            }
            (u0.coeffs.clone(), vec![problem.eps])
        }
        None => (
            initial_guess(problem, space.clone()).coeffs,
            continuation_path(problem.eps, opts.eps_start),
        ),
    };
    let nopts = NewtonOptions {
        tol: opts.tol,
        max_iter: opts.max_newton,
        ..Default::default()
    };
    let mut report = NewtonReport::default();
    for &e in &path {
        let sys = HSystem::new(problem, &space, e, opts.second_trace.unwrap_or(e));
        let (xn, mut rep) = newton(&sys, x, &nopts).map_err(|err| VmmError::Continuation {
            eps: e,
            source: Box::new(err),
        })?;
        rep.eps_path.push(e);
        report.extend(rep);
        x = xn;
    }
    let u = RadialField::hermite(
        problem.n,
        problem.r_max,
        problem.g_r,
        FieldFunction::new(space, x)?,
    );
    let diagnostics = convexity_report(&u, &mesh, problem.n);
    Ok(RadialState {
        problem: problem.clone(),
        mesh,
        u,
        diagnostics,
        picard_history: Vec::new(),
        report,
    })
}

pub fn solve_radial_fourth_order(
    problem: &RadialProblem,
    mesh: Arc<Mesh1D>,
    tol: f64,
) -> Result<RadialState> {
    solve_radial_hermite(
        problem,
        mesh,
        &HermiteOptions {
            tol,
            ..Default::default()
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_halves_down_to_target() {
        assert_eq!(
            continuation_path(0.01, 0.1),
            vec![0.1, 0.05, 0.025, 0.0125, 0.01]
        );
        assert_eq!(continuation_path(-0.3, 0.1), vec![-0.3]);
        assert_eq!(continuation_path(-0.05, 0.1), vec![-0.1, -0.05]);
    }
}
