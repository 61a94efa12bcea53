//! P2 discretization of
//! `-eps r^{n-1} (r^{1-n} w_r)_r + w^n / (n r^{n(n-1)}) = L_f`,
//! `w(0) = 0`, `w_r(R) = eps R^{n-1}`.

use std::sync::Arc;

use crate::error::{Result, VmmError};
use crate::fem::space::ElementValues;
use crate::fem::{assemble, FeSpace, FieldFunction, Space1D};
use crate::mesh::Mesh1D;
use crate::newton::{newton, NewtonOptions, NonlinearSystem};
use crate::radial::{
    convexity_report, FieldKind, PanelIntegral, RadialField, RadialProblem, RadialState,
};
use crate::sparse::{norm2, solve, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedOptions {
    pub tol: f64,
    pub max_picard: usize,
    pub max_newton: usize,
}

impl Default for ReducedOptions {
    fn default() -> Self {
        ReducedOptions {
            tol: 1e-10,
            max_picard: 200,
            max_newton: 30,
        }
    }
}

const EXACTNESS: usize = 9;

struct WSystem {
    space: Arc<Space1D>,
    n: usize,
    eps: f64,
    /// Element values, one per element.
    evs: Vec<ElementValues>,
    /// `L_f` at quadrature points, indexed `e * nq + q`.
    lf: Vec<f64>,
    load: Vec<f64>,
}

impl WSystem {
    fn new(problem: &RadialProblem, space: Arc<Space1D>) -> Self {
        let n = problem.n;
        let evs: Vec<ElementValues> = (0..space.n_elements())
            .map(|e| {
                let mut ev = ElementValues::default();
                space.element_values(e, &mut ev);
                ev
            })
            .collect();
        let src = |t: f64| t.powi(n as i32 - 1) * (problem.f)(t);
        let table = PanelIntegral::new(space.mesh.nodes.clone(), src);
        let lf: Vec<f64> = evs
            .iter()
            .flat_map(|ev| {
                ev.points
                    .iter()
                    .map(|p| table.eval(p[0], src))
                    .collect::<Vec<_>>()
            })
            .collect();
        let mut sys = WSystem {
            space,
            n,
            eps: problem.eps,
            evs,
            lf,
            load: Vec::new(),
        };
        sys.load = sys.load_vector(problem.r_max);
        sys
    }

    fn load_vector(&self, r_max: f64) -> Vec<f64> {
        let mut b = vec![0.0; self.space.n_dofs()];
        for ev in &self.evs {
            for q in 0..ev.nq {
                let s = ev.weights[q] * self.lf[ev.element * ev.nq + q];
                for i in 0..ev.n {
                    b[ev.dofs[i]] += s * ev.phi[q * ev.n + i];
                }
            }
        }
        let last = self.space.n_dofs() - 1;
        b[last] += self.eps * self.eps * r_max.powi(self.n as i32 - 1);
        b[0] = 0.0;
        b
    }

    fn radial_power(&self, r: f64) -> f64 {
        r.powi((self.n * (self.n - 1)) as i32)
    }

    /// Matrix of `eps (psi_r, chi_r) + eps (n-1) (psi_r / r, chi) + (c psi, chi)`
    /// with `c` given at quadrature points.
    fn linear_matrix(&self, c: &[f64]) -> Result<SparseMatrix> {
        let eps = self.eps;
        let nm1 = (self.n - 1) as f64;
        let mut a = assemble(self.space.as_ref(), self.space.as_ref(), |u, v| {
            let n = u.n;
            let mut k = vec![0.0; n * n];
            for q in 0..u.nq {
                let w = u.weights[q];
                let r = u.points[q][0];
                let cq = c[u.element * u.nq + q];
                for i in 0..n {
                    let vi = v.phi[q * n + i];
                    let di = v.grad[q * n + i][0];
                    for j in 0..n {
                        let uj = u.phi[q * n + j];
                        let dj = u.grad[q * n + j][0];
                        k[i * n + j] +=
                            w * (eps * dj * di + eps * nm1 * dj * vi / r + cq * uj * vi);
                    }
                }
            }
            k
        })?;
        a.set_identity_row(0)?;
        Ok(a)
    }

    fn field_at_quad(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.lf.len());
        for ev in &self.evs {
            for q in 0..ev.nq {
                let mut s = 0.0;
                for i in 0..ev.n {
                    s += x[ev.dofs[i]] * ev.phi[q * ev.n + i];
                }
                out.push(s);
            }
        }
        out
    }

    fn points(&self) -> impl Iterator<Item = f64> + '_ {
        self.evs
            .iter()
            .flat_map(|ev| ev.points.iter().map(|p| p[0]))
    }
}

impl NonlinearSystem for WSystem {
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.n as i32;
        // the nonlinear term is c(psi) psi with c = psi^{n-1} / (n r^{n(n-1)})
        let psi = self.field_at_quad(x);
        let c: Vec<f64> = psi
            .iter()
            .zip(self.points())
            .map(|(&p, r)| p.powi(n - 1) / (self.n as f64 * self.radial_power(r)))
            .collect();
        let a = self.linear_matrix(&c)?;
        let mut res = a.matvec(x);
        for (ri, bi) in res.iter_mut().zip(&self.load) {
            *ri -= bi;
        }
        Ok(res)
    }

    fn residual_jacobian(&self, x: &[f64]) -> Result<(Vec<f64>, SparseMatrix)> {
        let n = self.n as i32;
        let psi = self.field_at_quad(x);
        let c: Vec<f64> = psi
            .iter()
            .zip(self.points())
            .map(|(&p, r)| p.powi(n - 1) / self.radial_power(r))
            .collect();
        let jac = self.linear_matrix(&c)?;
        Ok((self.residual(x)?, jac))
    }

    fn residual_scale(&self) -> f64 {
        norm2(&self.load)
    }
}

/// Picard iteration from `(eps/n) r^n` followed by Newton polishing.
pub fn solve_reduced_w(
    problem: &RadialProblem,
    mesh: Arc<Mesh1D>,
    opts: &ReducedOptions,
) -> Result<RadialState> {
    if !(problem.eps > 0.0) {
        return Err(VmmError::InvalidArgument(format!(
            "the reduced solver needs eps > 0, got {}",
            problem.eps
        )));
    }
    let space = Arc::new(Space1D::lagrange(mesh.clone(), 2, EXACTNESS)?);
    let sys = WSystem::new(problem, space.clone());
    let n = problem.n;
    let nf = n as f64;
    let mut psi: Vec<f64> = space
        .dofmap
        .points
        .iter()
        .map(|p| problem.eps / nf * p[0].powi(n as i32))
        .collect();
    let mut history: Vec<f64> = Vec::new();
    let step_tol = opts.tol.sqrt();
    // relaxation weight, dropped to 1/n after the first growing update
    let mut theta = 1.0;
    loop {
        let c: Vec<f64> = sys
            .field_at_quad(&psi)
            .iter()
            .zip(sys.points())
            .map(|(&p, r)| p.powi(n as i32 - 1) / (nf * sys.radial_power(r)))
            .collect();
        let a = sys.linear_matrix(&c)?;
        let (mut next, _) = solve(&a, &sys.load)?;
        if theta < 1.0 {
            for (x, old) in next.iter_mut().zip(&psi) {
                *x = theta * *x + (1.0 - theta) * old;
            }
        }
        let scale = next
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let upd = next
            .iter()
            .zip(&psi)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            / scale;
        psi = next;
        if history.last().is_some_and(|&prev| upd > prev) {
            theta = 1.0 / nf;
        }
        history.push(upd);
        if !upd.is_finite() {
            return Err(VmmError::NonFinite("Picard iterate".into()));
        }
        if upd <= step_tol {
            break;
        }
        if history.len() >= opts.max_picard {
            return Err(VmmError::NonConvergence {
                reason: format!("Picard iteration stagnated after {} steps", opts.max_picard),
                history,
            });
        }
    }
    let nopts = NewtonOptions {
        tol: opts.tol,
        max_iter: opts.max_newton,
        ..Default::default()
    };
    let (w, mut report) = newton(&sys, psi, &nopts)?;
    report.eps_path.push(problem.eps);
    let w = FieldFunction::new(space, w)?;
    let u = recover_u(problem, w);
    let diagnostics = convexity_report(&u, &mesh, n);
    Ok(RadialState {
        problem: problem.clone(),
        mesh,
        u,
        diagnostics,
        picard_history: history,
        report,
    })
}

/// `u(r) = g(R) - int_r^R w(s) / s^{n-1} ds`.
pub fn recover_u(problem: &RadialProblem, w: FieldFunction) -> RadialField {
    let sp = &w.space;
    let ne = sp.n_elements();
    let mut edges: Vec<f64> = (0..ne).map(|e| sp.map_point(e, [0.0, 0.0])[0]).collect();
    edges.push(sp.map_point(ne - 1, [1.0, 0.0])[0]);
    let n = problem.n;
    let table = PanelIntegral::new(edges, |s| super::w_over_weight(&w, n, s));
    RadialField {
        n,
        r_max: problem.r_max,
        g_r: problem.g_r,
        kind: FieldKind::Recovered { w, table },
    }
}
