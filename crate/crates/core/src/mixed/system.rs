//! Residual and Jacobian of the mixed system.
//!
//! Rows, for a scalar test function `phi_i`:
//! * `s11`: `(s11, phi_i) + (d1 u, d1 phi_i) - tau (u, phi_i)`
//! * `s12`: `2 (s12, phi_i) + (d1 u, d2 phi_i) + (d2 u, d1 phi_i) - <phi_i (nu1 t2 + nu2 t1), dg/dt>`
//! * `s22`: as `s11` with `d2`
//! * `u`: `eps [(div s, grad phi_i) - tau (tr s, phi_i)] - 2 eps tau (grad u, grad phi_i)
//!   + 2 eps tau^2 (u, phi_i) - (F, phi_i)`
//!
//! where `s` is the shifted tensor and `F` is evaluated at `D^2 u = s - tau I u`.
//! Constrained dofs get identity rows.

use rayon::prelude::*;

use crate::error::{Result, VmmError};
use crate::fem::space::ElementValues;
use crate::fem::FeSpace;
use crate::mixed::{boundary_basis, MixedSpace, MixedState, S11, S12, S22, U};
use crate::newton::NonlinearSystem;
use crate::nonlinearity::{PointState, ProblemSpec};
use crate::sparse::{norm2, PatternBuilder, SparseMatrix};

/// Values imposed on the constrained dofs, in the order of the space's
/// constraint lists.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub u: Vec<f64>,
    pub s11: Vec<f64>,
    pub s22: Vec<f64>,
}

impl BoundaryData {
    /// `u = g` and `s_nn = phi + tau g` from the problem's second trace.
    pub fn from_spec(spec: &ProblemSpec, space: &MixedSpace, eps: f64, tau: f64) -> Self {
        let pts = space.points();
        let dm = &space.scalar.dofmap;
        let nu_v = |i: usize| {
            if dm.boundary[i].left {
                [-1.0, 0.0]
            } else {
                [1.0, 0.0]
            }
        };
        let nu_h = |i: usize| {
            if dm.boundary[i].bottom {
                [0.0, -1.0]
            } else {
                [0.0, 1.0]
            }
        };
        let phi11: Vec<f64> = space
            .s11_fixed
            .iter()
            .map(|&i| (spec.second_trace)(pts[i], nu_v(i), eps))
            .collect();
        let phi22: Vec<f64> = space
            .s22_fixed
            .iter()
            .map(|&i| (spec.second_trace)(pts[i], nu_h(i), eps))
            .collect();
        Self::with_trace(spec, space, tau, &phi11, &phi22)
    }

    /// Boundary data with the second trace given explicitly at the
    /// constrained `s11` and `s22` dofs.
    pub fn with_trace(
        spec: &ProblemSpec,
        space: &MixedSpace,
        tau: f64,
        phi11: &[f64],
        phi22: &[f64],
    ) -> Self {
        let pts = space.points();
        let g = |i: usize| (spec.g)(pts[i]);
        BoundaryData {
            u: space.u_fixed.iter().map(|&i| g(i)).collect(),
            s11: space
                .s11_fixed
                .iter()
                .zip(phi11)
                .map(|(&i, p)| p + tau * g(i))
                .collect(),
            s22: space
                .s22_fixed
                .iter()
                .zip(phi22)
                .map(|(&i, p)| p + tau * g(i))
                .collect(),
        }
    }

    fn entries<'a>(&'a self, space: &'a MixedSpace) -> impl Iterator<Item = (usize, f64)> + 'a {
        let n = space.n();
        let u = space
            .u_fixed
            .iter()
            .zip(&self.u)
            .map(move |(&i, &v)| (U * n + i, v));
        let a = space
            .s11_fixed
            .iter()
            .zip(&self.s11)
            .map(move |(&i, &v)| (S11 * n + i, v));
        let b = space
            .s22_fixed
            .iter()
            .zip(&self.s22)
            .map(move |(&i, &v)| (S22 * n + i, v));
        u.chain(a).chain(b)
    }

    /// Writes the data into the constrained entries of `x`.
    pub fn impose(&self, space: &MixedSpace, x: &mut [f64]) {
        for (d, v) in self.entries(space) {
            x[d] = v;
        }
    }
}

/// Coupled blocks `(row block, column block)` of the Jacobian.
const BLOCKS: [(usize, usize); 10] = [
    (S11, S11),
    (S11, U),
    (S12, S12),
    (S12, U),
    (S22, S22),
    (S22, U),
    (U, S11),
    (U, S12),
    (U, S22),
    (U, U),
];

pub(crate) fn jacobian_pattern(space: &MixedSpace) -> SparseMatrix {
    let n = space.n();
    let mut pb = PatternBuilder::new(space.n_total());
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    for e in 0..space.scalar.n_elements() {
        let dofs = space.scalar.dofmap.element(e);
        for &(rb, cb) in &BLOCKS {
            rows.clear();
            cols.clear();
            rows.extend(dofs.iter().map(|&d| rb * n + d));
            cols.extend(dofs.iter().map(|&d| cb * n + d));
            pb.add_block(&rows, &cols);
        }
    }
    pb.build()
}

pub struct MixedSystem<'a> {
    pub spec: &'a ProblemSpec,
    pub space: &'a MixedSpace,
    pub eps: f64,
    pub tau: f64,
    pub data: BoundaryData,
    /// Boundary data term of the `s12` rows.
    g_term: Vec<f64>,
    constrained: Vec<usize>,
    scale: f64,
}

struct Local {
    res: Vec<f64>,
    jac: Vec<f64>,
}

impl<'a> MixedSystem<'a> {
    pub fn new(
        spec: &'a ProblemSpec,
        space: &'a MixedSpace,
        eps: f64,
        tau: f64,
        data: BoundaryData,
    ) -> Result<Self> {
        let n = space.n();
        let mut g_term = vec![0.0; n];
        for (bp, dofs, vals) in boundary_basis(space)? {
            let c = bp.normal[0] * bp.tangent[1] + bp.normal[1] * bp.tangent[0];
            if c == 0.0 {
                continue;
            }
            let dg = spec.dg_dtangent(bp.point, bp.tangent);
            for (&d, &v) in dofs.iter().zip(&vals) {
                g_term[d] += bp.weight * c * dg * v;
            }
        }
        let mut sys = MixedSystem {
            spec,
            space,
            eps,
            tau,
            data,
            g_term,
            constrained: space.constrained(),
            scale: 1.0,
        };
        let r0 = sys.residual(&vec![0.0; space.n_total()])?;
        sys.scale = norm2(&r0);
        Ok(sys)
    }

    pub fn with_spec_data(
        spec: &'a ProblemSpec,
        space: &'a MixedSpace,
        eps: f64,
        tau: f64,
    ) -> Result<Self> {
        let data = BoundaryData::from_spec(spec, space, eps, tau);
        Self::new(spec, space, eps, tau, data)
    }

    fn local(&self, e: usize, x: &[f64], want_jac: bool) -> Local {
        let sp = &self.space.scalar;
        let mut ev = ElementValues::default();
        sp.element_values(e, &mut ev);
        let n = self.space.n();
        let nl = ev.n;
        let (eps, tau) = (self.eps, self.tau);
        let mut c = [vec![0.0; nl], vec![0.0; nl], vec![0.0; nl], vec![0.0; nl]];
        for b in 0..4 {
            for (i, &d) in ev.dofs.iter().enumerate() {
                c[b][i] = x[b * n + d];
            }
        }
        let mut res = vec![0.0; 4 * nl];
        let mut jac = if want_jac {
            vec![0.0; BLOCKS.len() * nl * nl]
        } else {
            Vec::new()
        };
        for q in 0..ev.nq {
            let w = ev.weights[q];
            let (s11, g11, _) = ev.field(q, &c[S11]);
            let (s12, g12, _) = ev.field(q, &c[S12]);
            let (s22, g22, _) = ev.field(q, &c[S22]);
            let (u, gu, _) = ev.field(q, &c[U]);
            let state = PointState {
                kappa: [[s11 - tau * u, s12], [s12, s22 - tau * u]],
                p: gu,
                z: u,
                x: ev.points[q],
            };
            let f = self.spec.eval_f(&state, eps);
            let div = [g11[0] + g12[1], g12[0] + g22[1]];
            let tr = s11 + s22;
            let base = q * nl;
            for i in 0..nl {
                let pi = ev.phi[base + i];
                let di = ev.grad[base + i];
                res[S11 * nl + i] += w * (s11 * pi + di[0] * gu[0] - tau * u * pi);
                res[S12 * nl + i] += w * (2.0 * s12 * pi + di[1] * gu[0] + di[0] * gu[1]);
                res[S22 * nl + i] += w * (s22 * pi + di[1] * gu[1] - tau * u * pi);
                res[U * nl + i] += w
                    * (eps * (div[0] * di[0] + div[1] * di[1] - tau * tr * pi)
                        - 2.0 * eps * tau * (gu[0] * di[0] + gu[1] * di[1])
                        + 2.0 * eps * tau * tau * u * pi
                        - f * pi);
            }
            if !want_jac {
                continue;
            }
            let lin = self.spec.eval_fprime(&state, eps);
            let fr = lin.f_r;
            let tr_fr = fr[0][0] + fr[1][1];
            let blk = nl * nl;
            for i in 0..nl {
                let pi = ev.phi[base + i];
                let di = ev.grad[base + i];
                for j in 0..nl {
                    let pj = ev.phi[base + j];
                    let dj = ev.grad[base + j];
                    let mm = w * pi * pj;
                    let ij = i * nl + j;
                    // W rows
                    jac[ij] += mm;
                    jac[blk + ij] += w * (di[0] * dj[0]) - tau * mm;
                    jac[2 * blk + ij] += 2.0 * mm;
                    jac[3 * blk + ij] += w * (di[1] * dj[0] + di[0] * dj[1]);
                    jac[4 * blk + ij] += mm;
                    jac[5 * blk + ij] += w * (di[1] * dj[1]) - tau * mm;
                    // Q rows
                    jac[6 * blk + ij] += eps * (w * dj[0] * di[0] - tau * mm) - fr[0][0] * mm;
                    jac[7 * blk + ij] +=
                        eps * w * (dj[1] * di[0] + dj[0] * di[1]) - (fr[0][1] + fr[1][0]) * mm;
                    jac[8 * blk + ij] += eps * (w * dj[1] * di[1] - tau * mm) - fr[1][1] * mm;
                    let dfu =
                        -tau * tr_fr * pj + lin.f_p[0] * dj[0] + lin.f_p[1] * dj[1] + lin.f_z * pj;
                    jac[9 * blk + ij] += -2.0 * eps * tau * w * (gdot(di, dj))
                        + 2.0 * eps * tau * tau * mm
                        - w * dfu * pi;
                }
            }
        }
        Local { res, jac }
    }

    /// Assembles the residual and optionally the Jacobian at `x`.
    pub fn assemble(&self, x: &[f64], want_jac: bool) -> Result<(Vec<f64>, Option<SparseMatrix>)> {
        let space = self.space;
        let n = space.n();
        if x.len() != space.n_total() {
            return Err(VmmError::Internal(format!(
                "state has {} entries, space has {}",
                x.len(),
                space.n_total()
            )));
        }
        let ne = space.scalar.n_elements();
        let locals: Vec<Local> = (0..ne)
            .into_par_iter()
            .map(|e| self.local(e, x, want_jac))
            .collect();
        let mut res = vec![0.0; space.n_total()];
        let mut jac = if want_jac {
            Some(space.pattern().clone())
        } else {
            None
        };
        for (e, loc) in locals.iter().enumerate() {
            let dofs = space.scalar.dofmap.element(e);
            let nl = dofs.len();
            for b in 0..4 {
                for (i, &d) in dofs.iter().enumerate() {
                    res[b * n + d] += loc.res[b * nl + i];
                }
            }
            if let Some(a) = jac.as_mut() {
                for (k, &(rb, cb)) in BLOCKS.iter().enumerate() {
                    for (i, &di) in dofs.iter().enumerate() {
                        for (j, &dj) in dofs.iter().enumerate() {
                            let v = loc.jac[k * nl * nl + i * nl + j];
                            match a.entry_mut(rb * n + di, cb * n + dj) {
                                Some(slot) => *slot += v,
                                None => {
                                    return Err(VmmError::Internal(
                                        "entry outside the Jacobian pattern".into(),
                                    ))
                                }
                            }
                        }
                    }
                }
            }
        }
        for (i, g) in self.g_term.iter().enumerate() {
            res[S12 * n + i] -= g;
        }
        for (d, v) in self.data.entries(space) {
            res[d] = x[d] - v;
        }
        if let Some(a) = jac.as_mut() {
            for &d in &self.constrained {
                a.set_identity_row(d)?;
            }
        }
        Ok((res, jac))
    }
}

fn gdot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

impl NonlinearSystem for MixedSystem<'_> {
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.assemble(x, false)?.0)
    }

    fn residual_jacobian(&self, x: &[f64]) -> Result<(Vec<f64>, SparseMatrix)> {
        let (r, j) = self.assemble(x, true)?;
        Ok((r, j.expect("jacobian requested")))
    }

    fn residual_scale(&self) -> f64 {
        self.scale
    }
}

/// Residual and Jacobian at `state` with the problem's own boundary data.
pub fn assemble_residual_jacobian(
    spec: &ProblemSpec,
    space: &MixedSpace,
    state: &MixedState,
) -> Result<(Vec<f64>, SparseMatrix)> {
    if state.x.len() != space.n_total() {
        return Err(VmmError::Internal(format!(
            "state has {} entries, space has {}",
            state.x.len(),
            space.n_total()
        )));
    }
    let sys = MixedSystem::with_spec_data(spec, space, state.eps, state.tau)?;
    sys.residual_jacobian(&state.x)
}
