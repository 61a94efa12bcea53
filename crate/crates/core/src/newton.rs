//! Damped Newton iteration shared by the radial and mixed solvers.

use crate::error::{Result, VmmError};
use crate::sparse::{norm2, Factorization, LuBackend, SparseMatrix};

/// A square nonlinear system `R(x) = 0` with an assembled Jacobian.
pub trait NonlinearSystem {
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn residual_jacobian(&self, x: &[f64]) -> Result<(Vec<f64>, SparseMatrix)>;
    /// Scale against which residual norms are measured.
    fn residual_scale(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Maximum number of step halvings per iteration.
    pub max_halvings: usize,
    pub backend: LuBackend,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-10,
            max_iter: 30,
            max_halvings: 8,
            backend: LuBackend::Auto,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    /// Relative residual norms, starting with the initial state.
    pub residual_history: Vec<f64>,
    /// Relative sizes `|dx|_inf / |x|_inf` of the accepted corrections.
    pub step_history: Vec<f64>,
    pub converged: bool,
    /// Continuation parameters visited, in order.
    pub eps_path: Vec<f64>,
}

impl NewtonReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }

    /// Merges a later stage into this report.
    pub fn extend(&mut self, other: NewtonReport) {
        self.iterations += other.iterations;
        self.residual_history.extend(other.residual_history);
        self.step_history.extend(other.step_history);
        self.converged = other.converged;
        self.eps_path.extend(other.eps_path);
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Newton's method with step halving when the residual norm does not
/// decrease. If no halved step decreases the residual the full step is
/// taken anyway. Converged means relative residual `<= tol`, or a Newton
/// correction whose relative size is `<= tol` (the residual has reached
/// its round-off floor).
pub fn newton(
    sys: &dyn NonlinearSystem,
    x0: Vec<f64>,
    opts: &NewtonOptions,
) -> Result<(Vec<f64>, NewtonReport)> {
    let scale = {
        let s = sys.residual_scale();
        if s > 0.0 && s.is_finite() {
            s
        } else {
            1.0
        }
    };
    let mut x = x0;
    let mut report = NewtonReport::default();
    let (mut r, mut jac) = sys.residual_jacobian(&x)?;
    if !finite(&r) {
        return Err(VmmError::NonFinite("residual at the initial state".into()));
    }
    let mut rn = norm2(&r) / scale;
    report.residual_history.push(rn);
    while rn > opts.tol {
        if report.iterations >= opts.max_iter {
            return Err(VmmError::NonConvergence {
                reason: format!("no convergence in {} Newton iterations", opts.max_iter),
                history: report.residual_history,
            });
        }
        let lu = Factorization::new(&jac, opts.backend)?;
        let (dx, _) = lu.solve_refined(&jac, &r)?;
        let mut step = 1.0;
        let mut accepted: Option<(Vec<f64>, Vec<f64>, f64)> = None;
        let mut full: Option<(Vec<f64>, Vec<f64>, f64)> = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a - step * d).collect();
            let rt = sys.residual(&trial)?;
            if finite(&rt) {
                let tn = norm2(&rt) / scale;
                if tn < rn {
                    accepted = Some((trial, rt, tn));
                    break;
                }
                if full.is_none() {
                    full = Some((trial, rt, tn));
                }
            }
            step *= 0.5;
        }
        let (xn, _, _) = match accepted.or(full) {
            Some(v) => v,
            None => {
                return Err(VmmError::NonFinite(format!(
                    "residual after {} damped steps",
                    opts.max_halvings
                )))
            }
        };
        let rel_step = inf_norm(&dx) / inf_norm(&xn).max(f64::MIN_POSITIVE);
        report.step_history.push(rel_step);
        x = xn;
        report.iterations += 1;
        let (r2, j2) = sys.residual_jacobian(&x)?;
        r = r2;
        jac = j2;
        rn = norm2(&r) / scale;
        report.residual_history.push(rn);
        if rel_step <= opts.tol {
            break;
        }
    }
    report.converged = true;
    Ok((x, report))
}
