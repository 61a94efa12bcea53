use crate::error::{invalid, Result, VmmError};
use crate::fem::{assemble, assemble_vector, stiffness_kernel};
use crate::mixed::{BoundaryData, MixedSpace, MixedState, MixedSystem, U};
use crate::newton::{newton, NewtonOptions, NewtonReport, NonlinearSystem};
use crate::nonlinearity::ProblemSpec;
use crate::sparse::{solve, LuBackend, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedSolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Maximum step halvings per Newton iteration.
    pub damping: usize,
    pub backend: LuBackend,
}

impl Default for MixedSolveOptions {
    fn default() -> Self {
        MixedSolveOptions {
            tol: 1e-10,
            max_iter: 30,
            damping: 8,
            backend: LuBackend::Auto,
        }
    }
}

impl MixedSolveOptions {
    fn newton(&self) -> NewtonOptions {
        NewtonOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            max_halvings: self.damping,
            backend: self.backend,
        }
    }
}

/// Geometric eps schedule. With `stages` set the path has exactly that
/// many entries and ends at the target; otherwise it runs until the target
/// is reached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationSchedule {
    pub ratio: f64,
    pub stages: Option<usize>,
}

impl Default for ContinuationSchedule {
    fn default() -> Self {
        ContinuationSchedule {
            ratio: 0.5,
            stages: None,
        }
    }
}

pub fn continuation_path(
    eps_target: f64,
    eps_start: f64,
    schedule: &ContinuationSchedule,
) -> Result<Vec<f64>> {
    if eps_target == 0.0 || eps_start * eps_target <= 0.0 {
        return invalid(format!(
            "eps_start {eps_start} and eps_target {eps_target} must be nonzero with the same sign"
        ));
    }
    if eps_start.abs() < eps_target.abs() {
        return invalid(format!(
            "|eps_start| = {} is below |eps_target| = {}",
            eps_start.abs(),
            eps_target.abs()
        ));
    }
    let r = schedule.ratio;
    if !(r > 0.0 && r <= 1.0) {
        return invalid(format!("continuation ratio must lie in (0, 1], got {r}"));
    }
    let s = eps_target.signum();
    let target = eps_target.abs();
    let mut e = eps_start.abs();
    let mut path = vec![s * e];
    match schedule.stages {
        Some(0) => return invalid("a continuation needs at least one stage"),
        Some(m) => {
            for _ in 1..m {
                e = (e * r).max(target);
                path.push(s * e);
            }
            *path.last_mut().unwrap() = eps_target;
        }
        None => {
            if r == 1.0 && e > target {
                return invalid("ratio 1 without a stage count never reaches the target");
            }
            while e > target {
                e = (e * r).max(target);
                path.push(s * e);
            }
        }
    }
    Ok(path)
}

/// Poisson-type starting value for `u` and the matching tensor from the
/// first mixed equation.
pub fn initial_guess(
    spec: &ProblemSpec,
    space: &MixedSpace,
    eps: f64,
    tau: f64,
) -> Result<MixedState> {
    let sp = space.scalar.as_ref();
    let op = &spec.operator;
    let scale = op.source_scale();
    let sign = if eps < 0.0 { -1.0 } else { 1.0 };
    let lap = |x| {
        if op.is_determinant_type() {
            sign * 2.0 * (scale * (spec.source)(x, eps)).max(0.0).sqrt()
        } else {
            0.0
        }
    };
    let mut a = assemble(sp, sp, stiffness_kernel)?;
    // -Delta u = -lap
    let mut b = assemble_vector(sp, |v| {
        let mut out = vec![0.0; v.n];
        for q in 0..v.nq {
            let c = -lap(v.points[q]) * v.weights[q];
            for i in 0..v.n {
                out[i] += c * v.phi[q * v.n + i];
            }
        }
        out
    })?;
    let pts = space.points();
    for &i in &space.u_fixed {
        a.set_identity_row(i)?;
        b[i] = (spec.g)(pts[i]);
    }
    let (u, _) = solve(&a, &b)?;
    let mut state = MixedState::zeros(space, eps, tau);
    let n = space.n();
    state.x[U * n..].copy_from_slice(&u);
    recover_sigma(
        spec,
        space,
        &mut state,
        BoundaryData::from_spec(spec, space, eps, tau),
    )?;
    Ok(state)
}

/// Solves the tensor rows with `u` held fixed.
fn recover_sigma(
    spec: &ProblemSpec,
    space: &MixedSpace,
    state: &mut MixedState,
    data: BoundaryData,
) -> Result<()> {
    let sys = MixedSystem::new(spec, space, state.eps, state.tau, data)?;
    sys.data.impose(space, &mut state.x);
    let m = 3 * space.n();
    let (r, j) = sys.residual_jacobian(&state.x)?;
    let sub = principal_block(&j, m)?;
    let (d, _) = solve(&sub, &r[..m])?;
    for (x, d) in state.x[..m].iter_mut().zip(&d) {
        *x -= d;
    }
    sys.data.impose(space, &mut state.x);
    Ok(())
}

fn principal_block(a: &SparseMatrix, m: usize) -> Result<SparseMatrix> {
    let mut trip = Vec::new();
    for i in 0..m {
        let (cols, vals) = a.row(i);
        trip.extend(
            cols.iter()
                .zip(vals)
                .filter(|(&c, _)| c < m)
                .map(|(&c, &v)| (i, c, v)),
        );
    }
    SparseMatrix::from_triplets(m, m, &trip)
}

/// Damped Newton from `state0` with the problem's boundary data.
pub fn newton_solve(
    spec: &ProblemSpec,
    space: &MixedSpace,
    state0: &MixedState,
    opts: &MixedSolveOptions,
) -> Result<(MixedState, NewtonReport)> {
    let data = BoundaryData::from_spec(spec, space, state0.eps, state0.tau);
    newton_solve_with_data(spec, space, state0, data, opts)
}

/// As [`newton_solve`] with explicit boundary data.
pub fn newton_solve_with_data(
    spec: &ProblemSpec,
    space: &MixedSpace,
    state0: &MixedState,
    data: BoundaryData,
    opts: &MixedSolveOptions,
) -> Result<(MixedState, NewtonReport)> {
    if state0.x.len() != space.n_total() {
        return Err(VmmError::Internal(format!(
            "state has {} entries, space has {}",
            state0.x.len(),
            space.n_total()
        )));
    }
    let sys = MixedSystem::new(spec, space, state0.eps, state0.tau, data)?;
    let mut x = state0.x.clone();
    sys.data.impose(space, &mut x);
    let (mut x, mut report) = newton(&sys, x, &opts.newton())?;
    sys.data.impose(space, &mut x);
    report.eps_path.push(state0.eps);
    Ok((
        MixedState {
            x,
            eps: state0.eps,
            tau: state0.tau,
        },
        report,
    ))
}

/// Newton continuation in eps from the Poisson initial guess at `eps_start`.
pub fn continuation_solve(
    spec: &ProblemSpec,
    space: &MixedSpace,
    eps_target: f64,
    eps_start: f64,
    tau: f64,
    schedule: &ContinuationSchedule,
    opts: &MixedSolveOptions,
) -> Result<(MixedState, NewtonReport)> {
    let path = continuation_path(eps_target, eps_start, schedule)?;
    let mut state = initial_guess(spec, space, path[0], tau)?;
    let mut report = NewtonReport::default();
    for &e in &path {
        state.eps = e;
        let (next, rep) =
            newton_solve(spec, space, &state, opts).map_err(|err| VmmError::Continuation {
                eps: e,
                source: Box::new(err),
            })?;
        report.extend(rep);
        state = next;
    }
    Ok((state, report))
}
