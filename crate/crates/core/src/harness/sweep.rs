use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{invalid, Result, VmmError};
use crate::fem::{FeSpace, FieldFunction};
use crate::harness::{
    check_params, CatalogParams, CatalogProblem, ErrNorm, ProblemCatalog, RateTable,
};
use crate::mesh::{build_interval_mesh, build_rect_mesh};
use crate::mixed::{
    continuation_solve, mixed_errors, newton_solve, ContinuationSchedule, MixedSolveOptions,
    MixedSpace, MixedState,
};
use crate::nonlinearity::Branch;
use crate::radial::{
    exact_radial_solution, radial_errors, solve_radial_hermite, HermiteOptions, RadialState,
};

pub const BUILD_ID: &str = concat!("vmm-core-", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    Eps,
    H,
}

impl SweepVariable {
    pub fn label(self) -> &'static str {
        match self {
            SweepVariable::Eps => "eps",
            SweepVariable::H => "h",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub problem: String,
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    /// Used when sweeping `h`.
    pub eps: f64,
    /// Mesh size used when sweeping eps; radial meshes get `round(R / h)`
    /// elements.
    pub h: f64,
    /// Lagrange degree of the mixed method; radial solves are Hermite cubic.
    pub degree: usize,
    /// Defaults to the problem's own value.
    pub tau: Option<f64>,
    pub params: CatalogParams,
    pub norms: Vec<ErrNorm>,
    pub tol: f64,
    /// First eps of a cold solve's continuation; the target itself when
    /// unset (radial solves start at 0.1).
    pub eps_start: Option<f64>,
    /// Independent solves, run in parallel.
    pub cold: bool,
    pub output: Option<PathBuf>,
    /// Adds a `# timestamp` line; off by default so output is reproducible.
    pub timestamp: bool,
}

impl SweepConfig {
    pub fn new(problem: impl Into<String>, variable: SweepVariable, values: Vec<f64>) -> Self {
        SweepConfig {
            problem: problem.into(),
            variable,
            values,
            eps: 1e-2,
            h: 1.0 / 16.0,
            degree: 2,
            tau: None,
            params: CatalogParams::default(),
            norms: ErrNorm::ALL.to_vec(),
            tol: 1e-10,
            eps_start: None,
            cold: false,
            output: None,
            timestamp: false,
        }
    }
}

/// A converged state that can seed the next solve.
#[derive(Debug, Clone)]
pub enum SolvedState {
    Mixed {
        space: MixedSpace,
        state: MixedState,
    },
    Radial(RadialState),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointErrors {
    /// Indexed like [`ErrNorm::ALL`]. Radial solves report the weighted
    /// norms of `u`, `u_r` and the radial Laplacian in the L2, H1 and H2
    /// slots.
    pub norms: [Option<f64>; 4],
    /// Tensor error of mixed solves.
    pub sigma_l2: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub table: RateTable,
    pub sigma_l2: Vec<Option<f64>>,
    /// Parameter value and message of every failed point.
    pub failures: Vec<(f64, String)>,
}

pub(crate) fn cells(range: (f64, f64), h: f64) -> usize {
    ((range.1 - range.0) / h).round().max(1.0) as usize
}

/// Interpolates every block of `state` onto `space`.
pub fn prolongate(from: &MixedSpace, state: &MixedState, space: &MixedSpace) -> MixedState {
    let n_old = from.n();
    let mut out = MixedState::zeros(space, state.eps, state.tau);
    let n = space.n();
    let target: Arc<dyn FeSpace> = space.scalar.clone();
    for b in 0..4 {
        let old = FieldFunction {
            space: from.scalar.clone(),
            coeffs: state.x[b * n_old..(b + 1) * n_old].to_vec(),
        };
        let f =
            FieldFunction::interpolate_lagrange(target.clone(), |p| old.value(p).unwrap_or(0.0));
        out.x[b * n..(b + 1) * n].copy_from_slice(&f.coeffs);
    }
    out
}

fn mixed_opts(tol: f64) -> MixedSolveOptions {
    MixedSolveOptions {
        tol,
        ..Default::default()
    }
}

/// One solve of a catalog problem at `(eps, h)`, warm-started from `warm`
/// when given; a failed warm start is retried cold.
pub fn solve_point(
    problem: &CatalogProblem,
    cfg: &SweepConfig,
    eps: f64,
    h: f64,
    warm: Option<&SolvedState>,
) -> Result<(PointErrors, SolvedState)> {
    match problem {
        CatalogProblem::Mixed {
            spec,
            x_range,
            y_range,
            default_tau,
        } => {
            let mesh = Arc::new(build_rect_mesh(
                *x_range,
                *y_range,
                cells(*x_range, h),
                cells(*y_range, h),
            )?);
            let space = MixedSpace::new(mesh, cfg.degree)?;
            let tau = cfg.tau.unwrap_or(*default_tau);
            let opts = mixed_opts(cfg.tol);
            let cold = || {
                let start = cfg.eps_start.unwrap_or(eps);
                continuation_solve(
                    spec,
                    &space,
                    eps,
                    start,
                    tau,
                    &ContinuationSchedule::default(),
                    &opts,
                )
            };
            let seeded = match warm {
                Some(SolvedState::Mixed { space: ws, state }) if state.tau == tau => {
                    let mut s0 = if ws.mesh.nx == space.mesh.nx
                        && ws.mesh.ny == space.mesh.ny
                        && ws.k == space.k
                    {
                        state.clone()
                    } else {
                        prolongate(ws, state, &space)
                    };
                    s0.eps = eps;
                    newton_solve(spec, &space, &s0, &opts).ok()
                }
                _ => None,
            };
            let (state, _) = match seeded {
                Some(r) => r,
                None => cold()?,
            };
            let (norms, sigma_l2) = match &spec.exact {
                Some(ex) => {
                    let e = mixed_errors(&space, &state, &|p| ex(p, eps))?;
                    (
                        [Some(e.l2), Some(e.h1), e.h2, Some(e.linf)],
                        Some(e.sigma_l2),
                    )
                }
                None => ([None; 4], None),
            };
            Ok((
                PointErrors { norms, sigma_l2 },
                SolvedState::Mixed { space, state },
            ))
        }
        CatalogProblem::Radial(base) => {
            let problem = base.with_eps(eps)?;
            let mesh = Arc::new(build_interval_mesh(
                problem.r_max,
                cells((0.0, problem.r_max), h),
            )?);
            let mut opts = HermiteOptions {
                tol: cfg.tol,
                eps_start: cfg.eps_start.unwrap_or(0.1),
                ..Default::default()
            };
            if let Some(SolvedState::Radial(prev)) = warm {
                if prev.mesh.nodes.len() == mesh.nodes.len() {
                    opts.warm_start = Some(prev.u.coefficients().clone());
                }
            }
            let state = match solve_radial_hermite(&problem, mesh.clone(), &opts) {
                Ok(s) => s,
                Err(_) if opts.warm_start.is_some() => {
                    opts.warm_start = None;
                    solve_radial_hermite(&problem, mesh.clone(), &opts)?
                }
                Err(e) => return Err(e),
            };
            let exact = exact_radial_solution(&problem, Branch::of_eps(eps))?;
            let e = radial_errors(&state.u, &exact, &mesh, problem.n);
            Ok((
                PointErrors {
                    norms: [Some(e.l2), Some(e.d1), Some(e.lap), Some(e.linf)],
                    sigma_l2: None,
                },
                SolvedState::Radial(state),
            ))
        }
    }
}

pub fn run_sweep(cfg: &SweepConfig, catalog: &ProblemCatalog) -> Result<SweepOutcome> {
    if cfg.values.len() < 2 {
        return invalid("a sweep needs at least two values");
    }
    check_params(&cfg.values)?;
    let problem = catalog.build(&cfg.problem, &cfg.params)?;
    let at = |v: f64| match cfg.variable {
        SweepVariable::Eps => (v, cfg.h),
        SweepVariable::H => (cfg.eps, v),
    };
    let results: Vec<Result<PointErrors>> = if cfg.cold {
        cfg.values
            .par_iter()
            .map(|&v| {
                let (eps, h) = at(v);
                solve_point(&problem, cfg, eps, h, None).map(|r| r.0)
            })
            .collect()
    } else {
        let mut warm: Option<SolvedState> = None;
        let mut out = Vec::with_capacity(cfg.values.len());
        for &v in &cfg.values {
            let (eps, h) = at(v);
            match solve_point(&problem, cfg, eps, h, warm.as_ref()) {
                Ok((e, s)) => {
                    warm = Some(s);
                    out.push(Ok(e));
                }
                Err(e) => out.push(Err(e)),
            }
        }
        out
    };
    let mut failures = Vec::new();
    let mut errors = Vec::new();
    let mut sigma_l2 = Vec::new();
    for (&v, r) in cfg.values.iter().zip(results) {
        match r {
            Ok(e) => {
                let mut norms = e.norms;
                for n in ErrNorm::ALL {
                    if !cfg.norms.contains(&n) {
                        norms[n as usize] = None;
                    }
                }
                errors.push(Some(norms));
                sigma_l2.push(e.sigma_l2);
            }
            Err(e) => {
                failures.push((v, e.to_string()));
                errors.push(None);
                sigma_l2.push(None);
            }
        }
    }
    let mut table = RateTable::from_errors(&cfg.values, &errors)?
        .with_meta("problem", cfg.problem.clone())
        .with_meta("sweep", cfg.variable.label());
    table = match cfg.variable {
        SweepVariable::Eps => table.with_meta("h", format!("{:e}", cfg.h)),
        SweepVariable::H => table.with_meta("eps", format!("{:e}", cfg.eps)),
    };
    if let CatalogProblem::Mixed { default_tau, .. } = &problem {
        table = table
            .with_meta("k", cfg.degree.to_string())
            .with_meta("tau", format!("{}", cfg.tau.unwrap_or(*default_tau)));
    }
    if let Some(g) = cfg.params.gamma {
        table = table.with_meta("gamma", format!("{g:?}"));
    }
    table = table
        .with_meta("tol", format!("{:e}", cfg.tol))
        .with_meta("mode", if cfg.cold { "cold" } else { "warm" })
        .with_meta("build", BUILD_ID);
    for (v, msg) in &failures {
        table = table.with_meta("failed", format!("{v}: {msg}"));
    }
    if cfg.timestamp {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        table = table.with_meta("timestamp", secs.to_string());
    }
    if let Some(path) = &cfg.output {
        let f = std::fs::File::create(path).map_err(VmmError::Io)?;
        table.write_csv(std::io::BufWriter::new(f))?;
    }
    Ok(SweepOutcome {
        table,
        sigma_l2,
        failures,
    })
}
