use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{invalid, Result, VmmError};
use crate::fem::quadrature::gauss_legendre;
use crate::fem::{error_norm, make_quadrature, Cell, FieldFunction, Jet2, Norm};
use crate::mesh::{Mesh1D, Side};
use crate::mixed::{
    continuation_solve, mixed_errors, newton_solve_with_data, BoundaryData, ContinuationSchedule,
    MixedSolveOptions, MixedSpace, MixedState,
};
use crate::nonlinearity::ProblemSpec;
use crate::radial::{
    radial_errors, solve_radial_hermite, ExactRadial, HermiteOptions, RadialEval, RadialProblem,
    RadialState,
};
use crate::surgery::{TraceSample, TraceTarget};

/// Errors of one surgery pass against the exact solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurgeryErrors {
    pub l2: f64,
    /// Radial: weighted L2 of `u_r`; mixed: full H1.
    pub h1: f64,
    /// Max error of the Laplacian (radial `Delta_r u`, mixed `tr sigma`).
    pub lap_linf: f64,
}

/// Final state of a surgical solve.
#[derive(Debug, Clone)]
pub enum SurgeryOutcome {
    Radial(RadialState),
    Mixed {
        space: MixedSpace,
        state: MixedState,
    },
}

/// A discretization whose boundary second trace can be replaced between
/// solves.
pub trait SurgerySolver: Send {
    fn name(&self) -> &'static str;
    fn eps(&self) -> f64;
    /// Half the width of the domain; the band must be thinner.
    fn half_width(&self) -> f64;
    /// First call: plain solve with the configured data. Later calls: solve
    /// at the target eps warm-started from the previous state.
    fn solve(&mut self) -> Result<()>;
    /// Second-trace data currently imposed, one value per target.
    fn current_trace(&self) -> Vec<f64>;
    fn targets(&self) -> Vec<TraceTarget>;
    /// Discrete second trace on the curve at distance `d` inside the boundary.
    fn sample(&self, d: f64) -> Result<Vec<TraceSample>>;
    fn set_trace(&mut self, values: Vec<f64>) -> Result<()>;
    fn errors(&self) -> Result<Option<SurgeryErrors>>;
    fn finish(self: Box<Self>) -> Result<SurgeryOutcome>;
}

fn not_solved<T>() -> Result<T> {
    Err(VmmError::Internal(
        "surgery solver used before its first solve".into(),
    ))
}

pub struct RadialSurgery {
    problem: RadialProblem,
    mesh: Arc<Mesh1D>,
    opts: HermiteOptions,
    exact: Option<ExactRadial>,
    trace: f64,
    state: Option<RadialState>,
}

impl RadialSurgery {
    pub fn new(
        problem: RadialProblem,
        mesh: Arc<Mesh1D>,
        opts: HermiteOptions,
        exact: Option<ExactRadial>,
    ) -> Self {
        let trace = opts.second_trace.unwrap_or(problem.eps);
        RadialSurgery {
            problem,
            mesh,
            opts,
            exact,
            trace,
            state: None,
        }
    }
}

impl SurgerySolver for RadialSurgery {
    fn name(&self) -> &'static str {
        "radial"
    }

    fn eps(&self) -> f64 {
        self.problem.eps
    }

    fn half_width(&self) -> f64 {
        self.problem.r_max
    }

    fn solve(&mut self) -> Result<()> {
        let mut opts = self.opts.clone();
        if let Some(prev) = &self.state {
            opts.second_trace = Some(self.trace);
            opts.warm_start = Some(prev.u.coefficients().clone());
        }
        self.state = Some(solve_radial_hermite(
            &self.problem,
            self.mesh.clone(),
            &opts,
        )?);
        Ok(())
    }

    fn current_trace(&self) -> Vec<f64> {
        vec![self.trace]
    }

    fn targets(&self) -> Vec<TraceTarget> {
        vec![TraceTarget { segment: 0, t: 0.0 }]
    }

    fn sample(&self, d: f64) -> Result<Vec<TraceSample>> {
        let Some(st) = &self.state else {
            return not_solved();
        };
        Ok(vec![TraceSample {
            segment: 0,
            t: 0.0,
            value: st.u.jet(self.problem.r_max - d).lap,
        }])
    }

    fn set_trace(&mut self, values: Vec<f64>) -> Result<()> {
        match values[..] {
            [c] if c.is_finite() => {
                self.trace = c;
                Ok(())
            }
            _ => invalid(format!(
                "radial surgery takes one finite trace value, got {values:?}"
            )),
        }
    }

    fn errors(&self) -> Result<Option<SurgeryErrors>> {
        let Some(st) = &self.state else {
            return not_solved();
        };
        let Some(ex) = &self.exact else {
            return Ok(None);
        };
        let n = self.problem.n;
        let e = radial_errors(&st.u, ex, &self.mesh, n);
        let (gx, _) = gauss_legendre(8);
        let mut lap_linf = 0.0f64;
        for el in 0..self.mesh.n_elements() {
            let (a, b) = self.mesh.element_bounds(el);
            let radii = gx.iter().map(|&x| a + (b - a) * x).chain([a, b]);
            for r in radii {
                lap_linf = lap_linf.max((st.u.jet(r).lap - ex.jet(r).lap).abs());
            }
        }
        Ok(Some(SurgeryErrors {
            l2: e.l2,
            h1: e.d1,
            lap_linf,
        }))
    }

    fn finish(self: Box<Self>) -> Result<SurgeryOutcome> {
        match self.state {
            Some(st) => Ok(SurgeryOutcome::Radial(st)),
            None => not_solved(),
        }
    }
}

pub struct MixedSurgery {
    spec: ProblemSpec,
    space: MixedSpace,
    eps: f64,
    eps_start: f64,
    tau: f64,
    opts: MixedSolveOptions,
    phi11: Vec<f64>,
    phi22: Vec<f64>,
    state: Option<MixedState>,
}

fn segment(side: Side) -> usize {
    match side {
        Side::Bottom => 0,
        Side::Right => 1,
        Side::Top => 2,
        Side::Left => 3,
    }
}

impl MixedSurgery {
    pub fn new(
        spec: ProblemSpec,
        space: MixedSpace,
        eps: f64,
        eps_start: f64,
        tau: f64,
        opts: MixedSolveOptions,
    ) -> Self {
        let data = BoundaryData::from_spec(&spec, &space, eps, tau);
        let pts = space.points();
        let strip = |vals: &[f64], dofs: &[usize]| -> Vec<f64> {
            vals.iter()
                .zip(dofs)
                .map(|(v, &i)| v - tau * (spec.g)(pts[i]))
                .collect()
        };
        let phi11 = strip(&data.s11, &space.s11_fixed);
        let phi22 = strip(&data.s22, &space.s22_fixed);
        MixedSurgery {
            spec,
            space,
            eps,
            eps_start,
            tau,
            opts,
            phi11,
            phi22,
            state: None,
        }
    }
}

impl SurgerySolver for MixedSurgery {
    fn name(&self) -> &'static str {
        "mixed"
    }

    fn eps(&self) -> f64 {
        self.eps
    }

    fn half_width(&self) -> f64 {
        let m = &self.space.mesh;
        0.5 * (m.x_range.1 - m.x_range.0).min(m.y_range.1 - m.y_range.0)
    }

    fn solve(&mut self) -> Result<()> {
        let (sp, spec) = (&self.space, &self.spec);
        let state = match &self.state {
            None => {
                let sched = ContinuationSchedule::default();
                continuation_solve(
                    spec,
                    sp,
                    self.eps,
                    self.eps_start,
                    self.tau,
                    &sched,
                    &self.opts,
                )?
                .0
            }
            Some(prev) => {
                let data = BoundaryData::with_trace(spec, sp, self.tau, &self.phi11, &self.phi22);
                newton_solve_with_data(spec, sp, prev, data, &self.opts)?.0
            }
        };
        self.state = Some(state);
        Ok(())
    }

    fn current_trace(&self) -> Vec<f64> {
        self.phi11.iter().chain(&self.phi22).copied().collect()
    }

    fn targets(&self) -> Vec<TraceTarget> {
        let pts = self.space.points();
        let dm = &self.space.scalar.dofmap;
        let vert = self.space.s11_fixed.iter().map(|&i| TraceTarget {
            segment: segment(if dm.boundary[i].left {
                Side::Left
            } else {
                Side::Right
            }),
            t: pts[i][1],
        });
        let horiz = self.space.s22_fixed.iter().map(|&i| TraceTarget {
            segment: segment(if dm.boundary[i].bottom {
                Side::Bottom
            } else {
                Side::Top
            }),
            t: pts[i][0],
        });
        vert.chain(horiz).collect()
    }

    fn sample(&self, d: f64) -> Result<Vec<TraceSample>> {
        let Some(st) = &self.state else {
            return not_solved();
        };
        let m = &self.space.mesh;
        let sig = st.sigma_fields(&self.space);
        let (x0, x1) = m.x_range;
        let (y0, y1) = m.y_range;
        let xs: Vec<f64> = (0..=m.nx)
            .map(|i| x0 + (x1 - x0) * i as f64 / m.nx as f64)
            .collect();
        let ys: Vec<f64> = (0..=m.ny)
            .map(|j| y0 + (y1 - y0) * j as f64 / m.ny as f64)
            .collect();
        let (gx, _) = gauss_legendre(self.space.k + 1);
        // Gauss points of the grid intervals clipped to [lo, hi], plus the ends.
        let along = |breaks: &[f64], lo: f64, hi: f64| -> Vec<f64> {
            let mut ts = vec![lo, hi];
            for w in breaks.windows(2) {
                let (a, b) = (w[0].max(lo), w[1].min(hi));
                if b > a {
                    ts.extend(gx.iter().map(|&g| a + (b - a) * g));
                }
            }
            ts
        };
        let mut out = Vec::new();
        for side in Side::ALL {
            let (comp, ts, point): (usize, Vec<f64>, Box<dyn Fn(f64) -> [f64; 2]>) = match side {
                Side::Bottom => (2, along(&xs, x0 + d, x1 - d), Box::new(|t| [t, y0 + d])),
                Side::Top => (2, along(&xs, x0 + d, x1 - d), Box::new(|t| [t, y1 - d])),
                Side::Left => (0, along(&ys, y0 + d, y1 - d), Box::new(|t| [x0 + d, t])),
                Side::Right => (0, along(&ys, y0 + d, y1 - d), Box::new(|t| [x1 - d, t])),
            };
            for t in ts {
                out.push(TraceSample {
                    segment: segment(side),
                    t,
                    value: sig[comp].value(point(t))?,
                });
            }
        }
        Ok(out)
    }

    fn set_trace(&mut self, values: Vec<f64>) -> Result<()> {
        let n11 = self.phi11.len();
        if values.len() != n11 + self.phi22.len() || values.iter().any(|v| !v.is_finite()) {
            return invalid(format!(
                "mixed surgery takes {} finite trace values, got {}",
                n11 + self.phi22.len(),
                values.len()
            ));
        }
        self.phi11 = values[..n11].to_vec();
        self.phi22 = values[n11..].to_vec();
        Ok(())
    }

    fn errors(&self) -> Result<Option<SurgeryErrors>> {
        let Some(st) = &self.state else {
            return not_solved();
        };
        let Some(exact) = &self.spec.exact else {
            return Ok(None);
        };
        let eps = self.eps;
        let ex = |p| exact(p, eps);
        let e = mixed_errors(&self.space, st, &ex)?;
        let [s11, _, s22] = st.sigma_fields(&self.space);
        let tr = FieldFunction {
            space: s11.space.clone(),
            coeffs: s11
                .coeffs
                .iter()
                .zip(&s22.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        };
        let quad = make_quadrature(Cell::Triangle, 2 * self.space.k + 2)?;
        let lap = |p| {
            let h = ex(p).hess;
            Jet2 {
                value: h[0][0] + h[1][1],
                ..Default::default()
            }
        };
        let lap_linf = error_norm(&tr, &lap, Norm::LinfQuad, &quad)?;
        Ok(Some(SurgeryErrors {
            l2: e.l2,
            h1: e.h1,
            lap_linf,
        }))
    }

    fn finish(self: Box<Self>) -> Result<SurgeryOutcome> {
        match self.state {
            Some(state) => Ok(SurgeryOutcome::Mixed {
                space: self.space,
                state,
            }),
            None => not_solved(),
        }
    }
}

/// Inputs accepted by the registered surgery solvers.
#[derive(Clone)]
pub enum SurgeryInput {
    Radial {
        problem: RadialProblem,
        mesh: Arc<Mesh1D>,
        opts: HermiteOptions,
        exact: Option<ExactRadial>,
    },
    Mixed {
        spec: ProblemSpec,
        space: MixedSpace,
        eps: f64,
        eps_start: f64,
        tau: f64,
        opts: MixedSolveOptions,
    },
}

pub type SolverBuilder = fn(SurgeryInput) -> Result<Box<dyn SurgerySolver>>;

pub struct SurgerySolverRegistry {
    builders: BTreeMap<&'static str, SolverBuilder>,
}

impl Default for SurgerySolverRegistry {
    fn default() -> Self {
        let mut r = SurgerySolverRegistry {
            builders: BTreeMap::new(),
        };
        r.register("radial", |input| match input {
            SurgeryInput::Radial {
                problem,
                mesh,
                opts,
                exact,
            } => Ok(Box::new(RadialSurgery::new(problem, mesh, opts, exact))),
            _ => invalid("the radial surgery solver needs radial input"),
        });
        r.register("mixed", |input| match input {
            SurgeryInput::Mixed {
                spec,
                space,
                eps,
                eps_start,
                tau,
                opts,
            } => Ok(Box::new(MixedSurgery::new(
                spec, space, eps, eps_start, tau, opts,
            ))),
            _ => invalid("the mixed surgery solver needs mixed input"),
        });
        r
    }
}

impl SurgerySolverRegistry {
    pub fn register(&mut self, name: &'static str, builder: SolverBuilder) {
        self.builders.insert(name, builder);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.builders.keys().copied().collect()
    }

    pub fn build(&self, name: &str, input: SurgeryInput) -> Result<Box<dyn SurgerySolver>> {
        match self.builders.get(name) {
            Some(b) => b(input),
            None => invalid(format!(
                "unknown surgery solver {name:?}; available: {}",
                self.names().join(", ")
            )),
        }
    }
}
