//! Largest curvature for which the Gauss curvature problem is solvable,
//! found by bisection on a feasibility test.

use std::sync::Arc;

use crate::error::{invalid, Result, VmmError};
use crate::harness::sweep::cells;
use crate::harness::{CatalogParams, CatalogProblem, ProblemCatalog};
use crate::mesh::{boundary_trace_quadrature, build_rect_mesh};
use crate::mixed::{
    continuation_solve, newton_solve, ContinuationSchedule, MixedSolveOptions, MixedSpace,
    MixedState,
};

/// When a curvature counts as feasible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Feasibility {
    /// Newton converges.
    Convergence,
    /// Newton converges and the largest boundary slope `|grad u_h|` stays
    /// below `factor` times its value at curvature 0. Past the critical
    /// curvature the slope blows up while Newton still converges.
    BoundedSlope { factor: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct KStarConfig {
    /// Catalog id of a Gauss curvature problem taking its curvature from
    /// [`CatalogParams::curvature`].
    pub problem: String,
    pub eps: f64,
    /// Start of the eps continuation of the curvature-0 solve.
    pub eps_start: f64,
    pub h: f64,
    pub degree: usize,
    pub k_hi: f64,
    pub k_tol: f64,
    /// Largest curvature increment of one Newton solve.
    pub k_step: f64,
    pub feasibility: Feasibility,
    pub opts: MixedSolveOptions,
}

impl Default for KStarConfig {
    fn default() -> Self {
        KStarConfig {
            problem: "gauss-cap".into(),
            eps: -1e-3,
            eps_start: -0.1,
            h: 0.05,
            degree: 2,
            k_hi: 4.0,
            k_tol: 0.05,
            k_step: 0.25,
            feasibility: Feasibility::BoundedSlope { factor: 1.25 },
            opts: MixedSolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KStarSample {
    pub k: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KStarEstimate {
    /// Largest boundary slope of the curvature-0 solution.
    pub base_slope: f64,
    /// Midpoint of the final bracket.
    pub k_star: f64,
    /// Largest feasible and smallest infeasible curvature tested.
    pub bracket: (f64, f64),
    /// Every feasibility test in the order performed.
    pub samples: Vec<KStarSample>,
}

impl KStarEstimate {
    pub fn width(&self) -> f64 {
        self.bracket.1 - self.bracket.0
    }
}

fn is_solver_failure(e: &VmmError) -> bool {
    matches!(
        e,
        VmmError::NonConvergence { .. }
            | VmmError::SingularMatrix { .. }
            | VmmError::NonFinite(_)
            | VmmError::Continuation { .. }
    )
}

/// Largest `|grad u_h|` at Gauss points of the boundary edges, evaluated
/// on the adjacent triangles.
pub fn boundary_slope(space: &MixedSpace, state: &MixedState) -> Result<f64> {
    let u = state.u_field(space);
    let mut m = 0.0f64;
    for bp in boundary_trace_quadrature(&space.mesh, space.k + 1)? {
        let tri = space.mesh.boundary_edges[bp.edge].triangle;
        let [a, b, c] = space.mesh.triangles[tri].map(|v| space.mesh.vertices[v]);
        let centroid = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
        // nudge toward the owning triangle so the lookup cannot pick a neighbour
        let p = [
            bp.point[0] + 1e-9 * (centroid[0] - bp.point[0]),
            bp.point[1] + 1e-9 * (centroid[1] - bp.point[1]),
        ];
        let g = u.eval(p)?.grad;
        m = m.max(g[0].hypot(g[1]));
    }
    Ok(m)
}

struct Oracle<'a> {
    catalog: &'a ProblemCatalog,
    cfg: &'a KStarConfig,
    space: MixedSpace,
    base_slope: f64,
}

impl Oracle<'_> {
    fn spec(&self, k: f64) -> Result<crate::nonlinearity::ProblemSpec> {
        let params = CatalogParams {
            curvature: Some(k),
            ..Default::default()
        };
        match self.catalog.build(&self.cfg.problem, &params)? {
            CatalogProblem::Mixed { spec, .. } => Ok(spec),
            CatalogProblem::Radial(_) => invalid("the curvature search needs a mixed problem"),
        }
    }

    /// Continues in the curvature from `(k0, s0)` to `k`.
    fn advance(&self, k0: f64, s0: &MixedState, k: f64) -> Result<Option<MixedState>> {
        let steps = ((k - k0) / self.cfg.k_step).ceil().max(1.0) as usize;
        let mut state = s0.clone();
        for i in 1..=steps {
            let ki = k0 + (k - k0) * i as f64 / steps as f64;
            match newton_solve(&self.spec(ki)?, &self.space, &state, &self.cfg.opts) {
                Ok((s, _)) => state = s,
                Err(e) if is_solver_failure(&e) => return Ok(None),
                Err(e) => return Err(e),
            }
        }
        if let Feasibility::BoundedSlope { factor } = self.cfg.feasibility {
            if boundary_slope(&self.space, &state)? > factor * self.base_slope {
                return Ok(None);
            }
        }
        Ok(Some(state))
    }
}

pub fn estimate_k_star(cfg: &KStarConfig, catalog: &ProblemCatalog) -> Result<KStarEstimate> {
    if !(cfg.eps < 0.0) {
        return invalid(format!(
            "the curvature search runs on the concave branch (eps < 0), got {}",
            cfg.eps
        ));
    }
    if !(cfg.k_tol > 0.0) || !(cfg.k_hi > 0.0) || !(cfg.k_step > 0.0) || !(cfg.h > 0.0) {
        return invalid("k_tol, k_hi, k_step and h must be positive");
    }
    let (x_range, y_range) = match catalog.build(&cfg.problem, &CatalogParams::default())? {
        CatalogProblem::Mixed {
            x_range, y_range, ..
        } => (x_range, y_range),
        CatalogProblem::Radial(_) => return invalid("the curvature search needs a mixed problem"),
    };
    let mesh = Arc::new(build_rect_mesh(
        x_range,
        y_range,
        cells(x_range, cfg.h),
        cells(y_range, cfg.h),
    )?);
    if let Feasibility::BoundedSlope { factor } = cfg.feasibility {
        if !(factor > 1.0) {
            return invalid(format!("slope factor must exceed 1, got {factor}"));
        }
    }
    let mut oracle = Oracle {
        catalog,
        cfg,
        space: MixedSpace::new(mesh, cfg.degree)?,
        base_slope: 0.0,
    };
    let mut samples = Vec::new();
    let base = match continuation_solve(
        &oracle.spec(0.0)?,
        &oracle.space,
        cfg.eps,
        cfg.eps_start,
        0.0,
        &ContinuationSchedule::default(),
        &cfg.opts,
    ) {
        Ok((s, _)) => s,
        Err(e) if is_solver_failure(&e) => {
            return invalid(format!("curvature 0 is infeasible: {e}"));
        }
        Err(e) => return Err(e),
    };
    oracle.base_slope = boundary_slope(&oracle.space, &base)?;
    samples.push(KStarSample {
        k: 0.0,
        feasible: true,
    });
    let (mut lo, mut hi) = (0.0, cfg.k_hi);
    let mut lo_state = base;
    match oracle.advance(lo, &lo_state, hi)? {
        Some(_) => {
            samples.push(KStarSample {
                k: hi,
                feasible: true,
            });
            return invalid(format!(
                "curvature {hi} is still feasible; raise the upper bound"
            ));
        }
        None => samples.push(KStarSample {
            k: hi,
            feasible: false,
        }),
    }
    while hi - lo > cfg.k_tol {
        let mid = 0.5 * (lo + hi);
        match oracle.advance(lo, &lo_state, mid)? {
            Some(s) => {
                lo = mid;
                lo_state = s;
                samples.push(KStarSample {
                    k: mid,
                    feasible: true,
                });
            }
            None => {
                hi = mid;
                samples.push(KStarSample {
                    k: mid,
                    feasible: false,
                });
            }
        }
    }
    check_monotone(&samples)?;
    Ok(KStarEstimate {
        base_slope: oracle.base_slope,
        k_star: 0.5 * (lo + hi),
        bracket: (lo, hi),
        samples,
    })
}

/// Every feasible sample must lie below every infeasible one.
pub fn check_monotone(samples: &[KStarSample]) -> Result<()> {
    let max_ok = samples
        .iter()
        .filter(|s| s.feasible)
        .map(|s| s.k)
        .fold(f64::NEG_INFINITY, f64::max);
    let min_bad = samples
        .iter()
        .filter(|s| !s.feasible)
        .map(|s| s.k)
        .fold(f64::INFINITY, f64::min);
    if max_ok >= min_bad {
        let list: Vec<String> = samples
            .iter()
            .map(|s| format!("{}:{}", s.k, if s.feasible { "ok" } else { "fail" }))
            .collect();
        return Err(VmmError::Internal(format!(
            "feasibility is not monotone in the curvature: {}",
            list.join(", ")
        )));
    }
    Ok(())
}
