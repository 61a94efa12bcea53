//! Iterative boundary-layer surgery: solve, read the discrete second trace
//! a short distance inside the boundary, extend it outward and re-solve
//! with it as the new second-trace data.

mod extension;
mod solvers;

pub use extension::{
    ExtensionRegistry, LinearAlongNormal, MaxConstant, NearestInnerSample, TraceExtension,
    TraceSample, TraceTarget,
};
pub use solvers::{
    MixedSurgery, RadialSurgery, SolverBuilder, SurgeryErrors, SurgeryInput, SurgeryOutcome,
    SurgerySolver, SurgerySolverRegistry,
};

use crate::error::{invalid, Result, VmmError};
use crate::harness::format_sci;

#[derive(Debug, Clone, PartialEq)]
pub struct SurgeryConfig {
    /// Band width in units of eps.
    pub c_band: f64,
    /// Name of a mode in the [`ExtensionRegistry`].
    pub extension: String,
    pub iterations: usize,
}

impl Default for SurgeryConfig {
    fn default() -> Self {
        SurgeryConfig {
            c_band: 2.0,
            extension: "linear-along-normal".into(),
            iterations: 1,
        }
    }
}

/// One entry per pass; entry 0 is the uncorrected solve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SurgeryTrace {
    pub errors: Vec<Option<SurgeryErrors>>,
    /// Second-trace data used in each pass, in the solver's target order.
    pub boundary_values: Vec<Vec<f64>>,
}

impl SurgeryTrace {
    pub fn len(&self) -> usize {
        self.errors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }

    /// One row per pass: errors (empty without an exact solution) and the
    /// range of the imposed second trace.
    pub fn to_csv(&self) -> String {
        let cell = |v: Option<f64>| v.map(format_sci).unwrap_or_default();
        let mut out = String::from("iteration,err_L2,err_H1,err_Lap_Linf,trace_min,trace_max\n");
        for (i, (e, c)) in self.errors.iter().zip(&self.boundary_values).enumerate() {
            let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            out.push_str(&format!(
                "{i},{},{},{},{},{}\n",
                cell(e.map(|e| e.l2)),
                cell(e.map(|e| e.h1)),
                cell(e.map(|e| e.lap_linf)),
                format_sci(lo),
                format_sci(hi)
            ));
        }
        out
    }
}

pub fn surgical_solve(
    mut solver: Box<dyn SurgerySolver>,
    config: &SurgeryConfig,
    extensions: &ExtensionRegistry,
) -> Result<(SurgeryOutcome, SurgeryTrace)> {
    if config.iterations == 0 {
        return invalid("surgery needs at least one iteration");
    }
    let eps = solver.eps();
    if !(eps > 0.0) {
        return invalid(format!("surgery needs eps > 0, got {eps}"));
    }
    if !(config.c_band > 0.0) {
        return invalid(format!(
            "band factor must be positive, got {}",
            config.c_band
        ));
    }
    let d = config.c_band * eps;
    if d >= solver.half_width() {
        return invalid(format!(
            "band width {d} is not below half the domain width {}",
            solver.half_width()
        ));
    }
    let ext = extensions.get(&config.extension)?;
    let wrap = |iteration: usize| {
        move |e: VmmError| VmmError::Surgery {
            iteration,
            source: Box::new(e),
        }
    };
    let targets = solver.targets();
    let mut trace = SurgeryTrace::default();
    for it in 0..=config.iterations {
        if it > 0 {
            let samples = solver.sample(d).map_err(wrap(it))?;
            if samples.is_empty() {
                return Err(wrap(it)(VmmError::Internal("no inner-band samples".into())));
            }
            solver
                .set_trace(ext.extend(&samples, &targets))
                .map_err(wrap(it))?;
        }
        trace.boundary_values.push(solver.current_trace());
        solver.solve().map_err(wrap(it))?;
        trace.errors.push(solver.errors().map_err(wrap(it))?);
    }
    Ok((solver.finish()?, trace))
}
