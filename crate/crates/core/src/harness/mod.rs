//! Experiment driver: problem catalog, eps and h sweeps with rate tables,
//! and the curvature search.

mod catalog;
mod kstar;
mod rates;
mod sweep;

pub use catalog::{CatalogEntry, CatalogParams, CatalogProblem, EntryBuilder, ProblemCatalog};
pub use kstar::{
    boundary_slope, check_monotone, estimate_k_star, Feasibility, KStarConfig, KStarEstimate,
    KStarSample,
};
pub(crate) use rates::check_params;
pub use rates::{estimate_rate, format_sci, ErrNorm, RateRow, RateTable, CSV_HEADER};
pub use sweep::{
    prolongate, run_sweep, solve_point, PointErrors, SolvedState, SweepConfig, SweepOutcome,
    SweepVariable, BUILD_ID,
};
