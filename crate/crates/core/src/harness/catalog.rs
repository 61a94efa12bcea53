//! Manufactured test problems selected by id.
//!
//! Problems posed in three variables in their original form are used through
//! their two-variable sections with the source recomputed for two variables.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::fem::Jet2;
use crate::mesh::Point;
use crate::nonlinearity::{
    Branch, Gamma, GaussCurvature, InfinityLaplacian, MongeAmpere, ProblemSpec,
};
use crate::radial::RadialProblem;

/// Overrides for the parameters an entry fixes by default.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CatalogParams {
    pub gamma: Option<Gamma>,
    /// Prescribed curvature of Gauss curvature problems.
    pub curvature: Option<f64>,
}

#[derive(Debug, Clone)]
pub enum CatalogProblem {
    Mixed {
        spec: ProblemSpec,
        x_range: (f64, f64),
        y_range: (f64, f64),
        default_tau: f64,
    },
    /// Radial problem at `eps = 1`; the solve sets the actual value.
    Radial(RadialProblem),
}

impl CatalogProblem {
    pub fn exact(&self) -> Option<&crate::nonlinearity::ExactFn> {
        match self {
            CatalogProblem::Mixed { spec, .. } => spec.exact.as_ref(),
            CatalogProblem::Radial(_) => None,
        }
    }
}

pub type EntryBuilder = fn(&CatalogParams) -> Result<CatalogProblem>;

#[derive(Debug, Clone, Copy)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub summary: &'static str,
    pub build: EntryBuilder,
    /// `Delta^2 u` of the manufactured solution.
    pub bilaplacian: Option<fn(Point, f64) -> f64>,
    /// The manufactured solution solves the regularized equation for every
    /// eps; otherwise it solves the limit equation only.
    pub regularized_exact: bool,
    /// The second-trace data equals `D^2 u nu . nu` of the manufactured
    /// solution.
    pub trace_exact: bool,
}

pub struct ProblemCatalog {
    entries: BTreeMap<&'static str, CatalogEntry>,
}

fn s(x: Point) -> f64 {
    x[0] * x[0] + x[1] * x[1]
}

fn jet(value: f64, grad: [f64; 2], hess: [[f64; 2]; 2]) -> Jet2 {
    Jet2 { value, grad, hess }
}

fn exp_jet(x: Point) -> Jet2 {
    let v = (0.5 * s(x)).exp();
    jet(
        v,
        [x[0] * v, x[1] * v],
        [
            [(1.0 + x[0] * x[0]) * v, x[0] * x[1] * v],
            [x[0] * x[1] * v, (1.0 + x[1] * x[1]) * v],
        ],
    )
}

fn exp_bilaplacian(x: Point, _eps: f64) -> f64 {
    let r = s(x);
    (4.0 * (1.0 + r) + (2.0 + r).powi(2)) * (0.5 * r).exp()
}

fn quadratic_jet(x: Point) -> Jet2 {
    jet(s(x), [2.0 * x[0], 2.0 * x[1]], [[2.0, 0.0], [0.0, 2.0]])
}

fn zero_bilaplacian(_: Point, _: f64) -> f64 {
    0.0
}

fn hess_trace(h: [[f64; 2]; 2], nu: [f64; 2]) -> f64 {
    h[0][0] * nu[0] * nu[0] + 2.0 * h[0][1] * nu[0] * nu[1] + h[1][1] * nu[1] * nu[1]
}

const UNIT: (f64, f64) = (0.0, 1.0);
const CENTERED: (f64, f64) = (-0.5, 0.5);
const CAP: (f64, f64) = (-0.57, 0.57);

fn mixed(spec: ProblemSpec, range: (f64, f64), default_tau: f64) -> CatalogProblem {
    CatalogProblem::Mixed {
        spec,
        x_range: range,
        y_range: range,
        default_tau,
    }
}

fn ma_exp(_: &CatalogParams) -> Result<CatalogProblem> {
    let spec = ProblemSpec::new(
        "ma-exp",
        Arc::new(MongeAmpere),
        Arc::new(|x, _| (1.0 + s(x)) * s(x).exp()),
        Arc::new(|x| (0.5 * s(x)).exp()),
    )
    .with_g_grad(Arc::new(|x| exp_jet(x).grad))
    .with_exact(Arc::new(|x, _| exp_jet(x)));
    Ok(mixed(spec, UNIT, 0.0))
}

fn ma_quadratic(_: &CatalogParams) -> Result<CatalogProblem> {
    let spec = ProblemSpec::new(
        "ma-quadratic",
        Arc::new(MongeAmpere),
        Arc::new(|_, _| 4.0),
        Arc::new(s),
    )
    .with_g_grad(Arc::new(|x| [2.0 * x[0], 2.0 * x[1]]))
    .with_exact(Arc::new(|x, _| quadratic_jet(x)));
    Ok(mixed(spec, UNIT, 0.0))
}

fn ma_quadratic_trace(p: &CatalogParams) -> Result<CatalogProblem> {
    let CatalogProblem::Mixed { spec, .. } = ma_quadratic(p)? else {
        unreachable!()
    };
    let mut spec = spec.with_second_trace(Arc::new(|_, _, _| 2.0));
    spec.name = "ma-quadratic-trace".into();
    Ok(mixed(spec, UNIT, 0.0))
}

fn quartic_jet(x: Point) -> Jet2 {
    let (a, b) = (x[0], x[1]);
    jet(
        a.powi(4) + b * b,
        [4.0 * a.powi(3), 2.0 * b],
        [[12.0 * a * a, 0.0], [0.0, 2.0]],
    )
}

fn ma_quartic(_: &CatalogParams) -> Result<CatalogProblem> {
    let spec = ProblemSpec::new(
        "ma-quartic",
        Arc::new(MongeAmpere),
        Arc::new(|x, eps| 24.0 * x[0] * x[0] - 24.0 * eps),
        Arc::new(|x| quartic_jet(x).value),
    )
    .with_g_grad(Arc::new(|x| quartic_jet(x).grad))
    .with_second_trace(Arc::new(|x, nu, _| hess_trace(quartic_jet(x).hess, nu)))
    .with_exact(Arc::new(|x, _| quartic_jet(x)));
    Ok(mixed(spec, UNIT, 0.0))
}

fn gauss_exp(p: &CatalogParams) -> Result<CatalogProblem> {
    let k = p.curvature.unwrap_or(0.1);
    if k <= 0.0 {
        return invalid(format!("gauss-exp divides by the curvature, got {k}"));
    }
    let op = GaussCurvature::new(k)?;
    let spec = ProblemSpec::new(
        "gauss-exp",
        Arc::new(op),
        Arc::new(move |x, eps| {
            let r = s(x);
            let q = 1.0 + r * r.exp();
            ((1.0 + r) * r.exp() / (q * q) - eps * exp_bilaplacian(x, eps)) / k
        }),
        Arc::new(|x| (0.5 * s(x)).exp()),
    )
    .with_g_grad(Arc::new(|x| exp_jet(x).grad))
    .with_second_trace(Arc::new(|x, nu, _| hess_trace(exp_jet(x).hess, nu)))
    .with_exact(Arc::new(|x, _| exp_jet(x)));
    Ok(mixed(spec, UNIT, 0.0))
}

fn gauss_cap(p: &CatalogParams) -> Result<CatalogProblem> {
    let op = GaussCurvature::new(p.curvature.unwrap_or(1.0))?;
    let spec = ProblemSpec::new(
        "gauss-cap",
        Arc::new(op),
        Arc::new(|_, _| 1.0),
        Arc::new(|x| (1.0 - s(x)).sqrt()),
    )
    .with_g_grad(Arc::new(|x| {
        let w = (1.0 - s(x)).sqrt();
        [-x[0] / w, -x[1] / w]
    }))
    .with_branch(Branch::Concave);
    Ok(mixed(spec, CAP, 0.0))
}

fn inflap_quadratic(p: &CatalogParams) -> Result<CatalogProblem> {
    let gamma = p.gamma.unwrap_or(Gamma::EpsSquared);
    let spec = ProblemSpec::new(
        "inflap-quadratic",
        Arc::new(InfinityLaplacian::new(gamma)?),
        Arc::new(move |x, eps| 8.0 * s(x) / (4.0 * s(x) + gamma.value(eps))),
        Arc::new(s),
    )
    .with_g_grad(Arc::new(|x| [2.0 * x[0], 2.0 * x[1]]))
    .with_exact(Arc::new(|x, _| quadratic_jet(x)));
    Ok(mixed(spec, CENTERED, 1.0))
}

fn cosine_jet(x: Point) -> Jet2 {
    let (c1, c2) = (x[0].cos(), x[1].cos());
    jet(c1 - c2, [-x[0].sin(), x[1].sin()], [[-c1, 0.0], [0.0, c2]])
}

fn inflap_cosine(p: &CatalogParams) -> Result<CatalogProblem> {
    let gamma = p.gamma.unwrap_or(Gamma::EpsSquared);
    let spec = ProblemSpec::new(
        "inflap-cosine",
        Arc::new(InfinityLaplacian::new(gamma)?),
        Arc::new(move |x, eps| {
            let (c1, c2) = (x[0].cos(), x[1].cos());
            let (s1, s2) = (x[0].sin().powi(2), x[1].sin().powi(2));
            -eps * (c1 - c2) - (c1 * s1 - c2 * s2) / (s1 + s2 + gamma.value(eps))
        }),
        Arc::new(|x| cosine_jet(x).value),
    )
    .with_g_grad(Arc::new(|x| cosine_jet(x).grad))
    .with_second_trace(Arc::new(|x, nu, _| hess_trace(cosine_jet(x).hess, nu)))
    .with_exact(Arc::new(|x, _| cosine_jet(x)));
    Ok(mixed(spec, CENTERED, 1.0))
}

fn radial_exp(_: &CatalogParams) -> Result<CatalogProblem> {
    Ok(CatalogProblem::Radial(RadialProblem::exponential(2, 1.0)?))
}

impl Default for ProblemCatalog {
    fn default() -> Self {
        let mut c = ProblemCatalog {
            entries: BTreeMap::new(),
        };
        let entries = [
            CatalogEntry {
                id: "ma-exp",
                summary: "Monge-Ampere, u = exp(|x|^2/2) on (0,1)^2, eps-independent data",
                build: ma_exp,
                bilaplacian: Some(exp_bilaplacian),
                regularized_exact: false,
                trace_exact: false,
            },
            CatalogEntry {
                id: "ma-quadratic",
                summary: "Monge-Ampere, u = |x|^2 on (0,1)^2, second trace eps",
                build: ma_quadratic,
                bilaplacian: Some(zero_bilaplacian),
                regularized_exact: true,
                trace_exact: false,
            },
            CatalogEntry {
                id: "ma-quadratic-trace",
                summary: "Monge-Ampere, u = |x|^2 on (0,1)^2 with its exact second trace",
                build: ma_quadratic_trace,
                bilaplacian: Some(zero_bilaplacian),
                regularized_exact: true,
                trace_exact: true,
            },
            CatalogEntry {
                id: "ma-quartic",
                summary: "Monge-Ampere, u = x1^4 + x2^2 on (0,1)^2, f = 24 x1^2 - 24 eps",
                build: ma_quartic,
                bilaplacian: Some(|_, _| 24.0),
                regularized_exact: true,
                trace_exact: true,
            },
            CatalogEntry {
                id: "gauss-exp",
                summary: "Gauss curvature K = 0.1, u = exp(|x|^2/2) on (0,1)^2",
                build: gauss_exp,
                bilaplacian: Some(exp_bilaplacian),
                regularized_exact: true,
                trace_exact: true,
            },
            CatalogEntry {
                id: "gauss-cap",
                summary: "Gauss curvature K (default 1), f = 1, g = sqrt(1 - |x|^2) on (-0.57,0.57)^2, concave",
                build: gauss_cap,
                bilaplacian: None,
                regularized_exact: false,
                trace_exact: false,
            },
            CatalogEntry {
                id: "inflap-quadratic",
                summary: "infinity-Laplacian, u = |x|^2 on (-0.5,0.5)^2, second trace eps",
                build: inflap_quadratic,
                bilaplacian: Some(zero_bilaplacian),
                regularized_exact: true,
                trace_exact: false,
            },
            CatalogEntry {
                id: "inflap-cosine",
                summary: "infinity-Laplacian, u = cos x1 - cos x2 on (-0.5,0.5)^2",
                build: inflap_cosine,
                bilaplacian: Some(|x, _| x[0].cos() - x[1].cos()),
                regularized_exact: true,
                trace_exact: true,
            },
            CatalogEntry {
                id: "radial-exp",
                summary: "radial Monge-Ampere n = 2, u = exp(r^2/2) on the unit disk",
                build: radial_exp,
                bilaplacian: None,
                regularized_exact: false,
                trace_exact: false,
            },
        ];
        for e in entries {
            c.register(e);
        }
        c
    }
}

impl ProblemCatalog {
    pub fn register(&mut self, entry: CatalogEntry) {
        self.entries.insert(entry.id, entry);
    }

    pub fn ids(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn entry(&self, id: &str) -> Result<&CatalogEntry> {
        match self.entries.get(id) {
            Some(e) => Ok(e),
            None => invalid(format!(
                "unknown problem {id:?}; available: {}",
                self.ids().join(", ")
            )),
        }
    }

    pub fn build(&self, id: &str, params: &CatalogParams) -> Result<CatalogProblem> {
        (self.entry(id)?.build)(params)
    }
}
