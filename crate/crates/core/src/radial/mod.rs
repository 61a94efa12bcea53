//! Radially symmetric Monge-Ampere problems on the ball of radius `R`:
//! closed-form solutions, the reduced second order equation for
//! `w = r^{n-1} u_r`, and a direct Hermite discretization of the fourth
//! order problem.

mod diagnostics;
mod hermite;
mod reduced;

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::fem::quadrature::gauss_legendre;
use crate::nonlinearity::Branch;

pub use diagnostics::{
    convexity_report, node_values, radial_errors, ConvexityReport, RadialErrors,
};
pub use hermite::{solve_radial_fourth_order, solve_radial_hermite, HermiteOptions};
pub use reduced::{recover_u, solve_reduced_w, ReducedOptions};

pub type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `1/(n r^{n-1}) ((u_r)^n)_r = f` in the ball of radius `r_max`, `u = g_r`
/// on the sphere, regularized with parameter `eps`.
#[derive(Clone)]
pub struct RadialProblem {
    pub n: usize,
    pub r_max: f64,
    pub f: RadialFn,
    pub g_r: f64,
    pub eps: f64,
}

impl fmt::Debug for RadialProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProblem")
            .field("n", &self.n)
            .field("r_max", &self.r_max)
            .field("g_r", &self.g_r)
            .field("eps", &self.eps)
            .finish()
    }
}

impl RadialProblem {
    pub fn new(n: usize, r_max: f64, f: RadialFn, g_r: f64, eps: f64) -> Result<Self> {
        if n < 2 {
            return invalid(format!("dimension must be at least 2, got {n}"));
        }
        if !(r_max > 0.0) || !r_max.is_finite() {
            return invalid(format!("radius must be positive, got {r_max}"));
        }
        if eps == 0.0 || !eps.is_finite() {
            return invalid(format!("eps must be finite and nonzero, got {eps}"));
        }
        if !g_r.is_finite() {
            return invalid("boundary value must be finite");
        }
        Ok(RadialProblem {
            n,
            r_max,
            f,
            g_r,
            eps,
        })
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        RadialProblem::new(self.n, self.r_max, self.f.clone(), self.g_r, eps)
    }

    pub fn with_g_r(&self, g_r: f64) -> Result<Self> {
        RadialProblem::new(self.n, self.r_max, self.f.clone(), g_r, self.eps)
    }

    /// `f = (1 + r^2) e^{n r^2 / 2}`, whose convex solution with
    /// `g(1) = e^{1/2}` is `e^{r^2/2}`.
    pub fn exponential(n: usize, eps: f64) -> Result<Self> {
        let nf = n as f64;
        RadialProblem::new(
            n,
            1.0,
            Arc::new(move |r| (1.0 + r * r) * (0.5 * nf * r * r).exp()),
            0.5f64.exp(),
            eps,
        )
    }

    fn weight(&self, r: f64) -> f64 {
        r.powi(self.n as i32 - 1)
    }
}

/// Cumulative integral `G(r) = int_{x0}^r g` on a fixed panel partition,
/// with an 8-point Gauss rule per panel.
#[derive(Debug, Clone)]
pub(crate) struct PanelIntegral {
    edges: Vec<f64>,
    cum: Vec<f64>,
    gx: Vec<f64>,
    gw: Vec<f64>,
}

impl PanelIntegral {
    pub(crate) fn new(edges: Vec<f64>, g: impl Fn(f64) -> f64) -> Self {
        let (gx, gw) = gauss_legendre(8);
        let mut cum = Vec::with_capacity(edges.len());
        cum.push(0.0);
        let mut acc = 0.0;
        for win in edges.windows(2) {
            acc += gauss_sum(&gx, &gw, win[0], win[1], &g);
            cum.push(acc);
        }
        PanelIntegral { edges, cum, gx, gw }
    }

    pub(crate) fn uniform(a: f64, b: f64, m: usize, g: impl Fn(f64) -> f64) -> Self {
        let edges = (0..=m).map(|i| a + (b - a) * i as f64 / m as f64).collect();
        Self::new(edges, g)
    }

    pub(crate) fn total(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// `G(r)`; the partial panel is integrated with `g` again.
    pub(crate) fn eval(&self, r: f64, g: impl Fn(f64) -> f64) -> f64 {
        let m = self.edges.len() - 1;
        let j = self
            .edges
            .partition_point(|&x| x <= r)
            .saturating_sub(1)
            .min(m - 1);
        let a = self.edges[j];
        if r == a {
            return self.cum[j];
        }
        self.cum[j] + gauss_sum(&self.gx, &self.gw, a, r, &g)
    }
}

fn gauss_sum(gx: &[f64], gw: &[f64], a: f64, b: f64, g: &impl Fn(f64) -> f64) -> f64 {
    let h = b - a;
    gx.iter()
        .zip(gw)
        .map(|(&x, &w)| w * g(a + h * x))
        .sum::<f64>()
        * h
}

/// `L_f(r) = int_0^r t^{n-1} f(t) dt`, by composite Gauss quadrature
/// refined until two successive levels agree.
pub fn l_f(problem: &RadialProblem, r: f64) -> Result<f64> {
    if !(0.0..=problem.r_max).contains(&r) {
        return invalid(format!("r = {r} outside [0, {}]", problem.r_max));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let g = |t: f64| problem.weight(t) * (problem.f)(t);
    let mut m = 8;
    let mut prev = PanelIntegral::uniform(0.0, r, m, g).total();
    while m < 1 << 16 {
        m *= 2;
        let cur = PanelIntegral::uniform(0.0, r, m, g).total();
        if (cur - prev).abs() <= 1e-13 * cur.abs().max(1.0) {
            return Ok(cur);
        }
        prev = cur;
    }
    Ok(prev)
}

/// Value and derivatives of a radial function at one radius.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RadialJet {
    pub u: f64,
    pub u_r: f64,
    pub u_rr: f64,
    /// `u_rr + (n - 1) u_r / r`
    pub lap: f64,
}

/// Anything that can be evaluated as a radial profile on `(0, R]`.
pub trait RadialEval: Send + Sync {
    fn jet(&self, r: f64) -> RadialJet;
}

const EXACT_PANELS: usize = 4096;

/// `u(r) = g(R) -+ int_r^R (n L_f(s))^{1/n} ds`, tabulated on a fine panel
/// partition.
#[derive(Clone)]
pub struct ExactRadial {
    problem: RadialProblem,
    sign: f64,
    lf: PanelIntegral,
    ur: PanelIntegral,
}

impl fmt::Debug for ExactRadial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExactRadial")
            .field("problem", &self.problem)
            .field("sign", &self.sign)
            .finish()
    }
}

impl ExactRadial {
    fn lf_at(&self, r: f64) -> f64 {
        let p = &self.problem;
        self.lf.eval(r, |t| p.weight(t) * (p.f)(t)).max(0.0)
    }

    fn grad_mag(&self, r: f64) -> f64 {
        (self.problem.n as f64 * self.lf_at(r)).powf(1.0 / self.problem.n as f64)
    }
}

pub fn exact_radial_solution(problem: &RadialProblem, branch: Branch) -> Result<ExactRadial> {
    let sign = match branch {
        Branch::Convex => 1.0,
        Branch::Concave if problem.n % 2 == 0 => -1.0,
        Branch::Concave => {
            return invalid(format!(
                "no real concave solution for odd n = {}",
                problem.n
            ))
        }
    };
    let p = problem.clone();
    let lf = PanelIntegral::uniform(0.0, p.r_max, EXACT_PANELS, |t| p.weight(t) * (p.f)(t));
    let mut ex = ExactRadial {
        problem: problem.clone(),
        sign,
        ur: PanelIntegral::uniform(0.0, 1.0, 1, |_| 0.0),
        lf,
    };
    let ur = PanelIntegral::uniform(0.0, p.r_max, EXACT_PANELS, |t| ex.grad_mag(t));
    ex.ur = ur;
    Ok(ex)
}

impl RadialEval for ExactRadial {
    fn jet(&self, r: f64) -> RadialJet {
        let p = &self.problem;
        let nf = p.n as f64;
        let g = self.grad_mag(r);
        let u = p.g_r - self.sign * (self.ur.total() - self.ur.eval(r, |t| self.grad_mag(t)));
        let u_r = self.sign * g;
        let fr = (p.f)(r);
        // u_rr = r^{n-1} f (n L_f)^{(1-n)/n}, which tends to f(0)^{1/n} at 0
        let u_rr = if r < 1e-12 {
            self.sign * fr.max(0.0).powf(1.0 / nf)
        } else if g == 0.0 {
            0.0
        } else {
            self.sign * p.weight(r) * fr * g.powi(1 - p.n as i32)
        };
        let lap = if r < 1e-12 {
            nf * u_rr
        } else {
            u_rr + (nf - 1.0) * u_r / r
        };
        RadialJet { u, u_r, u_rr, lap }
    }
}

/// Discrete radial profile: either recovered from `w` by integration or a
/// Hermite finite element function.
#[derive(Clone)]
pub struct RadialField {
    n: usize,
    r_max: f64,
    g_r: f64,
    kind: FieldKind,
}

#[derive(Clone)]
enum FieldKind {
    Recovered {
        w: crate::fem::FieldFunction,
        table: PanelIntegral,
    },
    Hermite(crate::fem::FieldFunction),
}

impl fmt::Debug for RadialField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            FieldKind::Recovered { .. } => "recovered",
            FieldKind::Hermite(_) => "hermite",
        };
        f.debug_struct("RadialField")
            .field("n", &self.n)
            .field("kind", &kind)
            .finish()
    }
}

impl RadialField {
    pub fn hermite(n: usize, r_max: f64, g_r: f64, u: crate::fem::FieldFunction) -> Self {
        RadialField {
            n,
            r_max,
            g_r,
            kind: FieldKind::Hermite(u),
        }
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Underlying finite element function (`w` or `u`).
    pub fn coefficients(&self) -> &crate::fem::FieldFunction {
        match &self.kind {
            FieldKind::Recovered { w, .. } => w,
            FieldKind::Hermite(u) => u,
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.jet(r).u
    }
}

fn w_over_weight(w: &crate::fem::FieldFunction, n: usize, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    w.value([s, 0.0]).unwrap_or(0.0) / s.powi(n as i32 - 1)
}

impl RadialEval for RadialField {
    fn jet(&self, r: f64) -> RadialJet {
        let nf = self.n as f64;
        match &self.kind {
            FieldKind::Hermite(u) => {
                let j = u.eval([r, 0.0]).unwrap_or_default();
                let u_r = j.grad[0];
                let u_rr = j.hess[0][0];
                let lap = if r > 0.0 {
                    u_rr + (nf - 1.0) * u_r / r
                } else {
                    nf * u_rr
                };
                RadialJet {
                    u: j.value,
                    u_r,
                    u_rr,
                    lap,
                }
            }
            FieldKind::Recovered { w, table } => {
                let n = self.n;
                let u = self.g_r - (table.total() - table.eval(r, |s| w_over_weight(w, n, s)));
                let j = w.eval([r, 0.0]).unwrap_or_default();
                if r <= 0.0 {
                    return RadialJet {
                        u,
                        ..Default::default()
                    };
                }
                let rw = r.powi(n as i32 - 1);
                let u_r = j.value / rw;
                let lap = j.grad[0] / rw;
                let u_rr = lap - (nf - 1.0) * u_r / r;
                RadialJet { u, u_r, u_rr, lap }
            }
        }
    }
}

/// Converged radial solve: profile, convexity diagnostics and solver
/// history.
#[derive(Debug, Clone)]
pub struct RadialState {
    pub problem: RadialProblem,
    pub mesh: Arc<crate::mesh::Mesh1D>,
    pub u: RadialField,
    pub diagnostics: ConvexityReport,
    /// Relative update norms of the Picard stage (empty for Hermite solves).
    pub picard_history: Vec<f64>,
    pub report: crate::newton::NewtonReport,
}

impl RadialState {
    /// `w = r^{n-1} u_r` as a finite element function, when the state came
    /// from the reduced solver.
    pub fn w(&self) -> Option<&crate::fem::FieldFunction> {
        match &self.u.kind {
            FieldKind::Recovered { w, .. } => Some(w),
            FieldKind::Hermite(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l_f_examples() {
        let p = RadialProblem::new(3, 2.0, Arc::new(|_| 1.5), 0.0, 0.1).unwrap();
        assert!((l_f(&p, 1.3).unwrap() - 1.5 * 1.3f64.powi(3) / 3.0).abs() < 1e-13);
        let p = RadialProblem::exponential(2, 0.1).unwrap();
        for r in [0.0f64, 0.2, 0.77, 1.0] {
            let want = 0.5 * r * r * (r * r).exp();
            assert!((l_f(&p, r).unwrap() - want).abs() < 1e-12);
        }
        assert!(l_f(&p, 1.5).is_err());
        let z = RadialProblem::new(2, 1.0, Arc::new(|_| 0.0), 1.0, 0.1).unwrap();
        assert_eq!(l_f(&z, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn exact_examples() {
        let p = RadialProblem::new(2, 1.0, Arc::new(|_| 4.0), 1.0, 0.1).unwrap();
        let ex = exact_radial_solution(&p, Branch::Convex).unwrap();
        for r in [0.0, 0.3, 0.9, 1.0] {
            let j = ex.jet(r);
            assert!((j.u - r * r).abs() < 1e-13, "{r} {}", j.u);
            assert!((j.u_r - 2.0 * r).abs() < 1e-13);
            assert!((j.u_rr - 2.0).abs() < 1e-12);
        }
        let p = RadialProblem::exponential(2, 0.1).unwrap();
        let ex = exact_radial_solution(&p, Branch::Convex).unwrap();
        for r in [0.1, 0.5, 0.95] {
            let j = ex.jet(r);
            let e = (0.5 * r * r).exp();
            assert!((j.u - e).abs() < 1e-12);
            assert!((j.u_rr - (1.0 + r * r) * e).abs() < 1e-11);
            assert!((j.lap - (2.0 + r * r) * e).abs() < 1e-11);
        }
        let z = RadialProblem::new(2, 1.0, Arc::new(|_| 0.0), 0.7, 0.1).unwrap();
        let ex = exact_radial_solution(&z, Branch::Concave).unwrap();
        assert_eq!(ex.jet(0.4).u, 0.7);
        let odd = RadialProblem::new(3, 1.0, Arc::new(|_| 1.0), 0.0, -0.1).unwrap();
        assert!(exact_radial_solution(&odd, Branch::Concave).is_err());
    }
}
