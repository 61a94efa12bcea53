use std::fmt;
use std::sync::Arc;

use crate::fem::field::Jet2;
use crate::mesh::Point;
use crate::nonlinearity::operators::{LinearizationBlocks, NonlinearOperator, PointState};

pub type SourceFn = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;
/// Boundary second trace `phi(x, nu, eps)`.
pub type TraceFn = Arc<dyn Fn(Point, [f64; 2], f64) -> f64 + Send + Sync>;
pub type ExactFn = Arc<dyn Fn(Point, f64) -> Jet2 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Convex,
    Concave,
}

impl Branch {
    pub fn of_eps(eps: f64) -> Branch {
        if eps < 0.0 {
            Branch::Concave
        } else {
            Branch::Convex
        }
    }
}

/// A regularized problem `eps Delta^2 u + F(D^2 u, grad u, u, x) = 0`,
/// `u = g` and `D^2 u nu . nu = phi` on the boundary.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub operator: Arc<dyn NonlinearOperator>,
    /// Source `f(x, eps)`.
    pub source: SourceFn,
    pub g: ScalarFn,
    /// Analytic gradient of `g`, used for tangential derivatives.
    pub g_grad: Option<VectorFn>,
    pub second_trace: TraceFn,
    pub exact: Option<ExactFn>,
    pub branch: Branch,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("operator", &self.operator.name())
            .field("branch", &self.branch)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl ProblemSpec {
    /// Problem with homogeneous-in-`x` second trace `phi = eps`.
    pub fn new(
        name: impl Into<String>,
        operator: Arc<dyn NonlinearOperator>,
        source: SourceFn,
        g: ScalarFn,
    ) -> Self {
        ProblemSpec {
            name: name.into(),
            operator,
            source,
            g,
            g_grad: None,
            second_trace: Arc::new(|_, _, eps| eps),
            exact: None,
            branch: Branch::Convex,
        }
    }

    pub fn with_g_grad(mut self, g_grad: VectorFn) -> Self {
        self.g_grad = Some(g_grad);
        self
    }

    pub fn with_second_trace(mut self, phi: TraceFn) -> Self {
        self.second_trace = phi;
        self
    }

    pub fn with_exact(mut self, exact: ExactFn) -> Self {
        self.exact = Some(exact);
        self
    }

    pub fn with_branch(mut self, branch: Branch) -> Self {
        self.branch = branch;
        self
    }

    /// Full `F` including the scaled source.
    pub fn eval_f(&self, s: &PointState, eps: f64) -> f64 {
        self.operator.eval(s, eps) + self.operator.source_scale() * (self.source)(s.x, eps)
    }

    pub fn eval_fprime(&self, s: &PointState, eps: f64) -> LinearizationBlocks {
        self.operator.linearize(s, eps)
    }

    /// Tangential derivative of `g` along `t` at `x`: analytic if a gradient
    /// is available, else fourth-order central differences.
    pub fn dg_dtangent(&self, x: Point, t: [f64; 2]) -> f64 {
        if let Some(gg) = &self.g_grad {
            let d = gg(x);
            return d[0] * t[0] + d[1] * t[1];
        }
        let h = 1e-3;
        let at = |s: f64| (self.g)([x[0] + s * t[0], x[1] + s * t[1]]);
        (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h)
    }

    /// `eps Delta^2 u + F(D^2 u, grad u, u, x)` for a smooth field given with
    /// its biharmonic.
    pub fn strong_residual(&self, u: &Jet2, bilaplacian: f64, x: Point, eps: f64) -> f64 {
        let s = PointState {
            kappa: u.hess,
            p: u.grad,
            z: u.value,
            x,
        };
        eps * bilaplacian + self.eval_f(&s, eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::operators::MongeAmpere;

    #[test]
    fn quadratic_ma_is_exact() {
        let spec = ProblemSpec::new(
            "q",
            Arc::new(MongeAmpere),
            Arc::new(|_, _| 4.0),
            Arc::new(|x: Point| x[0] * x[0] + x[1] * x[1]),
        );
        let u = Jet2 {
            value: 0.0,
            grad: [0.0; 2],
            hess: [[2.0, 0.0], [0.0, 2.0]],
        };
        assert_eq!(spec.strong_residual(&u, 0.0, [0.3, 0.2], 0.01), 0.0);
        // fallback differences agree with the analytic tangent derivative
        let x = [0.3, 1.0];
        let d = spec.dg_dtangent(x, [-1.0, 0.0]);
        assert!((d + 0.6).abs() < 1e-10);
    }
}
