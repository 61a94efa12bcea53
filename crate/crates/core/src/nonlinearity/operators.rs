//! Pointwise nonlinear operators `F(r, p, z, x)` and their derivatives,
//! behind a common trait and a by-name registry.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::mesh::Point;
use crate::nonlinearity::cofactor::{cofactor, det, matvec, Sym2};

/// Second derivatives `r`, gradient `p`, value `z` at point `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointState {
    pub kappa: Sym2,
    pub p: [f64; 2],
    pub z: f64,
    pub x: Point,
}

/// Partial derivatives of `F` with respect to `r_ij`, `p_i` and `z`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinearizationBlocks {
    pub f_r: Sym2,
    pub f_p: [f64; 2],
    pub f_z: f64,
}

impl LinearizationBlocks {
    /// Directional derivative `F_r : dk + F_p . dp + F_z dz`.
    pub fn apply(&self, dk: &Sym2, dp: [f64; 2], dz: f64) -> f64 {
        let mut s = self.f_p[0] * dp[0] + self.f_p[1] * dp[1] + self.f_z * dz;
        for i in 0..2 {
            for j in 0..2 {
                s += self.f_r[i][j] * dk[i][j];
            }
        }
        s
    }
}

/// `F(r, p, z, x) = N(r, p, z) + scale * f(x)`: the operator supplies the
/// state-dependent part `N` and the factor on the source term.
pub trait NonlinearOperator: Send + Sync + Debug {
    fn name(&self) -> &'static str;
    /// State part of `F` at regularization parameter `eps`.
    fn eval(&self, s: &PointState, eps: f64) -> f64;
    fn linearize(&self, s: &PointState, eps: f64) -> LinearizationBlocks;
    /// Multiplier applied to the source `f(x)`.
    fn source_scale(&self) -> f64 {
        1.0
    }
    /// Determinant-type operators get a Poisson initial guess driven by the
    /// square root of the target determinant.
    fn is_determinant_type(&self) -> bool {
        false
    }
}

/// `F = f - det r`.
#[derive(Debug, Clone, Copy, Default)]
pub struct MongeAmpere;

impl NonlinearOperator for MongeAmpere {
    fn name(&self) -> &'static str {
        "monge-ampere"
    }

    fn eval(&self, s: &PointState, _eps: f64) -> f64 {
        -det(&s.kappa)
    }

    fn linearize(&self, s: &PointState, _eps: f64) -> LinearizationBlocks {
        let c = cofactor(&s.kappa);
        LinearizationBlocks {
            f_r: [[-c[0][0], -c[0][1]], [-c[1][0], -c[1][1]]],
            f_p: [0.0; 2],
            f_z: 0.0,
        }
    }

    fn is_determinant_type(&self) -> bool {
        true
    }
}

/// `F = -det r / (1 + |p|^2)^2 + K f`.
#[derive(Debug, Clone, Copy)]
pub struct GaussCurvature {
    pub k: f64,
}

impl GaussCurvature {
    pub fn new(k: f64) -> Result<Self> {
        if !(k >= 0.0) || !k.is_finite() {
            return invalid(format!("Gauss curvature K must be nonnegative, got {k}"));
        }
        Ok(GaussCurvature { k })
    }
}

impl NonlinearOperator for GaussCurvature {
    fn name(&self) -> &'static str {
        "gauss-curvature"
    }

    fn eval(&self, s: &PointState, _eps: f64) -> f64 {
        let q = 1.0 + s.p[0] * s.p[0] + s.p[1] * s.p[1];
        -det(&s.kappa) / (q * q)
    }

    fn linearize(&self, s: &PointState, _eps: f64) -> LinearizationBlocks {
        let q = 1.0 + s.p[0] * s.p[0] + s.p[1] * s.p[1];
        let c = cofactor(&s.kappa);
        let q2 = q * q;
        let d = det(&s.kappa);
        let fp = 4.0 * d / (q2 * q);
        LinearizationBlocks {
            f_r: [
                [-c[0][0] / q2, -c[0][1] / q2],
                [-c[1][0] / q2, -c[1][1] / q2],
            ],
            f_p: [fp * s.p[0], fp * s.p[1]],
            f_z: 0.0,
        }
    }

    fn source_scale(&self) -> f64 {
        self.k
    }

    fn is_determinant_type(&self) -> bool {
        true
    }
}

/// How the infinity-Laplacian regularization `gamma` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    Fixed(f64),
    /// `gamma = eps^2`
    EpsSquared,
}

impl Gamma {
    pub fn value(self, eps: f64) -> f64 {
        match self {
            Gamma::Fixed(g) => g,
            Gamma::EpsSquared => eps * eps,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Gamma::EpsSquared);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(Gamma::Fixed(v)),
            _ => invalid(format!("gamma must be positive or 'auto', got {s:?}")),
        }
    }
}

/// `F = -(r p . p) / (|p|^2 + gamma) + f`.
#[derive(Debug, Clone, Copy)]
pub struct InfinityLaplacian {
    pub gamma: Gamma,
}

impl InfinityLaplacian {
    pub fn new(gamma: Gamma) -> Result<Self> {
        if let Gamma::Fixed(g) = gamma {
            if !(g > 0.0) || !g.is_finite() {
                return invalid(format!(
                    "infinity-Laplacian gamma must be positive, got {g}"
                ));
            }
        }
        Ok(InfinityLaplacian { gamma })
    }
}

impl NonlinearOperator for InfinityLaplacian {
    fn name(&self) -> &'static str {
        "infinity-laplacian"
    }

    fn eval(&self, s: &PointState, eps: f64) -> f64 {
        let g = self.gamma.value(eps);
        let kp = matvec(&s.kappa, s.p);
        let num = kp[0] * s.p[0] + kp[1] * s.p[1];
        -num / (s.p[0] * s.p[0] + s.p[1] * s.p[1] + g)
    }

    fn linearize(&self, s: &PointState, eps: f64) -> LinearizationBlocks {
        let g = self.gamma.value(eps);
        let p = s.p;
        let d = p[0] * p[0] + p[1] * p[1] + g;
        let kp = matvec(&s.kappa, p);
        let num = kp[0] * p[0] + kp[1] * p[1];
        let mut f_r = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                f_r[i][j] = -p[i] * p[j] / d;
            }
        }
        // d/dp of (kappa p . p) uses the symmetric part of kappa
        let ks = [
            (s.kappa[0][0]) * p[0] + 0.5 * (s.kappa[0][1] + s.kappa[1][0]) * p[1],
            0.5 * (s.kappa[0][1] + s.kappa[1][0]) * p[0] + s.kappa[1][1] * p[1],
        ];
        let f_p = [
            -2.0 * ks[0] / d + 2.0 * num * p[0] / (d * d),
            -2.0 * ks[1] / d + 2.0 * num * p[1] / (d * d),
        ];
        LinearizationBlocks { f_r, f_p, f_z: 0.0 }
    }
}

/// Parameters that select and configure an operator by name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorParams {
    pub k: f64,
    pub gamma: Gamma,
}

impl Default for OperatorParams {
    fn default() -> Self {
        OperatorParams {
            k: 1.0,
            gamma: Gamma::EpsSquared,
        }
    }
}

type Builder = fn(&OperatorParams) -> Result<Arc<dyn NonlinearOperator>>;

/// Name-to-constructor table of the available operators.
pub struct OperatorRegistry {
    builders: BTreeMap<&'static str, Builder>,
}

impl Default for OperatorRegistry {
    fn default() -> Self {
        let mut r = OperatorRegistry {
            builders: BTreeMap::new(),
        };
        r.register("monge-ampere", |_| Ok(Arc::new(MongeAmpere)));
        r.register("gauss-curvature", |p| {
            Ok(Arc::new(GaussCurvature::new(p.k)?))
        });
        r.register("infinity-laplacian", |p| {
            Ok(Arc::new(InfinityLaplacian::new(p.gamma)?))
        });
        r
    }
}

impl OperatorRegistry {
    pub fn register(&mut self, name: &'static str, b: Builder) {
        self.builders.insert(name, b);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.builders.keys().copied().collect()
    }

    pub fn build(&self, name: &str, params: &OperatorParams) -> Result<Arc<dyn NonlinearOperator>> {
        match self.builders.get(name) {
            Some(b) => b(params),
            None => invalid(format!(
                "unknown operator {name:?}; available: {}",
                self.names().join(", ")
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(kappa: Sym2, p: [f64; 2]) -> PointState {
        PointState {
            kappa,
            p,
            z: 0.0,
            x: [0.0, 0.0],
        }
    }

    #[test]
    fn spot_values() {
        let two_i = [[2.0, 0.0], [0.0, 2.0]];
        let ma = MongeAmpere;
        assert_eq!(ma.eval(&st(two_i, [0.0; 2]), 0.1) + 4.0, 0.0);
        let g = GaussCurvature::new(0.1).unwrap();
        let v = g.eval(&st([[1.0, 0.0], [0.0, 1.0]], [0.0; 2]), 0.1) + g.source_scale() * 1.0;
        assert!((v + 0.9).abs() < 1e-15);
        let il = InfinityLaplacian::new(Gamma::Fixed(1e-4)).unwrap();
        let v = il.eval(&st(two_i, [2.0, 0.0]), 0.1);
        assert!((v + 8.0 / (4.0 + 1e-4)).abs() < 1e-15);
        let b = il.linearize(&st(two_i, [0.0, 0.0]), 0.1);
        assert_eq!(b.f_r, [[0.0; 2]; 2]);
        let b = ma.linearize(&st([[1.0, 0.0], [0.0, 1.0]], [0.0; 2]), 0.1);
        assert_eq!(b.f_r, [[-1.0, 0.0], [0.0, -1.0]]);
    }

    #[test]
    fn registry_lookup() {
        let r = OperatorRegistry::default();
        let p = OperatorParams::default();
        assert_eq!(
            r.build("gauss-curvature", &p).unwrap().name(),
            "gauss-curvature"
        );
        assert!(r.build("nope", &p).is_err());
        assert!(InfinityLaplacian::new(Gamma::Fixed(0.0)).is_err());
        assert!(Gamma::parse("auto").unwrap() == Gamma::EpsSquared);
        assert!(Gamma::parse("-1").is_err());
    }
}
