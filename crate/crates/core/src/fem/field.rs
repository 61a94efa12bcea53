//! Discrete fields and error norms.

use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::fem::basis::Basis;
use crate::fem::dofmap::DofKind;
use crate::fem::quadrature::Quadrature;
use crate::fem::space::FeSpace;
use crate::mesh::Point;

pub type Hessian = [[f64; 2]; 2];

/// Value, gradient and Hessian of a field at a point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: Hessian,
}

#[derive(Clone)]
pub struct FieldFunction {
    pub space: Arc<dyn FeSpace>,
    pub coeffs: Vec<f64>,
}

impl std::fmt::Debug for FieldFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FieldFunction")
            .field("basis", &self.space.basis())
            .field("n_dofs", &self.coeffs.len())
            .finish()
    }
}

impl FieldFunction {
    pub fn new(space: Arc<dyn FeSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.n_dofs() {
            return invalid(format!(
                "coefficient length {} != dof count {}",
                coeffs.len(),
                space.n_dofs()
            ));
        }
        Ok(FieldFunction { space, coeffs })
    }

    pub fn zeros(space: Arc<dyn FeSpace>) -> Self {
        let n = space.n_dofs();
        FieldFunction {
            space,
            coeffs: vec![0.0; n],
        }
    }

    /// Nodal interpolant; `deriv` supplies d/dx for Hermite slope dofs and is
    /// ignored for Lagrange spaces.
    pub fn interpolate(
        space: Arc<dyn FeSpace>,
        value: impl Fn(Point) -> f64,
        deriv: impl Fn(Point) -> f64,
    ) -> Self {
        let dm = space.dofmap();
        let coeffs = (0..dm.n_dofs)
            .map(|i| match dm.kinds[i] {
                DofKind::Value => value(dm.points[i]),
                DofKind::Slope => deriv(dm.points[i]),
            })
            .collect();
        FieldFunction { space, coeffs }
    }

    pub fn interpolate_lagrange(space: Arc<dyn FeSpace>, value: impl Fn(Point) -> f64) -> Self {
        Self::interpolate(space, value, |_| 0.0)
    }

    pub fn eval_on_element(&self, e: usize, xi: Point) -> Result<Jet2> {
        let ev = self.space.eval_on_element(e, xi)?;
        let dofs = self.space.dofmap().element(e);
        let mut j = Jet2::default();
        for (i, &d) in dofs.iter().enumerate() {
            let c = self.coeffs[d];
            j.value += c * ev.values[i];
            for a in 0..2 {
                j.grad[a] += c * ev.grads[i][a];
                for b in 0..2 {
                    j.hess[a][b] += c * ev.hessians[i][a][b];
                }
            }
        }
        Ok(j)
    }

    /// Evaluates at a physical point. Hessians are elementwise (broken)
    /// second derivatives.
    pub fn eval(&self, p: Point) -> Result<Jet2> {
        let (e, xi) = match self.space.locate(p) {
            Some(v) => v,
            None => return invalid(format!("point {p:?} outside the mesh")),
        };
        self.eval_on_element(e, xi)
    }

    pub fn value(&self, p: Point) -> Result<f64> {
        Ok(self.eval(p)?.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L2,
    /// Full H1 norm.
    H1,
    /// Full broken H2 norm.
    H2,
    /// Max of the pointwise error over quadrature points.
    LinfQuad,
}

/// Error between a discrete field and an exact function given with its
/// derivatives, integrated with `quad` on every element. `weight` multiplies
/// the measure (e.g. `r^{n-1}` for radial norms).
pub fn error_norm_weighted(
    u_h: &FieldFunction,
    exact: &dyn Fn(Point) -> Jet2,
    norm: Norm,
    quad: &Quadrature,
    weight: &dyn Fn(Point) -> f64,
) -> Result<f64> {
    let basis = u_h.space.basis();
    if norm == Norm::H2 && basis.degree() < 2 && basis != Basis::HermiteCubicInterval {
        return invalid("H2 error of a piecewise linear field; use the sigma field instead");
    }
    let space = &u_h.space;
    let mut acc = 0.0f64;
    for e in 0..space.n_elements() {
        let meas = space.measure_factor(e);
        for (xi, &w) in quad.points.iter().zip(&quad.weights) {
            let p = space.map_point(e, *xi);
            let uh = u_h.eval_on_element(e, *xi)?;
            let ex = exact(p);
            let dv = ex.value - uh.value;
            match norm {
                Norm::LinfQuad => acc = acc.max(dv.abs()),
                _ => {
                    let mut s = dv * dv;
                    if matches!(norm, Norm::H1 | Norm::H2) {
                        s += (0..2)
                            .map(|a| (ex.grad[a] - uh.grad[a]).powi(2))
                            .sum::<f64>();
                    }
                    if norm == Norm::H2 {
                        for a in 0..2 {
                            for b in 0..2 {
                                s += (ex.hess[a][b] - uh.hess[a][b]).powi(2);
                            }
                        }
                    }
                    acc += w * meas * weight(p) * s;
                }
            }
        }
    }
    Ok(if norm == Norm::LinfQuad {
        acc
    } else {
        acc.sqrt()
    })
}

pub fn error_norm(
    u_h: &FieldFunction,
    exact: &dyn Fn(Point) -> Jet2,
    norm: Norm,
    quad: &Quadrature,
) -> Result<f64> {
    error_norm_weighted(u_h, exact, norm, quad, &|_| 1.0)
}
