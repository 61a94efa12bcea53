use crate::fem::quadrature::gauss_legendre;
use crate::mesh::Mesh1D;
use crate::radial::RadialEval;

/// Convexity of a radial profile measured at Gauss points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityReport {
    pub min_laplacian: f64,
    pub min_laplacian_at: f64,
    /// `R - r_*` where `r_*` is the smallest sampled radius with `u_rr < 0`;
    /// zero when no such point exists.
    pub band_width: f64,
    /// Smallest sampled `r^{n-1} u_r`.
    pub min_w: f64,
}

const DIAG_POINTS: usize = 5;

pub fn convexity_report(u: &dyn RadialEval, mesh: &Mesh1D, n: usize) -> ConvexityReport {
    let (gx, _) = gauss_legendre(DIAG_POINTS);
    let mut rep = ConvexityReport {
        min_laplacian: f64::INFINITY,
        min_laplacian_at: 0.0,
        band_width: 0.0,
        min_w: f64::INFINITY,
    };
    let mut r_star = f64::INFINITY;
    for e in 0..mesh.n_elements() {
        let (a, b) = mesh.element_bounds(e);
        for &x in &gx {
            let r = a + (b - a) * x;
            let j = u.jet(r);
            if j.lap < rep.min_laplacian {
                rep.min_laplacian = j.lap;
                rep.min_laplacian_at = r;
            }
            if j.u_rr < 0.0 {
                r_star = r_star.min(r);
            }
            rep.min_w = rep.min_w.min(r.powi(n as i32 - 1) * j.u_r);
        }
    }
    if r_star.is_finite() {
        rep.band_width = mesh.r_max - r_star;
    }
    rep
}

/// Errors in the weighted norms `L^2(r^{n-1} dr)` of `u`, `u_r` and the
/// radial Laplacian, plus the max of `|u - u_h|` at Gauss points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialErrors {
    pub l2: f64,
    pub d1: f64,
    pub lap: f64,
    pub linf: f64,
}

pub fn radial_errors(
    u: &dyn RadialEval,
    exact: &dyn RadialEval,
    mesh: &Mesh1D,
    n: usize,
) -> RadialErrors {
    let (gx, gw) = gauss_legendre(8);
    let (mut l2, mut d1, mut lap, mut linf) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for e in 0..mesh.n_elements() {
        let (a, b) = mesh.element_bounds(e);
        let h = b - a;
        for (&x, &w) in gx.iter().zip(&gw) {
            let r = a + h * x;
            let ju = u.jet(r);
            let je = exact.jet(r);
            let m = w * h * r.powi(n as i32 - 1);
            let du = ju.u - je.u;
            l2 += m * du * du;
            d1 += m * (ju.u_r - je.u_r).powi(2);
            lap += m * (ju.lap - je.lap).powi(2);
            linf = linf.max(du.abs());
        }
    }
    RadialErrors {
        l2: l2.sqrt(),
        d1: d1.sqrt(),
        lap: lap.sqrt(),
        linf,
    }
}

/// Values of a profile at the mesh nodes.
pub fn node_values(u: &dyn RadialEval, mesh: &Mesh1D) -> Vec<f64> {
    mesh.nodes.iter().map(|&r| u.jet(r).u).collect()
}
