//! Generic element-loop assembly.

use crate::error::{Result, VmmError};
use crate::fem::space::{ElementValues, FeSpace};
use crate::sparse::SparseMatrix;

fn check_compatible(trial: &dyn FeSpace, test: &dyn FeSpace) -> Result<()> {
    if trial.n_elements() != test.n_elements()
        || trial.quadrature().len() != test.quadrature().len()
    {
        return Err(VmmError::Internal(
            "trial and test spaces must share mesh and quadrature".into(),
        ));
    }
    Ok(())
}

/// Assembles `A[test_i, trial_j] = sum_e K_e[i][j]`. The kernel returns the
/// local block row-major with `test.n` rows and `trial.n` columns.
pub fn assemble<F>(trial: &dyn FeSpace, test: &dyn FeSpace, mut kernel: F) -> Result<SparseMatrix>
where
    F: FnMut(&ElementValues, &ElementValues) -> Vec<f64>,
{
    check_compatible(trial, test)?;
    let mut ev_u = ElementValues::default();
    let mut ev_v = ElementValues::default();
    let mut triplets = Vec::new();
    for e in 0..trial.n_elements() {
        trial.element_values(e, &mut ev_u);
        test.element_values(e, &mut ev_v);
        let local = kernel(&ev_u, &ev_v);
        if local.len() != ev_u.n * ev_v.n {
            return Err(VmmError::Internal(format!(
                "kernel returned {} entries for a {}x{} block",
                local.len(),
                ev_v.n,
                ev_u.n
            )));
        }
        for (i, &gi) in ev_v.dofs.iter().enumerate() {
            for (j, &gj) in ev_u.dofs.iter().enumerate() {
                triplets.push((gi, gj, local[i * ev_u.n + j]));
            }
        }
    }
    SparseMatrix::from_triplets(test.n_dofs(), trial.n_dofs(), &triplets)
}

pub fn assemble_vector<F>(test: &dyn FeSpace, mut kernel: F) -> Result<Vec<f64>>
where
    F: FnMut(&ElementValues) -> Vec<f64>,
{
    let mut ev = ElementValues::default();
    let mut out = vec![0.0; test.n_dofs()];
    for e in 0..test.n_elements() {
        test.element_values(e, &mut ev);
        let local = kernel(&ev);
        if local.len() != ev.n {
            return Err(VmmError::Internal(format!(
                "kernel returned {} entries for {} local dofs",
                local.len(),
                ev.n
            )));
        }
        for (i, &g) in ev.dofs.iter().enumerate() {
            out[g] += local[i];
        }
    }
    Ok(out)
}

/// `(u, v)` kernel.
pub fn mass_kernel(u: &ElementValues, v: &ElementValues) -> Vec<f64> {
    let mut k = vec![0.0; u.n * v.n];
    for q in 0..u.nq {
        let w = u.weights[q];
        for i in 0..v.n {
            let vi = v.phi[q * v.n + i] * w;
            for j in 0..u.n {
                k[i * u.n + j] += vi * u.phi[q * u.n + j];
            }
        }
    }
    k
}

/// `(grad u, grad v)` kernel.
pub fn stiffness_kernel(u: &ElementValues, v: &ElementValues) -> Vec<f64> {
    let mut k = vec![0.0; u.n * v.n];
    for q in 0..u.nq {
        let w = u.weights[q];
        for i in 0..v.n {
            let gi = v.grad[q * v.n + i];
            for j in 0..u.n {
                let gj = u.grad[q * u.n + j];
                k[i * u.n + j] += w * (gi[0] * gj[0] + gi[1] * gj[1]);
            }
        }
    }
    k
}

/// Load vector `(f, v)`.
pub fn load_kernel(f: impl Fn([f64; 2]) -> f64) -> impl FnMut(&ElementValues) -> Vec<f64> {
    move |v: &ElementValues| {
        let mut out = vec![0.0; v.n];
        for q in 0..v.nq {
            let fw = f(v.points[q]) * v.weights[q];
            for (i, o) in out.iter_mut().enumerate() {
                *o += fw * v.phi[q * v.n + i];
            }
        }
        out
    }
}
